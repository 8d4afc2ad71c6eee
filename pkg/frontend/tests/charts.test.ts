import { describe, expect, it } from "vitest";

import {
  DOWNSAMPLE_THRESHOLD,
  displaySeries,
  extentOf,
  linePath,
} from "../src/charts.js";

describe("displaySeries", () => {
  it("keeps short series untouched so chart points equal T", () => {
    const series = Array.from({ length: 128 }, (_, i) => Math.sin(i / 5));
    expect(displaySeries(series)).toBe(series);
  });

  it("keeps series exactly at the threshold untouched", () => {
    const series = new Array(DOWNSAMPLE_THRESHOLD).fill(0).map((_, i) => i);
    expect(displaySeries(series)).toBe(series);
  });

  it("downsamples long series to at most threshold points", () => {
    const series = Array.from({ length: 4000 }, (_, i) => Math.sin(i / 7));
    const out = displaySeries(series);
    expect(out.length).toBeLessThanOrEqual(DOWNSAMPLE_THRESHOLD);
    expect(out.length).toBeGreaterThan(0);
  });

  it("preserves global extremes (min-max buckets)", () => {
    const series = Array.from({ length: 5000 }, (_, i) => Math.cos(i / 11));
    series[1234] = 42; // spike must survive downsampling
    series[4321] = -42;
    const out = displaySeries(series);
    expect(Math.max(...out)).toBe(42);
    expect(Math.min(...out)).toBe(-42);
  });
});

describe("linePath", () => {
  it("spans the full width and stays in the box", () => {
    const d = linePath([0, 1, 0.5, 0.25], 300, 100);
    expect(d.startsWith("M0,")).toBe(true);
    expect(d).toContain("L300,");
    const ys = [...d.matchAll(/[ML][\d.]+,([\d.-]+)/g)].map((m) => Number(m[1]));
    for (const y of ys) {
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(100);
    }
  });

  it("maps min to the bottom and max to the top", () => {
    const d = linePath([0, 1], 100, 50);
    expect(d).toBe("M0,50L100,0");
  });

  it("centers a flat series", () => {
    const d = linePath([3, 3, 3], 100, 50);
    const ys = [...d.matchAll(/[ML][\d.]+,([\d.-]+)/g)].map((m) => Number(m[1]));
    for (const y of ys) expect(y).toBe(25);
  });
});

describe("extentOf", () => {
  it("finds min and max", () => {
    expect(extentOf([2, -1, 5])).toEqual({ min: -1, max: 5 });
  });

  it("pads flat series", () => {
    expect(extentOf([4, 4])).toEqual({ min: 3, max: 5 });
  });
});
