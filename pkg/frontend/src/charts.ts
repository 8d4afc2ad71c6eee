/** SVG line-chart geometry. Pure functions over service-provided numbers;
 * no values are computed here beyond pixel coordinates. */

export interface Extent {
  min: number;
  max: number;
}

export function extentOf(values: number[]): Extent {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (min === max) {
    // flat series: pad so the line sits mid-chart
    min -= 1;
    max += 1;
  }
  return { min, max };
}

export const DOWNSAMPLE_THRESHOLD = 2000;

/** Min-max bucket downsampling for display only. Series at or below the
 * threshold are returned untouched so the chart point count equals T. */
export function displaySeries(values: number[], threshold = DOWNSAMPLE_THRESHOLD): number[] {
  if (values.length <= threshold) return values;
  const buckets = Math.ceil(threshold / 2);
  const size = values.length / buckets;
  const out: number[] = [];
  for (let b = 0; b < buckets; b++) {
    const start = Math.floor(b * size);
    const end = Math.min(values.length, Math.max(start + 1, Math.floor((b + 1) * size)));
    let lo = values[start];
    let hi = values[start];
    let loIdx = start;
    let hiIdx = start;
    for (let i = start; i < end; i++) {
      if (values[i] < lo) {
        lo = values[i];
        loIdx = i;
      }
      if (values[i] > hi) {
        hi = values[i];
        hiIdx = i;
      }
    }
    // keep temporal order inside the bucket
    if (loIdx <= hiIdx) out.push(lo, hi);
    else out.push(hi, lo);
  }
  return out;
}

/** Polyline path for one channel, scaled into a width x height box. */
export function linePath(
  values: number[],
  width: number,
  height: number,
  extent?: Extent,
): string {
  const series = displaySeries(values);
  const { min, max } = extent ?? extentOf(series);
  const n = series.length;
  if (n === 0) return "";
  if (n === 1) return `M0,${height / 2}`;
  const step = width / (n - 1);
  const scale = (v: number) => height - ((v - min) / (max - min)) * height;
  let d = `M0,${round2(scale(series[0]))}`;
  for (let i = 1; i < n; i++) {
    d += `L${round2(i * step)},${round2(scale(series[i]))}`;
  }
  return d;
}

export function sparklinePath(values: number[], width: number, height: number): string {
  return linePath(values, width, height);
}

function round2(x: number): number {
  return Math.round(x * 100) / 100;
}

export function svgChart(values: number[], width: number, height: number): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("preserveAspectRatio", "none");
  svg.classList.add("line-chart");
  const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
  path.setAttribute("d", linePath(values, width, height));
  path.setAttribute("fill", "none");
  svg.appendChild(path);
  return svg;
}
