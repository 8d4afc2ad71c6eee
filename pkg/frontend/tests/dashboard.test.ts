import { beforeEach, describe, expect, it, vi } from "vitest";

import { renderDashboard } from "../src/dashboard.js";
import type { CurveResponse, SessionHandle } from "../src/types.js";

const HANDLE: SessionHandle = {
  session_id: "s9",
  status: "awaiting_label",
  dataset: "bench",
  progress: {
    labeled: 5,
    budget: 20,
    batch_size: 1,
    queries_issued: 4,
    mean_pool_uncertainty: 0.31,
    status: "awaiting_label",
    class_names: ["walking", "sitting"],
  },
};

const CURVE: CurveResponse = {
  session_id: "s9",
  points: [
    { query_count: 1, accuracy: null, mean_pool_uncertainty: 0.0 },
    { query_count: 2, accuracy: null, mean_pool_uncertainty: 0.4 },
    { query_count: 3, accuracy: null, mean_pool_uncertainty: 0.35 },
    { query_count: 4, accuracy: null, mean_pool_uncertainty: 0.3 },
    { query_count: 5, accuracy: null, mean_pool_uncertainty: 0.28 },
  ],
  label_history: [
    { instance_id: "a", class_name: "walking", sequence: 2 },
    { instance_id: "b", class_name: "walking", sequence: 5 },
    { instance_id: "c", class_name: "sitting", sequence: 8 },
    { instance_id: "d", class_name: "walking", sequence: 11 },
    { instance_id: "e", class_name: "sitting", sequence: 14 },
  ],
};

describe("renderDashboard", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "<div id='root'></div>";
    root = document.getElementById("root")!;
  });

  it("shows labeled/budget progress from the handle", () => {
    renderDashboard(root, { handle: HANDLE, curve: CURVE, stale: false,
                            pollingPaused: false },
                    { onTogglePolling: () => {} });
    expect(root.querySelector(".dash-progress")!.textContent).toBe("5/20 labeled");
    expect((root.querySelector(".progress-fill") as HTMLElement).style.width)
      .toBe("25.0%");
  });

  it("per-class counts equal the committed label history", () => {
    renderDashboard(root, { handle: HANDLE, curve: CURVE, stale: false,
                            pollingPaused: false },
                    { onTogglePolling: () => {} });
    const rows = [...root.querySelectorAll(".class-count-row")].map((r) => [
      r.querySelector(".class-count-name")!.textContent,
      r.querySelector(".class-count-value")!.textContent,
    ]);
    expect(rows).toEqual([
      ["sitting", "2"],
      ["walking", "3"],
    ]);
  });

  it("sparkline carries one point per curve entry", () => {
    renderDashboard(root, { handle: HANDLE, curve: CURVE, stale: false,
                            pollingPaused: false },
                    { onTogglePolling: () => {} });
    expect(root.querySelector(".spark-points")!.textContent).toBe("5 points");
    const d = root.querySelector(".sparkline path")!.getAttribute("d")!;
    expect((d.match(/[ML]/g) ?? []).length).toBe(5);
  });

  it("marks the view stale on network trouble", () => {
    renderDashboard(root, { handle: HANDLE, curve: CURVE, stale: true,
                            pollingPaused: false },
                    { onTogglePolling: () => {} });
    expect(root.querySelector(".stale-badge")).not.toBeNull();
  });

  it("pause/resume control toggles through the handler", () => {
    const onTogglePolling = vi.fn();
    renderDashboard(root, { handle: HANDLE, curve: CURVE, stale: false,
                            pollingPaused: true },
                    { onTogglePolling });
    const button = root.querySelector<HTMLButtonElement>(".toggle-polling")!;
    expect(button.textContent).toBe("Resume updates");
    button.click();
    expect(onTogglePolling).toHaveBeenCalledOnce();
  });
});
