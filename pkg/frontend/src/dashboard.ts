/** Session dashboard: progress, per-class counts, uncertainty sparkline,
 * export download. Counts are derived only from the service's label
 * history; nothing is recomputed client-side. */

import { sparklinePath } from "./charts.js";
import { el } from "./card.js";
import type { CurveResponse, SessionHandle } from "./types.js";

const SPARK_W = 240;
const SPARK_H = 36;

export interface DashboardState {
  handle: SessionHandle;
  curve: CurveResponse | null;
  stale: boolean;
  pollingPaused: boolean;
}

export interface DashboardHandlers {
  onTogglePolling(): void;
}

export function renderDashboard(
  root: HTMLElement,
  state: DashboardState,
  handlers: DashboardHandlers,
): void {
  root.innerHTML = "";
  const { handle, curve } = state;

  const top = el("div", "dash-top");
  top.appendChild(
    el("span", "dash-progress",
       `${handle.progress.labeled}/${handle.progress.budget} labeled`),
  );
  top.appendChild(el("span", `dash-status status-${handle.status}`, handle.status));
  if (state.stale) top.appendChild(el("span", "stale-badge", "stale"));
  root.appendChild(top);

  const bar = el("div", "progress-track");
  const fill = el("div", "progress-fill");
  const fraction = handle.progress.budget
    ? Math.min(1, handle.progress.labeled / handle.progress.budget)
    : 0;
  fill.style.width = `${(fraction * 100).toFixed(1)}%`;
  bar.appendChild(fill);
  root.appendChild(bar);

  const counts = el("div", "class-counts");
  if (curve) {
    const byClass = new Map<string, number>();
    for (const entry of curve.label_history) {
      byClass.set(entry.class_name, (byClass.get(entry.class_name) ?? 0) + 1);
    }
    for (const [name, count] of [...byClass.entries()].sort()) {
      const row = el("div", "class-count-row");
      row.appendChild(el("span", "class-count-name", name));
      row.appendChild(el("span", "class-count-value", String(count)));
      counts.appendChild(row);
    }
  }
  root.appendChild(counts);

  const trend = el("div", "uncertainty-trend");
  trend.appendChild(el("label", "", "pool uncertainty"));
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${SPARK_W} ${SPARK_H}`);
  svg.classList.add("sparkline");
  const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
  const series = (curve?.points ?? []).map((p) => p.mean_pool_uncertainty);
  path.setAttribute("d", series.length ? sparklinePath(series, SPARK_W, SPARK_H) : "");
  path.setAttribute("fill", "none");
  svg.appendChild(path);
  trend.appendChild(svg);
  trend.appendChild(
    el("span", "spark-points", `${series.length} point${series.length === 1 ? "" : "s"}`),
  );
  root.appendChild(trend);

  const controls = el("div", "dash-controls");
  const toggle = el(
    "button",
    "toggle-polling",
    state.pollingPaused ? "Resume updates" : "Pause updates",
  ) as HTMLButtonElement;
  toggle.type = "button";
  toggle.addEventListener("click", handlers.onTogglePolling);
  controls.appendChild(toggle);
  root.appendChild(controls);
}
