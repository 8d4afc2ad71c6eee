/** Query-card view: stacked channel charts, probability bars, label form.
 * Every number shown comes straight from a service response field. */

import { svgChart } from "./charts.js";
import type { QueryCard } from "./types.js";

export interface CardHandlers {
  onSubmit(className: string): void;
}

const CHART_W = 640;
const CHART_H = 80;

export function renderCard(root: HTMLElement, card: QueryCard, handlers: CardHandlers): void {
  root.innerHTML = "";
  root.dataset.instanceId = card.instance_id;

  const header = el("div", "card-header");
  header.appendChild(
    el("h2", "", `Query ${card.query_index} of ${card.budget}`),
  );
  const meta = el("div", "card-meta");
  meta.appendChild(el("span", "instance-id", card.instance_id));
  if (card.strategy_score !== null) {
    meta.appendChild(
      el("span", "strategy-score", `score ${card.strategy_score.toFixed(4)}`),
    );
  }
  header.appendChild(meta);
  root.appendChild(header);

  const charts = el("div", "charts");
  card.values.forEach((channel, i) => {
    const row = el("div", "chart-row");
    row.appendChild(el("label", "channel-name", card.channel_names[i] ?? `ch${i}`));
    row.appendChild(svgChart(channel, CHART_W, CHART_H));
    charts.appendChild(row);
  });
  root.appendChild(charts);

  const probs = el("div", "probabilities");
  if (card.class_names.length === 0) {
    probs.appendChild(el("p", "cold-start", "No classes labeled yet."));
  }
  card.class_names.forEach((name, i) => {
    const p = card.probabilities[i] ?? 0;
    const row = el("div", "prob-row");
    row.appendChild(el("span", "prob-name", name));
    const track = el("div", "prob-track");
    const bar = el("div", "prob-bar");
    bar.style.width = `${(p * 100).toFixed(1)}%`;
    track.appendChild(bar);
    row.appendChild(track);
    row.appendChild(el("span", "prob-value", `${(p * 100).toFixed(1)}%`));
    probs.appendChild(row);
  });
  root.appendChild(probs);

  root.appendChild(renderLabelForm(card, handlers));
}

function renderLabelForm(card: QueryCard, handlers: CardHandlers): HTMLElement {
  const form = el("form", "label-form") as HTMLFormElement;
  const buttons = el("div", "class-buttons");
  for (const name of card.class_names) {
    const button = el("button", "class-button", name) as HTMLButtonElement;
    button.type = "button";
    button.addEventListener("click", () => handlers.onSubmit(name));
    buttons.appendChild(button);
  }
  form.appendChild(buttons);

  const entry = el("div", "new-class-entry");
  const input = el("input", "new-class-input") as HTMLInputElement;
  input.placeholder = "new or existing class name";
  input.setAttribute("list", "class-name-options");
  const datalist = el("datalist") as HTMLDataListElement;
  datalist.id = "class-name-options";
  for (const name of card.class_names) {
    const option = document.createElement("option");
    option.value = name;
    datalist.appendChild(option);
  }
  const submit = el("button", "submit-label", "Label") as HTMLButtonElement;
  submit.type = "submit";
  const error = el("span", "form-error");
  entry.append(input, datalist, submit, error);
  form.appendChild(entry);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!input.value.trim()) {
      error.textContent = "class name must be nonempty";
      return;
    }
    error.textContent = "";
    handlers.onSubmit(input.value.trim());
  });
  return form;
}

export function renderFinished(root: HTMLElement, exportUrl: string): void {
  root.innerHTML = "";
  const panel = el("div", "finished-panel");
  panel.appendChild(el("h2", "", "Session complete"));
  panel.appendChild(el("p", "", "Every budgeted query has been labeled."));
  const link = el("a", "export-link", "Download labeled dataset") as HTMLAnchorElement;
  link.href = exportUrl;
  link.setAttribute("download", "labels.csv");
  panel.appendChild(link);
  root.appendChild(panel);
}

export function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}
