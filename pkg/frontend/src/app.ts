/** Controller: one active card at a time, optimistic-locked commits,
 * polling dashboard. All state lives on the service; the UI only views
 * responses and posts label choices. */

import { ApiClient, ApiError, NO_PENDING, withBackoff } from "./api.js";
import { renderCard, renderFinished, el } from "./card.js";
import { renderDashboard, type DashboardState } from "./dashboard.js";
import type { CurveResponse, QueryCard, SessionHandle } from "./types.js";

const POLL_INTERVAL_MS = 2000;

export class LabelingApp {
  readonly cardRoot: HTMLElement;
  readonly dashRoot: HTMLElement;
  readonly noticeRoot: HTMLElement;

  card: QueryCard | null = null;
  handle: SessionHandle | null = null;
  curve: CurveResponse | null = null;
  stale = false;
  pollingPaused = false;
  private submitting = false;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    readonly api: ApiClient,
    readonly sessionId: string,
    mount: HTMLElement,
  ) {
    mount.innerHTML = "";
    this.noticeRoot = el("div", "notices");
    this.cardRoot = el("div", "card-root");
    this.dashRoot = el("div", "dash-root");
    mount.append(this.noticeRoot, this.cardRoot, this.dashRoot);
  }

  async start(): Promise<void> {
    await this.refreshDashboard();
    await this.loadNext();
    this.pollTimer = setInterval(() => {
      if (!this.pollingPaused) void this.refreshDashboard();
    }, POLL_INTERVAL_MS);
  }

  stop(): void {
    if (this.pollTimer !== null) clearInterval(this.pollTimer);
    this.pollTimer = null;
  }

  /** Fetch and render the pending card, retrying network failures. */
  async loadNext(): Promise<void> {
    try {
      const result = await withBackoff(() => this.api.getNext(this.sessionId));
      if (result === NO_PENDING) {
        this.card = null;
        this.cardRoot.innerHTML = "<p class='waiting'>No pending query; updating…</p>";
        setTimeout(() => void this.loadNext(), 500);
        return;
      }
      this.card = result;
      this.notice("");
      renderCard(this.cardRoot, result, {
        onSubmit: (className) => void this.submitLabel(className),
      });
    } catch (err) {
      if (err instanceof ApiError && err.status === 410) {
        this.card = null;
        renderFinished(this.cardRoot, this.api.exportUrl(this.sessionId));
        await this.refreshDashboard();
        return;
      }
      this.stale = true;
      this.renderDash();
      this.notice(`cannot reach service: ${String(err)}`);
    }
  }

  /** Commit a label for the current card. The instance id is the
   * optimistic lock: a 409 means the card moved on, so refetch. */
  async submitLabel(className: string): Promise<void> {
    if (!this.card || this.submitting) return;
    const instanceId = this.card.instance_id;
    this.submitting = true;
    try {
      this.handle = await this.api.postLabel(this.sessionId, instanceId, className);
      await this.loadNext();
      this.renderDash();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.notice("that card was already labeled; showing the next query");
        await this.loadNext();
      } else if (err instanceof ApiError && err.status === 410) {
        renderFinished(this.cardRoot, this.api.exportUrl(this.sessionId));
      } else if (err instanceof ApiError && err.status === 422) {
        this.notice(err.message);
      } else {
        this.stale = true;
        this.notice(`label not committed: ${String(err)}`);
      }
    } finally {
      this.submitting = false;
    }
  }

  async refreshDashboard(): Promise<void> {
    try {
      this.handle = await this.api.getSession(this.sessionId);
      this.curve = await this.api.getCurve(this.sessionId);
      this.stale = false;
    } catch {
      this.stale = true;
    }
    this.renderDash();
  }

  togglePolling(): void {
    this.pollingPaused = !this.pollingPaused;
    this.renderDash();
  }

  private renderDash(): void {
    if (!this.handle) return;
    const state: DashboardState = {
      handle: this.handle,
      curve: this.curve,
      stale: this.stale,
      pollingPaused: this.pollingPaused,
    };
    renderDashboard(this.dashRoot, state, {
      onTogglePolling: () => this.togglePolling(),
    });
  }

  private notice(message: string): void {
    this.noticeRoot.textContent = message;
  }
}

/** Session chooser shown when no ?session= id is in the URL. */
export async function renderSessionPicker(
  api: ApiClient,
  mount: HTMLElement,
  onPick: (sessionId: string) => void,
): Promise<void> {
  mount.innerHTML = "";
  const { sessions } = await api.listSessions();
  mount.appendChild(el("h2", "", "Labeling sessions"));
  if (!sessions.length) {
    mount.appendChild(
      el("p", "", "No sessions yet. Create one through the service API."),
    );
    return;
  }
  const list = el("ul", "session-list");
  for (const s of sessions) {
    const item = el("li", "session-item");
    const link = el("a", "session-link",
                    `${s.session_id} — ${s.status}`) as HTMLAnchorElement;
    link.href = `?session=${s.session_id}`;
    link.addEventListener("click", (event) => {
      event.preventDefault();
      onPick(s.session_id);
    });
    item.appendChild(link);
    list.appendChild(item);
  }
  mount.appendChild(list);
}
