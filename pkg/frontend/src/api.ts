/** Typed client for the labeling service; the UI's only data source. */

import type { CurveResponse, QueryCard, SessionHandle } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export const NO_PENDING = Symbol("no-pending-query");

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(response.status, detail);
}

/** Retry a thunk with exponential backoff; network errors only. */
export async function withBackoff<T>(
  fn: () => Promise<T>,
  attempts = 4,
  baseDelayMs = 250,
  sleep: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms)),
): Promise<T> {
  let lastError: unknown;
  for (let attempt = 0; attempt < attempts; attempt++) {
    try {
      return await fn();
    } catch (err) {
      if (err instanceof ApiError) throw err; // HTTP errors are not transient
      lastError = err;
      if (attempt < attempts - 1) await sleep(baseDelayMs * 2 ** attempt);
    }
  }
  throw lastError;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  listSessions(): Promise<{ sessions: SessionHandle[] }> {
    return this.request("GET", "/sessions");
  }

  getSession(sessionId: string): Promise<SessionHandle> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  /** Pending card, NO_PENDING on 204, ApiError(410) when finished. */
  async getNext(sessionId: string): Promise<QueryCard | typeof NO_PENDING> {
    const response = await fetch(`${this.baseUrl}/sessions/${sessionId}/next`);
    if (response.status === 204) return NO_PENDING;
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as QueryCard;
  }

  postLabel(sessionId: string, instanceId: string, className: string): Promise<SessionHandle> {
    return this.request("POST", `/sessions/${sessionId}/labels`, {
      instance_id: instanceId,
      class_name: className,
    });
  }

  getCurve(sessionId: string): Promise<CurveResponse> {
    return this.request("GET", `/sessions/${sessionId}/curve`);
  }

  exportUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/export`;
  }
}
