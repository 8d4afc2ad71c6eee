import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, NO_PENDING, withBackoff } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.restoreAllMocks();
});

describe("ApiClient", () => {
  it("maps 204 from next to NO_PENDING", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => new Response(null, { status: 204 })));
    const client = new ApiClient("http://x");
    expect(await client.getNext("s")).toBe(NO_PENDING);
  });

  it("throws ApiError with the service detail", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => jsonResponse({ detail: "session finished" }, 410)),
    );
    const client = new ApiClient("http://x");
    await expect(client.getNext("s")).rejects.toMatchObject({
      status: 410,
      message: "session finished",
    });
  });

  it("posts labels with the optimistic-lock instance id", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ session_id: "s" }));
    vi.stubGlobal("fetch", fetchMock);
    const client = new ApiClient("");
    await client.postLabel("s", "pool-3", "walking");
    const [url, options] = fetchMock.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/sessions/s/labels");
    expect(JSON.parse(options.body as string)).toEqual({
      instance_id: "pool-3",
      class_name: "walking",
    });
  });
});

describe("withBackoff", () => {
  it("retries network failures with growing delays, preserving the result", async () => {
    const delays: number[] = [];
    const sleep = async (ms: number) => {
      delays.push(ms);
    };
    let calls = 0;
    const result = await withBackoff(
      async () => {
        calls += 1;
        if (calls < 3) throw new TypeError("fetch failed");
        return "ok";
      },
      4,
      100,
      sleep,
    );
    expect(result).toBe("ok");
    expect(delays).toEqual([100, 200]);
  });

  it("does not retry HTTP errors", async () => {
    let calls = 0;
    await expect(
      withBackoff(async () => {
        calls += 1;
        throw new ApiError(410, "finished");
      }, 3, 1, async () => {}),
    ).rejects.toBeInstanceOf(ApiError);
    expect(calls).toBe(1);
  });

  it("gives up after the attempt budget", async () => {
    let calls = 0;
    await expect(
      withBackoff(async () => {
        calls += 1;
        throw new TypeError("down");
      }, 3, 1, async () => {}),
    ).rejects.toBeInstanceOf(TypeError);
    expect(calls).toBe(3);
  });
});
