import { describe, expect, it } from "vitest";

import { ApiError, SessionApi, newRequestId } from "../src/api.js";

type Call = { url: string; init?: RequestInit };

function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: async () => body,
  } as unknown as Response;
}

/** fetch stub fed from a queue of responses or errors. */
function stubFetch(queue: (Response | Error)[]) {
  const calls: Call[] = [];
  const fn = (async (url: RequestInfo | URL, init?: RequestInit) => {
    calls.push({ url: String(url), init });
    const next = queue.shift();
    if (next === undefined) throw new Error("stub queue empty");
    if (next instanceof Error) throw next;
    return next;
  }) as typeof fetch;
  return { fn, calls };
}

describe("SessionApi request wiring", () => {
  it("posts graph and config on create", async () => {
    const { fn, calls } = stubFetch([jsonResponse(200, { id: "abc123" })]);
    const api = new SessionApi("", fn);
    const result = await api.createSession({ variables: [] }, { rounds: 2 });
    expect(result).toEqual({ id: "abc123" });
    expect(calls).toHaveLength(1);
    expect(calls[0]!.url).toBe("/api/sessions");
    expect(calls[0]!.init?.method).toBe("POST");
    expect(calls[0]!.init?.headers).toEqual({ "Content-Type": "application/json" });
    expect(JSON.parse(String(calls[0]!.init?.body))).toEqual({
      graph: { variables: [] },
      config: { rounds: 2 },
    });
  });

  it("prefixes the base URL and hits the right endpoints", async () => {
    const { fn, calls } = stubFetch([
      jsonResponse(200, { sessions: [] }),
      jsonResponse(200, { id: "s", n: 2, round: 1, finished: false, proposals: [], pending: [], metrics: null, budget_fraction: 0 }),
      jsonResponse(200, { n: 0, variables: [], confidences: [], labels: [], experimented: [] }),
      jsonResponse(200, { id: "s", rounds: [] }),
    ]);
    const api = new SessionApi("http://unit.test", fn);
    await api.listSessions();
    await api.getView("s");
    await api.getGraph("s");
    await api.getHistory("s");
    expect(calls.map((c) => c.url)).toEqual([
      "http://unit.test/api/sessions",
      "http://unit.test/api/sessions/s",
      "http://unit.test/api/sessions/s/graph",
      "http://unit.test/api/sessions/s/history",
    ]);
  });

  it("maps FastAPI error bodies onto ApiError", async () => {
    const { fn } = stubFetch([jsonResponse(404, { detail: "unknown session 'nope'" })]);
    const api = new SessionApi("", fn);
    const err = await api.getView("nope").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).message).toBe("unknown session 'nope'");
  });

  it("falls back to the status line when the error body is not JSON", async () => {
    const broken = {
      ok: false,
      status: 502,
      statusText: "Bad Gateway",
      json: async () => {
        throw new Error("not json");
      },
    } as unknown as Response;
    const { fn } = stubFetch([broken]);
    const api = new SessionApi("", fn);
    const err = await api.getView("s").catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(502);
    expect((err as ApiError).message).toBe("502 Bad Gateway");
  });
});

describe("submitFeedback retry policy", () => {
  const success = {
    accepted: true,
    round: 1,
    committed: false,
    finished: false,
    pending: [] as [number, number][],
  };

  it("retries a network failure with the same request id", async () => {
    const { fn, calls } = stubFetch([new Error("socket reset"), jsonResponse(200, success)]);
    const api = new SessionApi("", fn);
    const result = await api.submitFeedback("s", [0, 1], 1, "fixed-id");
    expect(result).toEqual(success);
    expect(calls).toHaveLength(2);
    const first = JSON.parse(String(calls[0]!.init?.body));
    const second = JSON.parse(String(calls[1]!.init?.body));
    expect(first).toEqual({ pair: [0, 1], label: 1, request_id: "fixed-id" });
    expect(second).toEqual(first);
  });

  it("does not retry a semantic rejection", async () => {
    const { fn, calls } = stubFetch([
      jsonResponse(409, { detail: "pair (0, 1) is not among round 2 proposals" }),
    ]);
    const api = new SessionApi("", fn);
    const err = await api.submitFeedback("s", [0, 1], 0, "rid").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect(calls).toHaveLength(1);
  });

  it("gives up after the attempt budget and rethrows the network error", async () => {
    const boom = new Error("offline");
    const { fn, calls } = stubFetch([boom, boom, boom]);
    const api = new SessionApi("", fn);
    const err = await api.submitFeedback("s", [2, 3], 1, "rid").catch((e: unknown) => e);
    expect(err).toBe(boom);
    expect(calls).toHaveLength(3);
  });

  it("generates a fresh request id per call when none is given", async () => {
    const { fn, calls } = stubFetch([
      jsonResponse(200, success),
      jsonResponse(200, success),
    ]);
    const api = new SessionApi("", fn);
    await api.submitFeedback("s", [0, 1], 1);
    await api.submitFeedback("s", [0, 1], 0);
    const ids = calls.map((c) => JSON.parse(String(c.init?.body)).request_id as string);
    expect(ids[0]).toBeTruthy();
    expect(ids[1]).toBeTruthy();
    expect(ids[0]).not.toBe(ids[1]);
  });
});

describe("newRequestId", () => {
  it("yields distinct non-empty ids", () => {
    const a = newRequestId();
    const b = newRequestId();
    expect(a.length).toBeGreaterThan(0);
    expect(a).not.toBe(b);
  });
});
