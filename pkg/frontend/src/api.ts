/** Typed client for the discovery session HTTP API.
 *
 * Every shape here mirrors one endpoint payload verbatim; the UI never
 * invents state the server does not report.
 */

export interface Metrics {
  tp: number;
  fp: number;
  fn: number;
  tn: number;
  precision: number;
  recall: number;
  f1: number;
}

export interface Proposal {
  pair: [number, number];
  parent: string;
  child: string;
  confidence: number;
  rationale: string | null;
  answered: boolean;
}

export interface SessionView {
  id: string;
  n: number;
  round: number;
  finished: boolean;
  proposals: Proposal[];
  pending: [number, number][];
  metrics: Metrics | null;
  budget_fraction: number;
}

export interface FeedbackResponse {
  accepted: boolean;
  round: number;
  committed: boolean;
  finished: boolean;
  pending: [number, number][];
}

export interface Variable {
  id: number;
  name: string;
  description: string;
}

export interface GraphView {
  n: number;
  variables: Variable[];
  confidences: (number | null)[][];
  labels: (number | null)[][];
  experimented: boolean[][];
}

export interface Breakdown {
  experiment_improvements: number;
  update_improvements: number;
  regressions: number;
  net_improvement: number;
  total_changed: number;
}

export interface RoundRecord {
  round: number;
  budget_fraction: number;
  metrics: Metrics | null;
  breakdown: Breakdown | null;
  confidences: Record<string, number>;
  flags: string[];
}

export interface HistoryView {
  id: string;
  rounds: RoundRecord[];
}

export interface SessionSummary {
  id: string;
  n: number;
  round: number;
  finished: boolean;
}

/** HTTP-level failure carrying the server's explanation. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export function newRequestId(): string {
  const c = globalThis.crypto;
  if (c && typeof c.randomUUID === "function") return c.randomUUID();
  return `req-${Date.now()}-${Math.random().toString(36).slice(2, 10)}`;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class SessionApi {
  private readonly base: string;
  private readonly fetchFn: typeof fetch;

  constructor(base = "", fetchFn?: typeof fetch) {
    this.base = base;
    this.fetchFn = fetchFn ?? ((...args) => fetch(...args));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.base + path, init);
    if (!res.ok) {
      let detail = `${res.status} ${res.statusText}`;
      try {
        const body = (await res.json()) as { detail?: unknown };
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body: keep the status line
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createSession(graph: unknown, config: Record<string, unknown> = {}): Promise<{ id: string }> {
    return this.post("/api/sessions", { graph, config });
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return this.request("/api/sessions");
  }

  getView(id: string): Promise<SessionView> {
    return this.request(`/api/sessions/${encodeURIComponent(id)}`);
  }

  getGraph(id: string): Promise<GraphView> {
    return this.request(`/api/sessions/${encodeURIComponent(id)}/graph`);
  }

  getHistory(id: string): Promise<HistoryView> {
    return this.request(`/api/sessions/${encodeURIComponent(id)}/history`);
  }

  /** Submit one verdict for a proposed pair.
   *
   * Network failures are retried with the same request id, so the
   * server applies the answer at most once no matter how many attempts
   * reach it. HTTP errors are semantic (stale round, bad pair) and
   * surface immediately without a retry.
   */
  async submitFeedback(
    id: string,
    pair: [number, number],
    label: 0 | 1,
    requestId: string = newRequestId(),
    attempts = 3,
  ): Promise<FeedbackResponse> {
    const body = { pair, label, request_id: requestId };
    let lastError: unknown;
    for (let attempt = 0; attempt < attempts; attempt += 1) {
      try {
        return await this.post<FeedbackResponse>(
          `/api/sessions/${encodeURIComponent(id)}/feedback`,
          body,
        );
      } catch (err) {
        if (err instanceof ApiError) throw err;
        lastError = err;
        if (attempt + 1 < attempts) await sleep(150 * (attempt + 1));
      }
    }
    throw lastError;
  }
}
