import type {
  CostLedger,
  GateAck,
  GateDecisionBody,
  NewRunBody,
  QuestionsPayload,
  Review,
  RunEvent,
  RunSnapshot,
  RunSummary,
} from "./types.js";

/** Error raised for any non-2xx response. Carries the server's error code. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
  }
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

async function asApiError(resp: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = await resp.json();
    if (body && typeof body.code === "string") code = body.code;
    if (body && typeof body.message === "string") message = body.message;
  } catch {
    // non-JSON error body, keep the status line
  }
  return new ApiError(resp.status, code, message);
}

export interface Gateway {
  listRuns(): Promise<RunSummary[]>;
  createRun(body: NewRunBody): Promise<RunSummary>;
  getRun(runId: string): Promise<RunSnapshot>;
  getQuestions(runId: string): Promise<QuestionsPayload>;
  getDraft(runId: string, version: number): Promise<string>;
  getReviews(runId: string): Promise<Review[]>;
  getEvents(runId: string): Promise<RunEvent[]>;
  getCost(runId: string): Promise<CostLedger>;
  decideQuestionGate(runId: string, body: GateDecisionBody): Promise<GateAck>;
  decidePublicationGate(
    runId: string,
    body: GateDecisionBody,
  ): Promise<GateAck>;
}

/**
 * Thin typed client over the run server's HTTP interface. All reads return
 * server state verbatim; nothing is cached or recomputed here.
 */
export function createGateway(
  baseUrl: string,
  fetchFn: FetchLike = fetch,
): Gateway {
  const base = baseUrl.replace(/\/+$/, "");

  async function getJson<T>(path: string): Promise<T> {
    const resp = await fetchFn(base + path);
    if (!resp.ok) throw await asApiError(resp);
    return (await resp.json()) as T;
  }

  async function postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetchFn(base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw await asApiError(resp);
    return (await resp.json()) as T;
  }

  return {
    listRuns: () => getJson<RunSummary[]>("/runs"),
    createRun: (body) => postJson<RunSummary>("/runs", body),
    getRun: (runId) => getJson<RunSnapshot>(`/runs/${runId}`),
    getQuestions: (runId) =>
      getJson<QuestionsPayload>(`/runs/${runId}/questions`),
    getDraft: async (runId, version) => {
      const resp = await fetchFn(`${base}/runs/${runId}/drafts/${version}`);
      if (!resp.ok) throw await asApiError(resp);
      return resp.text();
    },
    getReviews: (runId) => getJson<Review[]>(`/runs/${runId}/reviews`),
    getEvents: (runId) => getJson<RunEvent[]>(`/runs/${runId}/events`),
    getCost: (runId) => getJson<CostLedger>(`/runs/${runId}/cost`),
    decideQuestionGate: (runId, body) =>
      postJson<GateAck>(`/runs/${runId}/gates/question`, body),
    decidePublicationGate: (runId, body) =>
      postJson<GateAck>(`/runs/${runId}/gates/publication`, body),
  };
}
