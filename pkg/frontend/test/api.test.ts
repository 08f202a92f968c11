import { describe, expect, it } from "vitest";
import { ApiError, createGateway } from "../src/api.js";

interface Captured {
  url: string;
  init?: RequestInit;
}

function stubFetch(
  responder: (url: string, init?: RequestInit) => Response,
): { calls: Captured[]; fetchFn: (url: string, init?: RequestInit) => Promise<Response> } {
  const calls: Captured[] = [];
  return {
    calls,
    fetchFn: async (url, init) => {
      calls.push({ url, init });
      return responder(url, init);
    },
  };
}

const json = (body: unknown, status = 200) =>
  new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });

describe("createGateway", () => {
  it("builds urls off the base and parses json bodies", async () => {
    const { calls, fetchFn } = stubFetch(() => json([{ run_id: "a1" }]));
    const gw = createGateway("http://host:8723/", fetchFn);
    const runs = await gw.listRuns();
    expect(calls[0].url).toBe("http://host:8723/runs");
    expect(runs[0].run_id).toBe("a1");
  });

  it("posts gate decisions as json", async () => {
    const { calls, fetchFn } = stubFetch(() =>
      json({ run_id: "a1", stage: "Collecting" }),
    );
    const gw = createGateway("http://host:8723", fetchFn);
    const ack = await gw.decideQuestionGate("a1", {
      action: "Select",
      question_id: "r1q02",
    });
    expect(ack.stage).toBe("Collecting");
    expect(calls[0].url).toBe("http://host:8723/runs/a1/gates/question");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      action: "Select",
      question_id: "r1q02",
    });
  });

  it("raises ApiError with the server's code on non-2xx", async () => {
    const { fetchFn } = stubFetch(() =>
      json({ code: "unknown_run", message: "no run 'zz'" }, 404),
    );
    const gw = createGateway("http://host:8723", fetchFn);
    const err = await gw.getRun("zz").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).code).toBe("unknown_run");
    expect((err as ApiError).message).toBe("no run 'zz'");
  });

  it("falls back to the status line when the error body is not json", async () => {
    const { fetchFn } = stubFetch(
      () => new Response("boom", { status: 502, statusText: "Bad Gateway" }),
    );
    const gw = createGateway("http://host:8723", fetchFn);
    const err = await gw.listRuns().catch((e: unknown) => e);
    expect((err as ApiError).code).toBe("http_error");
    expect((err as ApiError).message).toContain("502");
  });

  it("fetches drafts as plain text", async () => {
    const { calls, fetchFn } = stubFetch(
      () =>
        new Response("# Title\n\nbody", {
          status: 200,
          headers: { "content-type": "text/markdown" },
        }),
    );
    const gw = createGateway("http://host:8723", fetchFn);
    const text = await gw.getDraft("a1", 3);
    expect(calls[0].url).toBe("http://host:8723/runs/a1/drafts/3");
    expect(text.startsWith("# Title")).toBe(true);
  });
});
