import { describe, expect, it } from "vitest";
import { createRunStore } from "../src/store.js";
import {
  FakeGateway,
  loadFixture,
  ManualTimers,
  settle,
} from "./fake_gateway.js";

function makeStore() {
  const gateway = new FakeGateway(loadFixture("question_gate.json"));
  const timers = new ManualTimers();
  const store = createRunStore(gateway, gateway.snapshot.run_id, {
    intervalMs: 2000,
    timers,
  });
  return { gateway, timers, store };
}

describe("createRunStore", () => {
  it("loads the snapshot on start and notifies subscribers", async () => {
    const { store } = makeStore();
    let seen = 0;
    store.subscribe(() => {
      seen += 1;
    });
    store.start();
    await settle();
    expect(seen).toBeGreaterThan(0);
    expect(store.state.snapshot?.stage).toBe("AwaitingQuestionGate");
    expect(store.state.error).toBeNull();
    store.stop();
  });

  it("picks up a server-side stage change within one poll interval", async () => {
    const { gateway, timers, store } = makeStore();
    store.start();
    await settle();
    expect(store.state.snapshot?.stage).toBe("AwaitingQuestionGate");

    // another actor decides the gate behind our back
    gateway.snapshot.stage = "Collecting";
    timers.fire();
    await settle();
    expect(store.state.snapshot?.stage).toBe("Collecting");
    store.stop();
  });

  it("records a fetch error and clears it on the next good poll", async () => {
    const { gateway, timers, store } = makeStore();
    store.start();
    await settle();

    gateway.failNextGet = "socket hiccup";
    timers.fire();
    await settle();
    expect(store.state.error).toBe("socket hiccup");
    // the stale snapshot stays visible while the error banner shows
    expect(store.state.snapshot?.stage).toBe("AwaitingQuestionGate");

    timers.fire();
    await settle();
    expect(store.state.error).toBeNull();
    store.stop();
  });

  it("applies a decision and refreshes immediately", async () => {
    const { gateway, store } = makeStore();
    store.start();
    await settle();

    const ack = await store.decide("question", {
      action: "Select",
      question_id: "r1q01",
    });
    expect(ack?.stage).toBe("Collecting");
    expect(store.state.snapshot?.stage).toBe("Collecting");
    expect(store.state.snapshot?.selected_question?.question_id).toBe("r1q01");
    expect(gateway.decisions.length).toBe(1);
    store.stop();
  });

  it("turns a 409 conflict into a stale flag plus refresh, not a throw", async () => {
    const { gateway, store } = makeStore();
    store.start();
    await settle();

    gateway.snapshot.stage = "Collecting"; // decided elsewhere
    const ack = await store.decide("question", {
      action: "Select",
      question_id: "r1q01",
    });
    expect(ack).toBeNull();
    expect(store.state.stale).toContain("not awaiting");
    expect(store.state.snapshot?.stage).toBe("Collecting");

    store.dismissStale();
    expect(store.state.stale).toBeNull();
    store.stop();
  });

  it("propagates non-conflict errors to the caller", async () => {
    const { store } = makeStore();
    store.start();
    await settle();
    await expect(
      store.decide("question", { action: "Select", question_id: "r9q99" }),
    ).rejects.toMatchObject({ status: 400, code: "unknown_candidate" });
    store.stop();
  });

  it("stops polling once stopped", async () => {
    const { timers, store } = makeStore();
    store.start();
    await settle();
    expect(timers.pendingCount).toBe(1);
    store.stop();
    expect(timers.pendingCount).toBe(0);
  });

  it("unsubscribed listeners stop firing", async () => {
    const { timers, store } = makeStore();
    let calls = 0;
    const off = store.subscribe(() => {
      calls += 1;
    });
    store.start();
    await settle();
    const before = calls;
    off();
    timers.fire();
    await settle();
    expect(calls).toBe(before);
    store.stop();
  });
});
