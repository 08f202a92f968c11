import type { ApiError, Gateway } from "./api.js";
import type { GateAck, GateDecisionBody, RunSnapshot } from "./types.js";

/** Injectable timer surface so tests can drive the poll loop by hand. */
export interface TimerApi {
  set(fn: () => void, ms: number): number;
  clear(id: number): void;
}

const realTimers: TimerApi = {
  set: (fn, ms) => setTimeout(fn, ms) as unknown as number,
  clear: (id) => clearTimeout(id),
};

export interface StoreState {
  snapshot: RunSnapshot | null;
  /** Message from the last failed fetch, cleared once a fetch succeeds. */
  error: string | null;
  /** Set when a gate decision conflicted with server state (409). */
  stale: string | null;
}

export interface RunStoreOptions {
  intervalMs?: number;
  timers?: TimerApi;
}

export const DEFAULT_POLL_MS = 2000;

export interface RunStore {
  readonly state: StoreState;
  subscribe(listener: (s: StoreState) => void): () => void;
  refresh(): Promise<void>;
  start(): void;
  stop(): void;
  decide(
    gate: "question" | "publication",
    body: GateDecisionBody,
  ): Promise<GateAck | null>;
  dismissStale(): void;
}

/**
 * Holds the latest run snapshot and keeps it fresh by polling. Gate
 * decisions go through here so the conflict contract lives in one place:
 * a 409 marks the view stale and forces an immediate refresh instead of
 * surfacing an exception to the caller.
 */
export function createRunStore(
  gateway: Gateway,
  runId: string,
  opts: RunStoreOptions = {},
): RunStore {
  const intervalMs = opts.intervalMs ?? DEFAULT_POLL_MS;
  const timers = opts.timers ?? realTimers;

  const state: StoreState = { snapshot: null, error: null, stale: null };
  const listeners = new Set<(s: StoreState) => void>();
  let timerId: number | null = null;
  let running = false;
  let seq = 0;

  const notify = () => {
    for (const fn of listeners) fn(state);
  };

  async function refresh(): Promise<void> {
    const mySeq = ++seq;
    try {
      const snapshot = await gateway.getRun(runId);
      if (mySeq !== seq) return; // a newer refresh already landed
      state.snapshot = snapshot;
      state.error = null;
    } catch (err) {
      if (mySeq !== seq) return;
      state.error = err instanceof Error ? err.message : String(err);
    }
    notify();
  }

  function scheduleNext(): void {
    if (!running) return;
    timerId = timers.set(() => {
      void refresh().then(scheduleNext);
    }, intervalMs);
  }

  return {
    state,
    subscribe(listener) {
      listeners.add(listener);
      return () => listeners.delete(listener);
    },
    refresh,
    start() {
      if (running) return;
      running = true;
      void refresh().then(scheduleNext);
    },
    stop() {
      running = false;
      if (timerId !== null) {
        timers.clear(timerId);
        timerId = null;
      }
    },
    async decide(gate, body) {
      try {
        const ack =
          gate === "question"
            ? await gateway.decideQuestionGate(runId, body)
            : await gateway.decidePublicationGate(runId, body);
        state.stale = null;
        await refresh();
        return ack;
      } catch (err) {
        const apiErr = err as Partial<ApiError>;
        if (apiErr.status === 409) {
          state.stale =
            apiErr.message ?? "run state changed; decision not applied";
          await refresh();
          return null;
        }
        throw err;
      }
    },
    dismissStale() {
      state.stale = null;
      notify();
    },
  };
}
