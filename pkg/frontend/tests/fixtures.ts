import type { ObserverDoc, PatternInfo, SessionState } from "../src/model.js";

export function bsnObserverDoc(): ObserverDoc {
  const guard = (op: "<=" | ">", bound_ms: number) => ({ op, bound_ms });
  return {
    states: ["closed", "open", "waiting_1", "waiting_2", "error"],
    initial: "closed",
    error: "error",
    clock: "c",
    transitions: [
      { source: "closed", target: "open", label: "cycle_starting", reset: false },
      { source: "open", target: "closed", label: "cycle_ending", reset: false },
      { source: "open", target: "waiting_1", label: "request", reset: true },
      { source: "waiting_1", target: "waiting_2", label: "thermometer_reply", guard: guard("<=", 2000), reset: true },
      { source: "waiting_1", target: "error", label: "cycle_ending", reset: false },
      { source: "waiting_1", target: "error", guard: guard(">", 2000), reset: false },
      { source: "waiting_2", target: "open", label: "pulse_reply", guard: guard("<=", 2000), reset: false },
      { source: "waiting_2", target: "error", label: "cycle_ending", reset: false },
      { source: "waiting_2", target: "error", guard: guard(">", 2000), reset: false },
    ],
  };
}

export function bsnPatternInfo(): PatternInfo {
  return {
    kind: "response_chain",
    scope: "between",
    scope_open: "cycle_starting",
    scope_close: "cycle_ending",
    trigger: "request",
    subject: null,
    responses: [
      { event: "thermometer_reply", deadline_ms: 2000 },
      { event: "pulse_reply", deadline_ms: 2000 },
    ],
    recurrence_period: null,
    events: [
      "cycle_ending",
      "cycle_starting",
      "pulse_reply",
      "request",
      "thermometer_reply",
    ],
  };
}

export function bsnSessionState(current = "waiting_2"): SessionState {
  const doc = bsnObserverDoc();
  return {
    id: 0,
    requirement: "…",
    english: ["Between cycle_starting and cycle_ending, …"],
    mtl: ["□((cycle_starting ∧ ◊cycle_ending) → …)"],
    patterns: [bsnPatternInfo()],
    verdict: "Running",
    now: 600,
    pending_timer: 2601,
    first_violation: null,
    queue_length: 0,
    states: [current],
    observers: [
      {
        current,
        clock_reset_at: 600,
        clock_valuation: 0,
        next_timer: 2601,
        violated: false,
        english: "Between cycle_starting and cycle_ending, …",
        mtl: "□((cycle_starting ∧ ◊cycle_ending) → …)",
        observer: doc,
      },
    ],
  };
}
