/** Types mirroring the control service's JSON documents (field names are
 * stable on the service side; the console is a pure client). */

export interface GuardDoc {
  op: "<=" | ">";
  bound_ms: number;
}

export interface TransitionDoc {
  source: string;
  target: string;
  label?: string;
  guard?: GuardDoc;
  reset: boolean;
}

export interface ObserverDoc {
  states: string[];
  initial: string;
  error: string | null;
  clock: string;
  transitions: TransitionDoc[];
  current?: string;
  clock_reset_at?: number | null;
  violated?: boolean;
}

export interface ResponseInfo {
  event: string;
  deadline_ms: number;
}

export interface PatternInfo {
  kind: "absence" | "recurrence" | "response" | "response_chain";
  scope: "globally" | "before" | "after" | "between";
  scope_open: string | null;
  scope_close: string | null;
  trigger: string | null;
  subject: string | null;
  responses: ResponseInfo[];
  recurrence_period: number | null;
  events: string[];
}

export interface ObserverView {
  current: string;
  clock_reset_at: number | null;
  clock_valuation: number | null;
  next_timer: number | null;
  violated: boolean;
  english: string;
  mtl: string;
  observer: ObserverDoc;
}

export interface SessionState {
  id: number;
  requirement: string;
  english: string[];
  mtl: string[];
  patterns: PatternInfo[];
  verdict: "Running" | "Violated";
  now: number | null;
  pending_timer: number | null;
  first_violation: number | null;
  queue_length: number;
  states: string[];
  observers: ObserverView[];
}

export interface PushMessage {
  session: number;
  kind:
    | "loaded"
    | "step"
    | "timer"
    | "adaptation"
    | "adaptation-step"
    | "violation"
    | "deleted";
  detail?: string;
  timestamp?: number | null;
  state?: string[];
  verdict?: string;
  result?: string;
  rule?: string;
  rendered_property?: string;
  old_property?: string[];
  new_property?: string[];
}

export interface LogEntry {
  kind: string;
  text: string;
  timestamp: number | null;
}

export function messageToLogEntry(m: PushMessage): LogEntry {
  const ts = m.timestamp ?? null;
  switch (m.kind) {
    case "step":
      return { kind: "step", text: `event ${m.detail} → ${m.state?.join(", ")}`, timestamp: ts };
    case "timer":
      return { kind: "timer", text: `${m.detail} → ${m.state?.join(", ")}`, timestamp: ts };
    case "adaptation":
      return { kind: "adaptation", text: `adapted: ${m.rule}`, timestamp: ts };
    case "adaptation-step":
      return { kind: "adaptation", text: m.detail ?? "adaptation", timestamp: ts };
    case "violation":
      return { kind: "violation", text: `VIOLATED: ${m.rendered_property ?? ""}`, timestamp: ts };
    default:
      return { kind: m.kind, text: m.kind, timestamp: ts };
  }
}
