/** Client-side adaptation rules: which apply to a session's pattern, the
 * parameters each needs, and the request payloads the service expects. */

import type { PatternInfo, SessionState } from "./model.js";

export type RuleKind =
  | "update_time_guard"
  | "update_event"
  | "add_response"
  | "remove_response"
  | "split_chain";

export const RULE_LABELS: Record<RuleKind, string> = {
  update_time_guard: "Update time guard",
  update_event: "Update event",
  add_response: "Add response",
  remove_response: "Remove response",
  split_chain: "Split chain",
};

export interface ParamField {
  name: string;
  label: string;
  kind: "number" | "text";
  placeholder: string;
}

export function paramFields(kind: RuleKind): ParamField[] {
  switch (kind) {
    case "update_time_guard":
      return [
        { name: "new_bound_ms", label: "new bound (ms)", kind: "number", placeholder: "3000" },
        { name: "which", label: "which (index or all)", kind: "text", placeholder: "all" },
      ];
    case "update_event":
      return [
        { name: "old_event", label: "old event", kind: "text", placeholder: "request" },
        { name: "new_event", label: "new event", kind: "text", placeholder: "s_request" },
      ];
    case "add_response":
      return [
        { name: "event", label: "response event", kind: "text", placeholder: "glucose_reply" },
        { name: "bound_ms", label: "within (ms)", kind: "number", placeholder: "2000" },
      ];
    case "remove_response":
      return [{ name: "index", label: "response index (1-based)", kind: "number", placeholder: "1" }];
    case "split_chain":
      return [];
  }
}

/** Rules the service would accept for this session right now; a split
 * session (several observers) cannot be adapted further. */
export function applicableRules(state: SessionState): Set<RuleKind> {
  const out = new Set<RuleKind>();
  if (state.patterns.length !== 1) return out;
  const p = state.patterns[0];
  if (p.kind === "response" || p.kind === "response_chain" || p.kind === "recurrence") {
    out.add("update_time_guard");
  }
  out.add("update_event");
  if (p.kind === "response_chain" || (p.kind === "response" && p.scope === "between")) {
    out.add("add_response");
  }
  if (p.kind === "response_chain") {
    out.add("remove_response");
    out.add("split_chain");
  }
  return out;
}

export interface AdaptationBody {
  kind: RuleKind;
  new_bound_ms?: number;
  which?: number | string;
  old_event?: string;
  new_event?: string;
  event?: string;
  bound_ms?: number;
  index?: number;
}

const NAME_RE = /^[A-Za-z_][A-Za-z0-9_]*$/;

/** Returns human-readable problems; empty means the payload is good to send. */
export function validateParams(
  kind: RuleKind,
  params: Record<string, string>,
  pattern: PatternInfo
): string[] {
  const errors: string[] = [];
  const intOf = (name: string): number | null => {
    const raw = (params[name] ?? "").trim();
    if (!/^\d+$/.test(raw)) {
      errors.push(`${name} must be a non-negative integer`);
      return null;
    }
    return parseInt(raw, 10);
  };
  switch (kind) {
    case "update_time_guard": {
      intOf("new_bound_ms");
      const which = (params.which ?? "all").trim() || "all";
      if (which !== "all") {
        if (!/^\d+$/.test(which)) {
          errors.push("which must be 'all' or a response index");
        } else {
          const i = parseInt(which, 10);
          const n = pattern.kind === "recurrence" ? 1 : pattern.responses.length;
          if (i < 1 || i > n) errors.push(`index ${i} out of range 1..${n}`);
        }
      }
      break;
    }
    case "update_event": {
      const oldName = (params.old_event ?? "").trim();
      const newName = (params.new_event ?? "").trim();
      if (!pattern.events.includes(oldName)) {
        errors.push(`'${oldName}' does not occur in the pattern`);
      }
      if (!NAME_RE.test(newName)) {
        errors.push("new event must be a valid name");
      } else if (pattern.events.includes(newName)) {
        errors.push(`'${newName}' already occurs in the pattern`);
      }
      break;
    }
    case "add_response": {
      const ev = (params.event ?? "").trim();
      if (!NAME_RE.test(ev)) errors.push("response event must be a valid name");
      else if (pattern.events.includes(ev)) errors.push(`'${ev}' already occurs in the pattern`);
      intOf("bound_ms");
      break;
    }
    case "remove_response": {
      const i = intOf("index");
      if (i !== null && (i < 1 || i > pattern.responses.length)) {
        errors.push(`index ${i} out of range 1..${pattern.responses.length}`);
      }
      break;
    }
    case "split_chain":
      break;
  }
  return errors;
}

export function buildRequest(kind: RuleKind, params: Record<string, string>): AdaptationBody {
  switch (kind) {
    case "update_time_guard": {
      const which = (params.which ?? "all").trim() || "all";
      return {
        kind,
        new_bound_ms: parseInt(params.new_bound_ms, 10),
        which: which === "all" ? "all" : parseInt(which, 10),
      };
    }
    case "update_event":
      return { kind, old_event: params.old_event.trim(), new_event: params.new_event.trim() };
    case "add_response":
      return { kind, event: params.event.trim(), bound_ms: parseInt(params.bound_ms, 10) };
    case "remove_response":
      return { kind, index: parseInt(params.index, 10) };
    case "split_chain":
      return { kind };
  }
}
