import { describe, expect, it } from "vitest";

import { applicableRules, buildRequest, validateParams } from "../src/adaptation.js";
import { bsnPatternInfo, bsnSessionState } from "./fixtures.js";
import type { PatternInfo, SessionState } from "../src/model.js";

function sessionWith(pattern: Partial<PatternInfo>): SessionState {
  const s = bsnSessionState();
  s.patterns = [{ ...bsnPatternInfo(), ...pattern }];
  return s;
}

describe("rule applicability", () => {
  it("chains accept every rule", () => {
    expect(applicableRules(bsnSessionState())).toEqual(
      new Set([
        "update_time_guard",
        "update_event",
        "add_response",
        "remove_response",
        "split_chain",
      ])
    );
  });

  it("an absence pattern only allows event renames", () => {
    const s = sessionWith({ kind: "absence", responses: [], trigger: null, subject: "alarm" });
    expect(applicableRules(s)).toEqual(new Set(["update_event"]));
  });

  it("a scoped response can grow into a chain, a global one cannot", () => {
    const between = sessionWith({
      kind: "response",
      responses: [{ event: "pong", deadline_ms: 500 }],
    });
    expect(applicableRules(between).has("add_response")).toBe(true);
    const global = sessionWith({
      kind: "response",
      scope: "globally",
      responses: [{ event: "pong", deadline_ms: 500 }],
    });
    expect(applicableRules(global).has("add_response")).toBe(false);
    expect(applicableRules(global).has("update_time_guard")).toBe(true);
  });

  it("split sessions cannot be adapted further", () => {
    const s = bsnSessionState();
    s.patterns = [bsnPatternInfo(), bsnPatternInfo()];
    expect(applicableRules(s).size).toBe(0);
  });
});

describe("parameter validation", () => {
  const p = bsnPatternInfo();

  it("accepts the published chain extension", () => {
    expect(
      validateParams("add_response", { event: "glucose_reply", bound_ms: "2000" }, p)
    ).toEqual([]);
  });

  it("rejects colliding and malformed names", () => {
    expect(
      validateParams("add_response", { event: "pulse_reply", bound_ms: "10" }, p)[0]
    ).toMatch(/already occurs/);
    expect(validateParams("add_response", { event: "9bad", bound_ms: "10" }, p)[0]).toMatch(
      /valid name/
    );
  });

  it("checks update_event endpoints against the pattern", () => {
    expect(validateParams("update_event", { old_event: "request", new_event: "s_request" }, p)).toEqual([]);
    expect(
      validateParams("update_event", { old_event: "nope", new_event: "s_request" }, p)[0]
    ).toMatch(/does not occur/);
    expect(
      validateParams("update_event", { old_event: "request", new_event: "pulse_reply" }, p)[0]
    ).toMatch(/already occurs/);
  });

  it("bounds indexes by the response count", () => {
    expect(validateParams("remove_response", { index: "2" }, p)).toEqual([]);
    expect(validateParams("remove_response", { index: "3" }, p)[0]).toMatch(/out of range/);
    expect(validateParams("update_time_guard", { new_bound_ms: "3000", which: "5" }, p)[0]).toMatch(
      /out of range/
    );
  });

  it("builds the service payloads", () => {
    expect(buildRequest("update_time_guard", { new_bound_ms: "3000", which: "all" })).toEqual({
      kind: "update_time_guard",
      new_bound_ms: 3000,
      which: "all",
    });
    expect(buildRequest("remove_response", { index: "1" })).toEqual({
      kind: "remove_response",
      index: 1,
    });
    expect(buildRequest("split_chain", {})).toEqual({ kind: "split_chain" });
  });
});
