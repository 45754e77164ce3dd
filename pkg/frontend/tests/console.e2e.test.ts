/** End-to-end against a live control service.
 *
 * Start one first, then point this suite at it:
 *
 *     adaptrv serve --port 8000
 *     CONTROL_URL=http://127.0.0.1:8000 npm run test:e2e
 *
 * Skipped when CONTROL_URL is not set (the primary suite never depends on it).
 */

import { describe, expect, it } from "vitest";

import { ControlApi, subscribe } from "../src/api.js";
import { applicableRules, buildRequest, validateParams } from "../src/adaptation.js";
import { renderSessionCard } from "../src/render.js";
import type { PushMessage } from "../src/model.js";

const base = process.env.CONTROL_URL ?? "";

const BSN =
  "Between cycle_starting and cycle_ending, if request then in response " +
  "thermometer_reply eventually within 2000 followed by pulse_reply within 2000";

describe.skipIf(!base)("console against a live service", () => {
  it(
    "loads the requirement, follows the event script, and re-renders an " +
      "extended chain with the current state unchanged within a second",
    async () => {
      const api = new ControlApi(base);
      const loaded = await api.loadRequirement(BSN);
      const sid = loaded.id;

      const pushed: PushMessage[] = [];
      const stream = subscribe(base, {
        onMessage: (m) => {
          if (m.session === sid) pushed.push(m);
        },
        onConnect: () => {},
      });
      try {
        // the monitored cycle begins and the first sensor replies
        await api.sendEvent(sid, "cycle_starting", 0);
        await api.sendEvent(sid, "request", 100);
        await api.sendEvent(sid, "thermometer_reply", 600);

        let state = await api.getSession(sid);
        expect(state.states).toEqual(["waiting_2"]);
        let html = renderSessionCard(state, []);
        expect(html).toContain(`class="node node-current" data-state="waiting_2"`);
        expect(html).not.toContain("waiting_3");

        // the operator extends the chain from the panel
        const rules = applicableRules(state);
        expect(rules.has("add_response")).toBe(true);
        const params = { event: "glucose_reply", bound_ms: "2000" };
        expect(validateParams("add_response", params, state.patterns[0])).toEqual([]);

        const t0 = Date.now();
        state = await api.adapt(sid, buildRequest("add_response", params));
        html = renderSessionCard(state, []);
        const elapsed = Date.now() - t0;

        expect(html).toContain(`data-state="waiting_3"`);
        expect(html).toContain(`class="node node-current" data-state="waiting_2"`);
        expect(state.mtl[0]).toContain("glucose_reply");
        expect(elapsed).toBeLessThan(1000);

        // the push stream reported the adaptation for the live view
        await new Promise((r) => setTimeout(r, 300));
        expect(pushed.some((m) => m.kind === "adaptation")).toBe(true);
      } finally {
        stream.close();
        await api.deleteSession(sid);
      }
    },
    20_000
  );

  it("reconstructs the dashboard from snapshots alone (reload semantics)", async () => {
    const api = new ControlApi(base);
    const loaded = await api.loadRequirement(BSN);
    try {
      await api.sendEvent(loaded.id, "cycle_starting", 0);
      const all = await api.listSessions();
      const mine = all.find((s) => s.id === loaded.id);
      expect(mine).toBeDefined();
      expect(renderSessionCard(mine!, [])).toContain(
        `class="node node-current" data-state="open"`
      );
    } finally {
      await api.deleteSession(loaded.id);
    }
  });
});
