import { describe, expect, it } from "vitest";

import { edgeText, layoutObserver, stateOrder } from "../src/layout.js";
import { bsnObserverDoc } from "./fixtures.js";

describe("state ordering", () => {
  it("lays out closed, open, waiting_i…, error left to right", () => {
    const order = stateOrder(["error", "waiting_2", "open", "closed", "waiting_1"], "error");
    expect(order).toEqual(["closed", "open", "waiting_1", "waiting_2", "error"]);
  });

  it("sorts waiting states numerically, not lexically", () => {
    const order = stateOrder(["waiting_10", "waiting_2", "waiting_1", "open"], null);
    expect(order).toEqual(["open", "waiting_1", "waiting_2", "waiting_10"]);
  });

  it("keeps unknown states between the chain and the error state", () => {
    const order = stateOrder(["error", "zeta", "alpha", "ok"], "error");
    expect(order).toEqual(["ok", "alpha", "zeta", "error"]);
  });
});

describe("graph layout", () => {
  it("is deterministic and strictly left to right", () => {
    const a = layoutObserver(bsnObserverDoc());
    const b = layoutObserver(bsnObserverDoc());
    expect(a).toEqual(b);
    const xs = a.nodes.map((n) => n.x);
    expect([...xs].sort((p, q) => p - q)).toEqual(xs);
    expect(a.nodes.map((n) => n.id)).toEqual([
      "closed",
      "open",
      "waiting_1",
      "waiting_2",
      "error",
    ]);
  });

  it("marks initial and error nodes", () => {
    const g = layoutObserver(bsnObserverDoc());
    expect(g.nodes.find((n) => n.id === "closed")?.isInitial).toBe(true);
    expect(g.nodes.find((n) => n.id === "error")?.isError).toBe(true);
  });

  it("flags backward edges and fans out parallel edges", () => {
    const g = layoutObserver(bsnObserverDoc());
    const back = g.edges.find((e) => e.source === "open" && e.target === "closed");
    expect(back?.backward).toBe(true);
    const toError = g.edges.filter((e) => e.source === "waiting_1" && e.target === "error");
    expect(toError.map((e) => e.lane).sort()).toEqual([0, 1]);
  });

  it("renders guards and resets on edge labels", () => {
    const doc = bsnObserverDoc();
    const hop = doc.transitions[3];
    expect(edgeText(hop, "c")).toBe("thermometer_reply · c <= 2000 · c:=0");
    const timeout = doc.transitions[5];
    expect(edgeText(timeout, "c")).toBe("c > 2000");
  });
});
