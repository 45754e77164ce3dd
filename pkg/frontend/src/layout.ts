/** Deterministic layered left-to-right layout for observer graphs:
 * closed, open, waiting_1 … waiting_n, then any other states, error last.
 * Stable positions keep before/after adaptation diffs visually comparable. */

import type { ObserverDoc, TransitionDoc } from "./model.js";

export interface NodeBox {
  id: string;
  x: number;
  y: number;
  isInitial: boolean;
  isError: boolean;
}

export interface EdgeLine {
  source: string;
  target: string;
  text: string;
  /** parallel-edge index for curvature; 0 = straight */
  lane: number;
  selfLoop: boolean;
  backward: boolean;
}

export interface GraphLayout {
  nodes: NodeBox[];
  edges: EdgeLine[];
  width: number;
  height: number;
}

const X_STEP = 170;
const X_MARGIN = 90;
const Y_MID = 90;

function waitingIndex(name: string): number | null {
  const m = /^waiting_(\d+)$/.exec(name);
  return m ? parseInt(m[1], 10) : null;
}

/** Canonical display order; unknown names sort alphabetically before error. */
export function stateOrder(states: string[], error: string | null): string[] {
  const known = (s: string): [number, number, string] => {
    if (s === "closed") return [0, 0, s];
    if (s === "ok") return [0, 0, s];
    if (s === "open") return [1, 0, s];
    const w = waitingIndex(s);
    if (w !== null) return [2, w, s];
    if (error !== null && s === error) return [4, 0, s];
    return [3, 0, s];
  };
  return [...states].sort((a, b) => {
    const [ga, wa, na] = known(a);
    const [gb, wb, nb] = known(b);
    if (ga !== gb) return ga - gb;
    if (wa !== wb) return wa - wb;
    return na < nb ? -1 : na > nb ? 1 : 0;
  });
}

export function edgeText(t: TransitionDoc, clock: string): string {
  const parts: string[] = [];
  if (t.label) parts.push(t.label);
  if (t.guard) parts.push(`${clock} ${t.guard.op} ${t.guard.bound_ms}`);
  if (t.reset) parts.push(`${clock}:=0`);
  return parts.join(" · ");
}

export function layoutObserver(doc: ObserverDoc): GraphLayout {
  const order = stateOrder(doc.states, doc.error);
  const pos = new Map<string, number>();
  order.forEach((s, i) => pos.set(s, i));

  const nodes: NodeBox[] = order.map((s, i) => ({
    id: s,
    x: X_MARGIN + i * X_STEP,
    y: Y_MID,
    isInitial: s === doc.initial,
    isError: doc.error !== null && s === doc.error,
  }));

  const laneCount = new Map<string, number>();
  const edges: EdgeLine[] = doc.transitions.map((t) => {
    const key = `${t.source}→${t.target}`;
    const lane = laneCount.get(key) ?? 0;
    laneCount.set(key, lane + 1);
    return {
      source: t.source,
      target: t.target,
      text: edgeText(t, doc.clock),
      lane,
      selfLoop: t.source === t.target,
      backward: (pos.get(t.target) ?? 0) < (pos.get(t.source) ?? 0),
    };
  });

  return {
    nodes,
    edges,
    width: X_MARGIN * 2 + Math.max(0, order.length - 1) * X_STEP,
    height: 200,
  };
}
