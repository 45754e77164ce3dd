/** Pure HTML/SVG string builders; the browser app only wires them to the DOM,
 * so every rendering decision is unit-testable headlessly. */

import { layoutObserver } from "./layout.js";
import type { LogEntry, ObserverDoc, SessionState } from "./model.js";
import { applicableRules, RULE_LABELS, RuleKind, paramFields } from "./adaptation.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderGraphSvg(doc: ObserverDoc, current: string): string {
  const g = layoutObserver(doc);
  const R = 26;
  const byId = new Map(g.nodes.map((n) => [n.id, n]));
  const parts: string[] = [];
  parts.push(
    `<svg class="graph" viewBox="0 0 ${g.width} ${g.height}" xmlns="http://www.w3.org/2000/svg">`
  );
  parts.push(
    `<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" ` +
      `markerWidth="7" markerHeight="7" orient="auto-start-reverse">` +
      `<path d="M 0 0 L 10 5 L 0 10 z"/></marker></defs>`
  );

  for (const e of g.edges) {
    const a = byId.get(e.source);
    const b = byId.get(e.target);
    if (!a || !b) continue;
    let path: string;
    let lx: number;
    let ly: number;
    if (e.selfLoop) {
      const up = 46 + e.lane * 26;
      path = `M ${a.x - 12} ${a.y - R + 4} C ${a.x - 34} ${a.y - up}, ${a.x + 34} ${a.y - up}, ${a.x + 12} ${a.y - R + 4}`;
      lx = a.x;
      ly = a.y - up + 6;
    } else {
      const dir = b.x >= a.x ? 1 : -1;
      const x1 = a.x + dir * R;
      const x2 = b.x - dir * R;
      // forward edges arc above the spine, backward edges below; parallel
      // edges fan out on separate lanes
      const base = e.backward ? 54 : 34;
      const bend = (e.backward ? 1 : -1) * (base + e.lane * 30);
      const my = a.y + bend;
      path = `M ${x1} ${a.y} Q ${(x1 + x2) / 2} ${my}, ${x2} ${b.y}`;
      lx = (x1 + x2) / 2;
      ly = a.y + bend * 0.62 + (e.backward ? 12 : -4);
    }
    parts.push(`<path class="edge" d="${path}" marker-end="url(#arrow)"/>`);
    parts.push(`<text class="edge-label" x="${lx}" y="${ly}" text-anchor="middle">${esc(e.text)}</text>`);
  }

  for (const n of g.nodes) {
    const classes = ["node"];
    if (n.id === current) classes.push("node-current");
    if (n.isError) classes.push("node-error");
    if (n.isInitial) classes.push("node-initial");
    parts.push(`<g class="${classes.join(" ")}" data-state="${esc(n.id)}">`);
    if (n.isInitial) {
      parts.push(`<path class="initial-mark" d="M ${n.x - R - 26} ${n.y} L ${n.x - R - 4} ${n.y}" marker-end="url(#arrow)"/>`);
    }
    parts.push(`<circle cx="${n.x}" cy="${n.y}" r="${R}"/>`);
    parts.push(`<text x="${n.x}" y="${n.y + 4}" text-anchor="middle">${esc(n.id)}</text>`);
    parts.push(`</g>`);
  }
  parts.push(`</svg>`);
  return parts.join("");
}

export function renderCountdown(state: SessionState): string {
  if (state.pending_timer === null) return "no timer armed";
  const now = state.now ?? 0;
  const left = Math.max(0, state.pending_timer - now);
  return `timer at ${state.pending_timer} ms (${left} ms of monitored time left)`;
}

function renderAdaptationPanel(state: SessionState): string {
  const rules = applicableRules(state);
  const options = (Object.keys(RULE_LABELS) as RuleKind[])
    .map((kind) => {
      const off = rules.has(kind) ? "" : " disabled";
      return `<option value="${kind}"${off}>${RULE_LABELS[kind]}</option>`;
    })
    .join("");
  const first = (Object.keys(RULE_LABELS) as RuleKind[]).find((k) => rules.has(k));
  const fields = first ? paramFields(first) : [];
  const inputs = fields
    .map(
      (f) =>
        `<label>${esc(f.label)} <input name="${f.name}" data-kind="${f.kind}" ` +
        `placeholder="${esc(f.placeholder)}"/></label>`
    )
    .join("");
  const disabledAll = rules.size === 0 ? " disabled" : "";
  return (
    `<form class="adaptation" data-session="${state.id}">` +
    `<select name="rule"${disabledAll}>${options}</select>` +
    `<span class="params">${inputs}</span>` +
    `<button type="submit"${disabledAll}>apply adaptation</button>` +
    `<span class="adaptation-error" role="alert"></span>` +
    `</form>`
  );
}

export function renderSessionCard(state: SessionState, log: LogEntry[]): string {
  const badge =
    state.verdict === "Violated"
      ? `<span class="badge badge-violated">Violated at ${state.first_violation ?? "?"} ms</span>`
      : `<span class="badge badge-running">Running</span>`;
  const graphs = state.observers
    .map(
      (o, i) =>
        `<figure class="observer">` +
        renderGraphSvg(o.observer, o.current) +
        `<figcaption>` +
        `<div class="english">${esc(o.english)}</div>` +
        `<div class="mtl">${esc(o.mtl)}</div>` +
        `<div class="clock">clock ${
          o.clock_valuation === null ? "unset" : `= ${o.clock_valuation} ms`
        }${o.next_timer !== null ? `, next expiry at ${o.next_timer} ms` : ""}</div>` +
        `</figcaption></figure>`
    )
    .join("");
  const logItems = log
    .slice(-12)
    .map(
      (e) =>
        `<li class="log-${e.kind}">${e.timestamp !== null ? `<b>${e.timestamp}</b> ` : ""}${esc(e.text)}</li>`
    )
    .join("");
  return (
    `<section class="session" data-session="${state.id}">` +
    `<header><h2>session ${state.id}</h2>${badge}` +
    `<span class="meta">monitored time ${state.now ?? "—"} ms · ${renderCountdown(state)} · queue ${state.queue_length}</span>` +
    `</header>` +
    `<div class="graphs">${graphs}</div>` +
    renderAdaptationPanel(state) +
    `<details open class="log"><summary>recent activity</summary><ul>${logItems}</ul></details>` +
    `</section>`
  );
}

export function renderSessions(states: SessionState[], logs: Map<number, LogEntry[]>): string {
  if (states.length === 0) {
    return `<p class="empty">No sessions. Load a requirement above.</p>`;
  }
  return states.map((s) => renderSessionCard(s, logs.get(s.id) ?? [])).join("");
}
