/** Browser wiring: a session store fed by the push stream, re-rendered
 * through the pure builders in render.ts.  The console holds no
 * authoritative state; a reload (or a stream reconnect) rebuilds the view
 * from GET snapshots. */

import { ControlApi, subscribe } from "./api.js";
import { buildRequest, paramFields, RuleKind, validateParams } from "./adaptation.js";
import { messageToLogEntry, type LogEntry, type PushMessage, type SessionState } from "./model.js";
import { renderSessions } from "./render.js";

const REFRESH_DEBOUNCE_MS = 120;
const LOG_LIMIT = 60;

class ConsoleApp {
  private api = new ControlApi("");
  private sessions = new Map<number, SessionState>();
  private logs = new Map<number, LogEntry[]>();
  private dirty = new Set<number>();
  private refreshTimer: number | null = null;

  constructor(private root: Document) {}

  start(): void {
    this.bindForms();
    subscribe("", {
      onMessage: (m) => this.onMessage(m),
      onConnect: () => void this.resnapshot(),
      onStatus: (up) => this.setStatus(up),
    });
  }

  private setStatus(up: boolean): void {
    const el = this.root.getElementById("stream-status");
    if (el) {
      el.textContent = up ? "live" : "reconnecting…";
      el.className = up ? "status-up" : "status-down";
    }
  }

  private async resnapshot(): Promise<void> {
    const states = await this.api.listSessions();
    this.sessions.clear();
    for (const s of states) this.sessions.set(s.id, s);
    this.render();
  }

  private onMessage(m: PushMessage): void {
    if (m.kind === "deleted") {
      this.sessions.delete(m.session);
      this.logs.delete(m.session);
      this.render();
      return;
    }
    const log = this.logs.get(m.session) ?? [];
    log.push(messageToLogEntry(m));
    this.logs.set(m.session, log.slice(-LOG_LIMIT));
    this.dirty.add(m.session);
    this.scheduleRefresh();
  }

  private scheduleRefresh(): void {
    if (this.refreshTimer !== null) return;
    this.refreshTimer = window.setTimeout(() => {
      this.refreshTimer = null;
      void this.refreshDirty();
    }, REFRESH_DEBOUNCE_MS);
  }

  private async refreshDirty(): Promise<void> {
    const ids = [...this.dirty];
    this.dirty.clear();
    await Promise.all(
      ids.map(async (id) => {
        try {
          this.sessions.set(id, await this.api.getSession(id));
        } catch {
          this.sessions.delete(id);
        }
      })
    );
    this.render();
  }

  private render(): void {
    const host = this.root.getElementById("sessions");
    if (!host) return;
    const states = [...this.sessions.values()].sort((a, b) => a.id - b.id);
    host.innerHTML = renderSessions(states, this.logs);
    this.bindAdaptationForms(host);
  }

  private bindForms(): void {
    const loadForm = this.root.getElementById("load-form") as HTMLFormElement | null;
    loadForm?.addEventListener("submit", (e) => {
      e.preventDefault();
      const input = loadForm.elements.namedItem("requirement") as HTMLInputElement;
      void this.api
        .loadRequirement(input.value)
        .then(() => {
          input.value = "";
          this.clearError("load-error");
        })
        .catch((err) => this.showError("load-error", err));
    });
    const eventForm = this.root.getElementById("event-form") as HTMLFormElement | null;
    eventForm?.addEventListener("submit", (e) => {
      e.preventDefault();
      const type = (eventForm.elements.namedItem("event_type") as HTMLInputElement).value.trim();
      const ts = parseInt(
        (eventForm.elements.namedItem("timestamp_ms") as HTMLInputElement).value,
        10
      );
      void this.api
        .sendEvent(null, type, ts)
        .then(() => this.clearError("event-error"))
        .catch((err) => this.showError("event-error", err));
    });
  }

  private bindAdaptationForms(host: HTMLElement): void {
    for (const form of host.querySelectorAll<HTMLFormElement>("form.adaptation")) {
      const select = form.elements.namedItem("rule") as HTMLSelectElement;
      select.addEventListener("change", () => this.renderParams(form));
      this.renderParams(form);
      form.addEventListener("submit", (e) => {
        e.preventDefault();
        void this.submitAdaptation(form);
      });
    }
  }

  private renderParams(form: HTMLFormElement): void {
    const kind = (form.elements.namedItem("rule") as HTMLSelectElement).value as RuleKind;
    const span = form.querySelector(".params");
    if (!span) return;
    span.innerHTML = paramFields(kind)
      .map(
        (f) =>
          `<label>${f.label} <input name="${f.name}" data-kind="${f.kind}" placeholder="${f.placeholder}"/></label>`
      )
      .join("");
  }

  private async submitAdaptation(form: HTMLFormElement): Promise<void> {
    const sessionId = parseInt(form.dataset.session ?? "", 10);
    const state = this.sessions.get(sessionId);
    const errorEl = form.querySelector(".adaptation-error") as HTMLElement;
    if (!state || state.patterns.length !== 1) return;
    const kind = (form.elements.namedItem("rule") as HTMLSelectElement).value as RuleKind;
    const params: Record<string, string> = {};
    for (const input of form.querySelectorAll<HTMLInputElement>("input")) {
      params[input.name] = input.value;
    }
    const problems = validateParams(kind, params, state.patterns[0]);
    if (problems.length > 0) {
      errorEl.textContent = problems.join("; ");
      return;
    }
    errorEl.textContent = "";
    try {
      const updated = await this.api.adapt(sessionId, buildRequest(kind, params));
      this.sessions.set(sessionId, updated);
      this.render();
    } catch (err) {
      errorEl.textContent = err instanceof Error ? err.message : String(err);
    }
  }

  private showError(id: string, err: unknown): void {
    const el = this.root.getElementById(id);
    if (el) el.textContent = err instanceof Error ? err.message : String(err);
  }

  private clearError(id: string): void {
    const el = this.root.getElementById(id);
    if (el) el.textContent = "";
  }
}

if (typeof document !== "undefined") {
  new ConsoleApp(document).start();
}
