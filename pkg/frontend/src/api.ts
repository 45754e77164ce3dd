/** HTTP client for the control service and the server-push subscription.
 * The push reader uses fetch streaming (works in browsers and node alike)
 * and reconnects with a resnapshot callback when the stream drops. */

import type { AdaptationBody } from "./adaptation.js";
import type { PushMessage, SessionState } from "./model.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number, readonly code?: string) {
    super(message);
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let code: string | undefined;
    let message = `${res.status}`;
    try {
      const body = await res.json();
      code = body?.detail?.code;
      message = body?.detail?.message ?? JSON.stringify(body);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(message, res.status, code);
  }
  return (await res.json()) as T;
}

export class ControlApi {
  constructor(readonly base: string) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  listSessions(): Promise<SessionState[]> {
    return fetch(this.url("/sessions")).then((r) => asJson<SessionState[]>(r));
  }

  getSession(id: number): Promise<SessionState> {
    return fetch(this.url(`/sessions/${id}`)).then((r) => asJson<SessionState>(r));
  }

  loadRequirement(requirement: string): Promise<SessionState> {
    return fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ requirement }),
    }).then((r) => asJson<SessionState>(r));
  }

  sendEvent(sessionId: number | null, eventType: string, timestampMs: number): Promise<unknown> {
    const path = sessionId === null ? "/events" : `/sessions/${sessionId}/events`;
    return fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ event_type: eventType, timestamp_ms: timestampMs }),
    }).then((r) => asJson(r));
  }

  adapt(sessionId: number, body: AdaptationBody): Promise<SessionState> {
    return fetch(this.url(`/sessions/${sessionId}/adaptations`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => asJson<SessionState>(r));
  }

  deleteSession(id: number): Promise<unknown> {
    return fetch(this.url(`/sessions/${id}`), { method: "DELETE" }).then((r) => asJson(r));
  }
}

export interface StreamHandle {
  close(): void;
}

export interface StreamCallbacks {
  onMessage(m: PushMessage): void;
  /** called on (re)connect; the app resnapshots so nothing is missed */
  onConnect(): void;
  onStatus?(connected: boolean): void;
}

export function subscribe(base: string, callbacks: StreamCallbacks): StreamHandle {
  let closed = false;
  const controller = { abort: new AbortController() };

  async function pump(): Promise<void> {
    while (!closed) {
      try {
        const res = await fetch(base.replace(/\/$/, "") + "/stream", {
          signal: controller.abort.signal,
        });
        if (!res.ok || !res.body) throw new Error(`stream ${res.status}`);
        callbacks.onStatus?.(true);
        callbacks.onConnect();
        const reader = res.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          let cut: number;
          while ((cut = buffer.indexOf("\n\n")) >= 0) {
            const chunk = buffer.slice(0, cut);
            buffer = buffer.slice(cut + 2);
            for (const line of chunk.split("\n")) {
              if (line.startsWith("data: ")) {
                try {
                  callbacks.onMessage(JSON.parse(line.slice(6)) as PushMessage);
                } catch {
                  /* ignore malformed frames */
                }
              }
            }
          }
        }
      } catch {
        /* fall through to reconnect */
      }
      callbacks.onStatus?.(false);
      if (!closed) {
        await new Promise((r) => setTimeout(r, 1000));
      }
    }
  }

  void pump();
  return {
    close() {
      closed = true;
      controller.abort.abort();
    },
  };
}
