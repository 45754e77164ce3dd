"""Long-lived session registry behind both transports (line protocol, HTTP).

Holds the monitor sessions, drives their queues to quiescence after every
command, and fans out structured notifications to subscribers through
bounded drop-oldest buffers so a slow consumer can never stall
verification.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .. import mtl, pap
from ..engine import MonitorSession, ProcessResult
from ..errors import AdaptRvError
from ..observer import Event, observer_from_dict, observer_to_dict
from ..psp import parse_requirement, render_requirement, to_mtl

log = logging.getLogger("adaptrv.service")

TIME_VIRTUAL = "virtual"
TIME_WALL = "wall"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    time_mode: str = TIME_VIRTUAL
    log_level: str = "info"
    push_buffer: int = 256

    @classmethod
    def load(cls, path: Optional[str] = None, **overrides) -> "ServiceConfig":
        values = {}
        if path:
            values.update(json.loads(Path(path).read_text()))
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class UnknownSessionError(AdaptRvError):
    code = "unknown-session"


class Subscriber:
    """A bounded notification mailbox; overflow drops the oldest message and
    counts the loss."""

    def __init__(self, limit: int):
        self.messages: queue.Queue = queue.Queue(maxsize=limit)
        self.dropped = 0

    def push(self, message: dict) -> None:
        while True:
            try:
                self.messages.put_nowait(message)
                return
            except queue.Full:
                try:
                    self.messages.get_nowait()
                    self.dropped += 1
                except queue.Empty:
                    pass

    def drain(self) -> list[dict]:
        out = []
        while True:
            try:
                out.append(self.messages.get_nowait())
            except queue.Empty:
                return out


@dataclass
class _Record:
    session: MonitorSession
    requirement: str
    last_seq: int = 0
    wall_timer: Optional[threading.Timer] = None
    wall_armed_at: Optional[int] = None


class SessionManager:
    def __init__(self, config: Optional[ServiceConfig] = None):
        self.config = config or ServiceConfig()
        self._lock = threading.RLock()
        self._records: dict[int, _Record] = {}
        self._next_id = 0
        self._subscribers: list[Subscriber] = []
        self._epoch = time.monotonic()

    # -- time ------------------------------------------------------------

    def wall_now_ms(self) -> int:
        return int((time.monotonic() - self._epoch) * 1000)

    # -- subscriptions ------------------------------------------------------

    def subscribe(self) -> Subscriber:
        sub = Subscriber(self.config.push_buffer)
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def _emit(self, message: dict) -> None:
        for sub in list(self._subscribers):
            sub.push(message)

    # -- sessions ------------------------------------------------------------

    def load_requirement(self, text: str) -> dict:
        pattern = parse_requirement(text)
        with self._lock:
            sid = self._next_id
            self._next_id += 1
            session = MonitorSession.for_pattern(
                pattern, session_id=str(sid), sink=self._violation_sink, history_limit=1000
            )
            self._records[sid] = _Record(session=session, requirement=text)
        info = self.describe(sid)
        self._emit({"session": sid, "kind": "loaded", **info})
        return info

    def restore(self, doc: dict) -> dict:
        """Recreate a session from a SAVE document, observer state verbatim."""
        patterns = [parse_requirement(t) for t in doc["requirements"]]
        observers = [observer_from_dict(o) for o in doc["observers"]]
        with self._lock:
            sid = self._next_id
            self._next_id += 1
            session = MonitorSession(
                patterns,
                observers,
                session_id=str(sid),
                sink=self._violation_sink,
                history_limit=1000,
            )
            session.now = doc.get("now")
            session.last_submitted = doc.get("last_submitted")
            session.first_violation = doc.get("first_violation")
            session._notified = bool(doc.get("notified", False))
            self._records[sid] = _Record(session=session, requirement=doc["requirements"][0])
        info = self.describe(sid)
        self._emit({"session": sid, "kind": "loaded", **info})
        return info

    def delete(self, sid: int) -> None:
        with self._lock:
            rec = self._require(sid)
            if rec.wall_timer is not None:
                rec.wall_timer.cancel()
            del self._records[sid]
        self._emit({"session": sid, "kind": "deleted"})

    def session_ids(self) -> list[int]:
        with self._lock:
            return sorted(self._records)

    def _require(self, sid: int) -> _Record:
        if sid not in self._records:
            raise UnknownSessionError(f"no session {sid}")
        return self._records[sid]

    # -- commands ------------------------------------------------------------

    def submit_event(self, event_type: str, timestamp_ms: Optional[int], sid: Optional[int] = None) -> dict:
        """Feed one event to one session (or, by default, to all of them)."""
        if timestamp_ms is None:
            if self.config.time_mode != TIME_WALL:
                raise AdaptRvError("virtual time mode needs explicit timestamps")
            timestamp_ms = self.wall_now_ms()
        ev = Event(event_type, timestamp_ms)
        with self._lock:
            targets = [sid] if sid is not None else self.session_ids()
            verdicts = {}
            for target in targets:
                rec = self._require(target)
                rec.session.submit_event(ev)
                self._drive(target, rec)
                verdicts[str(target)] = rec.session.verdict.value
        return {"event_type": event_type, "timestamp_ms": timestamp_ms, "verdicts": verdicts}

    def adapt(self, sid: int, rule: pap.AdaptationRule) -> dict:
        """Queue the adaptation and drive the session until it has applied
        (all earlier events run against the unchanged observer first)."""
        with self._lock:
            rec = self._require(sid)
            before = [mtl.render(to_mtl(p)) for p in rec.session.patterns]
            rec.session.request_adaptation(rule)
            self._drive(sid, rec)  # raises AdaptationError when rejected
            info = self.describe(sid)
        self._emit(
            {
                "session": sid,
                "kind": "adaptation",
                "rule": rule.describe(),
                "old_property": before,
                "new_property": info["mtl"],
                "timestamp": rec.session.now,
                "state": info["states"],
            }
        )
        return info

    @staticmethod
    def _pattern_info(pattern) -> dict:
        return {
            "kind": pattern.pattern.value,
            "scope": pattern.scope.kind.value,
            "scope_open": pattern.scope.q,
            "scope_close": pattern.scope.r,
            "trigger": pattern.trigger,
            "subject": pattern.subject,
            "responses": [
                {"event": t.event, "deadline_ms": t.deadline_ms} for t in pattern.responses
            ],
            "recurrence_period": pattern.recurrence_period,
            "events": sorted(pattern.events()),
        }

    def describe(self, sid: int) -> dict:
        with self._lock:
            rec = self._require(sid)
            s = rec.session
            observers = []
            for obs, pattern in zip(s.observers, s.patterns):
                valuation = (
                    None
                    if obs.clock_reset_at is None or s.now is None
                    else max(0, s.now - obs.clock_reset_at)
                )
                observers.append(
                    {
                        "current": obs.current,
                        "clock_reset_at": obs.clock_reset_at,
                        "clock_valuation": valuation,
                        "next_timer": obs.next_timer(),
                        "violated": obs.violated,
                        "english": render_requirement(pattern),
                        "mtl": mtl.render(to_mtl(pattern)),
                        "observer": observer_to_dict(obs, snapshot=True),
                    }
                )
            return {
                "id": sid,
                "requirement": rec.requirement,
                "english": [render_requirement(p) for p in s.patterns],
                "mtl": [mtl.render(to_mtl(p)) for p in s.patterns],
                "patterns": [self._pattern_info(p) for p in s.patterns],
                "verdict": s.verdict.value,
                "now": s.now,
                "pending_timer": s.pending_timer,
                "first_violation": s.first_violation,
                "queue_length": len(s.queue),
                "states": [o["current"] for o in observers],
                "observers": observers,
            }

    def verdict(self, sid: int) -> dict:
        with self._lock:
            rec = self._require(sid)
            return {
                "id": sid,
                "verdict": rec.session.verdict.value,
                "first_violation": rec.session.first_violation,
            }

    def save(self, sid: int, path: str) -> dict:
        doc = self.snapshot(sid)
        Path(path).write_text(json.dumps(doc, indent=2))
        return {"id": sid, "path": str(path)}

    def snapshot(self, sid: int) -> dict:
        with self._lock:
            rec = self._require(sid)
            s = rec.session
            return {
                "requirements": [render_requirement(p) for p in s.patterns],
                "observers": [observer_to_dict(o, snapshot=True) for o in s.observers],
                "now": s.now,
                "last_submitted": s.last_submitted,
                "first_violation": s.first_violation,
                "notified": s._notified,
            }

    # -- internals ---------------------------------------------------------

    def _drive(self, sid: int, rec: _Record) -> None:
        try:
            rec.session.run_until_idle()
        finally:
            self._flush_history(sid, rec)
            if self.config.time_mode == TIME_WALL:
                self._arm_wall_timer(sid, rec)

    def _flush_history(self, sid: int, rec: _Record) -> None:
        if rec.session.history is None:
            return
        for entry in rec.session.history:
            if entry.seq <= rec.last_seq:
                continue
            rec.last_seq = entry.seq
            kind = {"event": "step", "timer": "timer", "adaptation": "adaptation-step"}[entry.kind]
            self._emit(
                {
                    "session": sid,
                    "kind": kind,
                    "detail": entry.detail,
                    "timestamp": entry.timestamp,
                    "state": list(entry.states),
                    "verdict": entry.verdict.value,
                    "result": entry.result.value,
                }
            )

    def _violation_sink(self, session_id: str, rendered: str, at: Optional[int]) -> None:
        self._emit(
            {
                "session": int(session_id) if session_id.isdigit() else session_id,
                "kind": "violation",
                "rendered_property": rendered,
                "timestamp": at,
            }
        )

    def _arm_wall_timer(self, sid: int, rec: _Record) -> None:
        due = rec.session.pending_timer
        if due == rec.wall_armed_at:
            return
        if rec.wall_timer is not None:
            rec.wall_timer.cancel()
            rec.wall_timer = None
            rec.wall_armed_at = None
        if due is None:
            return
        delay_s = max(0.0, (due - self.wall_now_ms()) / 1000.0)

        def fire():
            with self._lock:
                current = self._records.get(sid)
                if current is None or current.session.pending_timer != due:
                    return
                current.session.enqueue_timer(due)
                current.wall_armed_at = None
                self._drive(sid, current)

        rec.wall_timer = threading.Timer(delay_s, fire)
        rec.wall_timer.daemon = True
        rec.wall_armed_at = due
        rec.wall_timer.start()
