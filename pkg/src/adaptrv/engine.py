"""The verification loop: event filtering, FIFO queue, timer management,
violation notification, and quiescent application of adaptations.

Time is virtual: event timestamps drive the observer clocks, and deadline
expiries ("timers") are interleaved by timestamp.  A timer scheduled for
instant T fires before any queued event with a later timestamp and after
events with timestamps <= T, which makes offline and online runs agree.
An expiry only counts once some submission attests that time reached it,
so pre-filtering irrelevant events cannot change a verdict: even dropped
events advance the session's knowledge of time.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from . import pap
from .errors import AdaptationError, TimeRegressionError
from .observer import Event, Observer
from .psp import PatternInstance, instantiate_observer, relevant_event_types, render_requirement


class Verdict(Enum):
    RUNNING = "Running"
    VIOLATED = "Violated"


class ItemKind(Enum):
    EXTERNAL = "external"
    TIMER = "timer"
    ADAPTATION = "adaptation"


@dataclass(frozen=True)
class QueueItem:
    kind: ItemKind
    event: Optional[Event] = None
    timer_at: Optional[int] = None
    rule: Optional[pap.AdaptationRule] = None
    knowledge: Optional[int] = None  # time attested when an adaptation was requested


class ProcessResult(Enum):
    IDLE = "idle"
    STEPPED = "stepped"
    TIMER_FIRED = "timer-fired"
    ADAPTED = "adapted"
    VIOLATION_DETECTED = "violation-detected"


@dataclass(frozen=True)
class LogEntry:
    seq: int
    kind: str  # event | timer | adaptation
    detail: str
    timestamp: Optional[int]
    states: tuple[str, ...]
    result: ProcessResult
    verdict: Verdict


# sink signature: (session_id, rendered property, violation timestamp)
ViolationSink = Callable[[str, str, int], None]


class MonitorSession:
    """One monitored property (or, after a chain split, the properties that
    replaced it) sharing a single FIFO queue.

    The producer side is `submit_event` / `request_adaptation`; the consumer
    side is `process_next`.  The queue is the only shared structure.
    """

    def __init__(
        self,
        patterns: list[PatternInstance],
        observers: list[Observer],
        session_id: str = "0",
        sink: Optional[ViolationSink] = None,
        record_history: bool = True,
        history_limit: int = 100_000,
        relevant: Optional[set[str]] = None,
    ):
        if patterns and len(patterns) != len(observers):
            raise ValueError("one observer per pattern")
        if not patterns and relevant is None:
            raise ValueError("pattern-less sessions need an explicit relevant set")
        self.session_id = session_id
        self.patterns = list(patterns)
        self.observers = list(observers)
        self.relevant: set[str] = set(relevant) if relevant is not None else set()
        for p in patterns:
            self.relevant |= relevant_event_types(p)
        self.queue: deque[QueueItem] = deque()
        self.sink = sink
        self.now: Optional[int] = None
        self.last_submitted: Optional[int] = None
        self.first_violation: Optional[int] = None
        self._notified = False
        self._seq = 0
        self.history: Optional[deque[LogEntry]] = (
            deque(maxlen=history_limit) if record_history else None
        )

    @classmethod
    def for_pattern(
        cls,
        pattern: PatternInstance,
        session_id: str = "0",
        sink: Optional[ViolationSink] = None,
        record_history: bool = True,
        history_limit: int = 100_000,
    ) -> "MonitorSession":
        return cls(
            [pattern],
            [instantiate_observer(pattern)],
            session_id=session_id,
            sink=sink,
            record_history=record_history,
            history_limit=history_limit,
        )

    # -- producer side ---------------------------------------------------

    def submit_event(self, ev: Event) -> None:
        """Enqueue a relevant event; drop others (their timestamps still count
        as evidence that time has passed)."""
        if self.last_submitted is not None and ev.timestamp < self.last_submitted:
            raise TimeRegressionError(
                f"event at {ev.timestamp} after submission at {self.last_submitted}"
            )
        self.last_submitted = ev.timestamp
        if ev.event_type in self.relevant:
            self.queue.append(QueueItem(ItemKind.EXTERNAL, event=ev))

    def request_adaptation(self, rule: pap.AdaptationRule) -> None:
        """Queue an adaptation behind everything already queued, so all earlier
        events are verified with the unchanged observer."""
        self.queue.append(
            QueueItem(ItemKind.ADAPTATION, rule=rule, knowledge=self.last_submitted)
        )

    def enqueue_timer(self, at: int) -> None:
        """Wall-clock mode only: a real timer elapsed at instant `at`."""
        self.queue.append(QueueItem(ItemKind.TIMER, timer_at=at))
        if self.last_submitted is None or at > self.last_submitted:
            self.last_submitted = at

    # -- state -------------------------------------------------------------

    @property
    def verdict(self) -> Verdict:
        return Verdict.VIOLATED if any(o.violated for o in self.observers) else Verdict.RUNNING

    @property
    def pending_timer(self) -> Optional[int]:
        timers = [t for t in (o.next_timer() for o in self.observers) if t is not None]
        return min(timers) if timers else None

    def _knowledge(self) -> Optional[int]:
        vals = [v for v in (self.now, self.last_submitted) if v is not None]
        return max(vals) if vals else None

    # -- consumer side -------------------------------------------------------

    def process_next(self) -> ProcessResult:
        """Process one queued item (or a due deadline expiry). Returns IDLE
        when there is nothing to do."""
        due = self.pending_timer
        head = self.queue[0] if self.queue else None
        if due is not None and self._timer_goes_first(due, head):
            return self._fire_timer(due)
        if head is None:
            return ProcessResult.IDLE
        self.queue.popleft()
        if head.kind is ItemKind.EXTERNAL:
            return self._process_event(head.event)
        if head.kind is ItemKind.TIMER:
            return self._process_timer_item(head.timer_at)
        return self._process_adaptation(head.rule, head.knowledge)

    def run_until_idle(self) -> None:
        while self.process_next() is not ProcessResult.IDLE:
            pass

    def _timer_goes_first(self, due: int, head: Optional[QueueItem]) -> bool:
        if head is None:
            know = self._knowledge()
            return know is not None and due <= know
        if head.kind is ItemKind.EXTERNAL:
            # queued events with timestamps <= due keep FIFO priority
            return due < head.event.timestamp
        if head.kind is ItemKind.ADAPTATION:
            # an expiry that elapsed before the adaptation was requested
            # precedes it, mirroring a real timer already in the queue
            know = head.knowledge if head.knowledge is not None else self.now
            return know is not None and due <= know
        return False

    def _fire_timer(self, due: int) -> ProcessResult:
        at = max(due, self.now) if self.now is not None else due
        fired = False
        entered = False
        for obs in self.observers:
            if obs.next_timer() == due:
                taken, err = self._drain_time_triggered(obs, at)
                fired = fired or taken
                entered = entered or err
        self.now = at
        result = ProcessResult.VIOLATION_DETECTED if self._note_violation(at) else (
            ProcessResult.TIMER_FIRED if fired else ProcessResult.IDLE
        )
        self._log("timer", f"expiry at {due}", at, result)
        return result

    def _drain_time_triggered(self, obs: Observer, at: int) -> tuple[bool, bool]:
        """Take unlabeled transitions enabled at `at` until none is, bounded by
        the state count (the chain cannot cycle: each hop changes state)."""
        any_taken = False
        entered = False
        for _ in range(len(obs.states) + 1):
            r = obs.advance_time(at)
            if not r.taken:
                break
            any_taken = True
            entered = entered or r.entered_error
        return any_taken, entered

    def _process_event(self, ev: Event) -> ProcessResult:
        for obs in self.observers:
            obs.step(ev)
        self.now = ev.timestamp
        result = (
            ProcessResult.VIOLATION_DETECTED
            if self._note_violation(ev.timestamp)
            else ProcessResult.STEPPED
        )
        self._log("event", ev.event_type, ev.timestamp, result)
        return result

    def _process_timer_item(self, at: int) -> ProcessResult:
        # a wall-clock timer that was armed earlier; ignore if it went stale
        due = self.pending_timer
        if due is None or due > at:
            self._log("timer", f"stale timer at {at}", at, ProcessResult.IDLE)
            if self.now is None or at > self.now:
                self.now = at
            return ProcessResult.IDLE
        return self._fire_timer(due)

    def _process_adaptation(self, rule: pap.AdaptationRule, knowledge: Optional[int]) -> ProcessResult:
        if len(self.observers) != 1:
            raise AdaptationError("adaptation needs a single-observer session (was it split?)")
        outcome = pap.apply(self.observers[0], self.patterns[0], rule)
        self.observers = list(outcome.observers)
        self.patterns = list(outcome.patterns)
        self.relevant = set()
        for p in self.patterns:
            self.relevant |= relevant_event_types(p)
        # recheck at the instant the adaptation lands: a changed guard may
        # already be enabled ("a shrunk bound can violate immediately")
        at = max(v for v in (self.now, knowledge) if v is not None) if (
            self.now is not None or knowledge is not None
        ) else None
        entered = False
        if at is not None:
            for obs in self.observers:
                _, err = self._drain_time_triggered(obs, at)
                entered = entered or err
        result = (
            ProcessResult.VIOLATION_DETECTED
            if (entered and self._note_violation(at))
            else ProcessResult.ADAPTED
        )
        self._log("adaptation", rule.describe(), at, result)
        return result

    # -- notification ------------------------------------------------------

    def _note_violation(self, at: Optional[int]) -> bool:
        """True the first time the session enters Violated; fires the sink."""
        if self._notified or self.verdict is Verdict.RUNNING:
            return False
        self._notified = True
        self.first_violation = at
        if self.sink is not None:
            bad = next(
                (i for i, o in enumerate(self.observers) if o.violated), 0
            )
            rendering = (
                render_requirement(self.patterns[bad]) if bad < len(self.patterns) else "<observer>"
            )
            self.sink(self.session_id, rendering, at)
        return True

    def _log(self, kind: str, detail: str, ts: Optional[int], result: ProcessResult) -> None:
        if self.history is None:
            return
        self._seq += 1
        self.history.append(
            LogEntry(
                self._seq,
                kind,
                detail,
                ts,
                tuple(o.current for o in self.observers),
                result,
                self.verdict,
            )
        )


@dataclass
class RunResult:
    verdict: Verdict
    first_violation: Optional[int]
    log: list[LogEntry] = field(default_factory=list)


def run_virtual(session: MonitorSession, trace: list[Event]) -> RunResult:
    """Drive a session over a whole trace, synthesizing deadline expiries at
    their instants; deterministic for a given session state and trace."""
    start_seq = session._seq
    for ev in trace:
        session.submit_event(ev)
        session.run_until_idle()
    session.run_until_idle()
    log = (
        [e for e in session.history if e.seq > start_seq] if session.history is not None else []
    )
    return RunResult(session.verdict, session.first_violation, log)


def verify_trace(
    pattern: PatternInstance, trace: list[Event], record_history: bool = False
) -> RunResult:
    """Offline verification of one trace against one pattern."""
    session = MonitorSession.for_pattern(pattern, record_history=record_history)
    return run_virtual(session, trace)
