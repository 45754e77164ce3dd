"""Deterministic timed observer automata and their single-step semantics.

An observer has one clock, named ``c``.  Guards compare the clock valuation
(current time minus the last reset instant) against an integer millisecond
bound.  Labeled transitions fire on events of the matching type; unlabeled
transitions fire on the passage of time and therefore must carry a guard.
Time is integer milliseconds throughout: ``c <= t`` is inclusive, ``c > t``
strict, so a bound of t becomes enabled at valuation t + 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import NondeterminismError, TimeRegressionError

CLOCK_NAME = "c"

GUARD_LE = "<="
GUARD_GT = ">"


@dataclass(frozen=True)
class Event:
    """One monitored occurrence: an event type plus a millisecond timestamp."""

    event_type: str
    timestamp: int

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"negative timestamp: {self.timestamp}")


Trace = list  # list[Event]; timestamps non-decreasing


@dataclass(frozen=True)
class Guard:
    """Clock constraint ``c <= bound_ms`` or ``c > bound_ms``."""

    op: str
    bound_ms: int

    def __post_init__(self):
        if self.op not in (GUARD_LE, GUARD_GT):
            raise ValueError(f"bad guard op: {self.op!r}")
        if not isinstance(self.bound_ms, int) or self.bound_ms < 0:
            raise ValueError(f"guard bound must be a non-negative integer: {self.bound_ms!r}")

    def holds(self, valuation: int) -> bool:
        if self.op == GUARD_LE:
            return valuation <= self.bound_ms
        return valuation > self.bound_ms

    def enabling_instant(self, reset_at: int) -> int:
        """Earliest absolute timestamp at which the guard is true."""
        if self.op == GUARD_LE:
            return reset_at
        return reset_at + self.bound_ms + 1

    def __str__(self) -> str:
        return f"{CLOCK_NAME} {self.op} {self.bound_ms}"


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    label: Optional[str] = None
    guard: Optional[Guard] = None  # unlabeled transitions must carry one; validate() reports
    reset: bool = False

    def __str__(self) -> str:
        parts = [f"{self.source} -> {self.target}"]
        if self.label is not None:
            parts.append(f"on {self.label}")
        if self.guard is not None:
            parts.append(f"[{self.guard}]")
        if self.reset:
            parts.append(f"{{{CLOCK_NAME} := 0}}")
        return " ".join(parts)


@dataclass
class StepResult:
    taken: bool
    new_state: str
    entered_error: bool


@dataclass(frozen=True)
class ValidationIssue:
    kind: str  # nondeterminism | error-not-absorbing | unguarded-unlabeled | unknown-state | bad-initial
    state: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind}({self.state})" + (f": {self.detail}" if self.detail else "")


class Observer:
    """A deterministic timed automaton with one clock and an absorbing error state.

    The transition structure is fixed at construction; only the runtime
    fields (``current``, ``clock_reset_at``, ``last_seen_ts``) mutate.
    Adaptations produce new Observer instances rather than editing one in
    place, which keeps failed adaptations side-effect free.

    ``error`` may be None for observers that cannot reject (used by the
    throughput benchmark rig); catalog templates always set it.
    """

    def __init__(
        self,
        states: Iterable[str],
        initial: str,
        error: Optional[str],
        transitions: Iterable[Transition],
        current: Optional[str] = None,
        clock_reset_at: Optional[int] = None,
        last_seen_ts: Optional[int] = None,
    ):
        self.states: tuple[str, ...] = tuple(states)
        self.initial = initial
        self.error = error
        self.transitions: tuple[Transition, ...] = tuple(transitions)
        self.current = initial if current is None else current
        self.clock_reset_at = clock_reset_at
        self.last_seen_ts = last_seen_ts
        self._outgoing: dict[str, tuple[Transition, ...]] = {s: () for s in self.states}
        buckets: dict[str, list[Transition]] = {s: [] for s in self.states}
        for t in self.transitions:
            if t.source in buckets:
                buckets[t.source].append(t)
        for s, ts in buckets.items():
            self._outgoing[s] = tuple(ts)

    # -- structure -----------------------------------------------------

    def outgoing(self, state: str) -> tuple[Transition, ...]:
        return self._outgoing.get(state, ())

    @property
    def violated(self) -> bool:
        return self.error is not None and self.current == self.error

    def labels(self) -> set[str]:
        return {t.label for t in self.transitions if t.label is not None}

    def bounds(self) -> set[int]:
        return {t.guard.bound_ms for t in self.transitions if t.guard is not None}

    def copy(self) -> "Observer":
        return Observer(
            self.states,
            self.initial,
            self.error,
            self.transitions,
            current=self.current,
            clock_reset_at=self.clock_reset_at,
            last_seen_ts=self.last_seen_ts,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Observer):
            return NotImplemented
        return (
            self.states == other.states
            and self.initial == other.initial
            and self.error == other.error
            and self.transitions == other.transitions
            and self.current == other.current
            and self.clock_reset_at == other.clock_reset_at
        )

    def __repr__(self) -> str:
        return (
            f"Observer(states={len(self.states)}, transitions={len(self.transitions)}, "
            f"current={self.current!r})"
        )

    # -- semantics -----------------------------------------------------

    def _check_time(self, ts: int) -> None:
        if self.last_seen_ts is not None and ts < self.last_seen_ts:
            raise TimeRegressionError(f"timestamp {ts} precedes already-processed {self.last_seen_ts}")

    def _valuation(self, ts: int) -> Optional[int]:
        if self.clock_reset_at is None:
            return None
        return ts - self.clock_reset_at

    def step(self, ev: Event) -> StepResult:
        """Process one event.

        Only transitions labeled with the event's type are considered;
        unlabeled (time-triggered) transitions are the province of
        `advance_time`.  If no labeled transition is enabled the event is
        discarded and the state is unchanged.
        """
        self._check_time(ev.timestamp)
        self.last_seen_ts = ev.timestamp
        valuation = self._valuation(ev.timestamp)
        enabled = []
        for t in self.outgoing(self.current):
            if t.label != ev.event_type:
                continue
            if t.guard is not None:
                if valuation is None or not t.guard.holds(valuation):
                    continue
            enabled.append(t)
        if len(enabled) > 1:
            raise NondeterminismError(
                f"{len(enabled)} transitions enabled in {self.current} for {ev.event_type}"
            )
        if not enabled:
            return StepResult(False, self.current, False)
        return self._take(enabled[0], ev.timestamp)

    def advance_time(self, now: int) -> StepResult:
        """Let time progress to ``now``, taking an enabled unlabeled transition if any."""
        self._check_time(now)
        self.last_seen_ts = now
        valuation = self._valuation(now)
        if valuation is None:
            return StepResult(False, self.current, False)
        enabled = [
            t
            for t in self.outgoing(self.current)
            if t.label is None and t.guard is not None and t.guard.holds(valuation)
        ]
        if len(enabled) > 1:
            raise NondeterminismError(
                f"{len(enabled)} unlabeled transitions enabled in {self.current} at valuation {valuation}"
            )
        if not enabled:
            return StepResult(False, self.current, False)
        return self._take(enabled[0], now)

    def _take(self, t: Transition, ts: int) -> StepResult:
        self.current = t.target
        if t.reset:
            self.clock_reset_at = ts
        return StepResult(True, self.current, self.violated)

    def next_timer(self) -> Optional[int]:
        """Earliest absolute instant at which an unlabeled guard from the
        current state becomes true; None when the clock is unset or no such
        transition exists."""
        if self.clock_reset_at is None:
            return None
        instants = [
            t.guard.enabling_instant(self.clock_reset_at)
            for t in self.outgoing(self.current)
            if t.label is None and t.guard is not None
        ]
        return min(instants) if instants else None


# -- validation ---------------------------------------------------------


def validate(obs: Observer) -> list[ValidationIssue]:
    """Structural checks: determinism, absorbing error, guard form.

    Determinism is checked by enumerating, per state, every label (and the
    unlabeled case) at the guard-boundary valuations {0} | {t, t+1} for every
    bound t appearing in the observer.
    """
    issues: list[ValidationIssue] = []
    state_set = set(obs.states)
    if obs.initial not in state_set:
        issues.append(ValidationIssue("bad-initial", obs.initial, "initial not in states"))
    if obs.error is not None and obs.error not in state_set:
        issues.append(ValidationIssue("unknown-state", obs.error, "error not in states"))
    for t in obs.transitions:
        if t.source not in state_set or t.target not in state_set:
            issues.append(ValidationIssue("unknown-state", t.source, str(t)))
        if t.label is None and t.guard is None:
            issues.append(ValidationIssue("unguarded-unlabeled", t.source, str(t)))
    if obs.error is not None and obs.outgoing(obs.error):
        issues.append(ValidationIssue("error-not-absorbing", obs.error))

    valuations = sorted({0} | {v for b in obs.bounds() for v in (b, b + 1)})
    for state in obs.states:
        out = obs.outgoing(state)
        cases = [lbl for lbl in {t.label for t in out if t.label is not None}]
        cases.append(None)  # the time-triggered case
        for label in cases:
            group = [t for t in out if t.label == label]
            for v in valuations:
                enabled = [t for t in group if t.guard is None or t.guard.holds(v)]
                if len(enabled) > 1:
                    issues.append(
                        ValidationIssue(
                            "nondeterminism",
                            state,
                            f"label={label!r} valuation={v}: {len(enabled)} enabled",
                        )
                    )
                    break
    return issues


# -- isomorphism --------------------------------------------------------


def _signature(obs: Observer, state: str) -> tuple:
    out = sorted(
        (t.label or "", t.guard.op if t.guard else "", t.guard.bound_ms if t.guard else -1, t.reset)
        for t in obs.outgoing(state)
    )
    inc = sorted(
        (t.label or "", t.guard.op if t.guard else "", t.guard.bound_ms if t.guard else -1, t.reset)
        for t in obs.transitions
        if t.target == state
    )
    return (
        state == obs.initial,
        state == obs.error,
        tuple(out),
        tuple(inc),
    )


def isomorphic(a: Observer, b: Observer, match_current: bool = False) -> bool:
    """Label-, guard- and reset-preserving graph isomorphism.

    Maps initial to initial and error to error; runtime fields (current
    state, clock) are ignored unless ``match_current`` is set.
    """
    if len(a.states) != len(b.states) or len(a.transitions) != len(b.transitions):
        return False
    if (a.error is None) != (b.error is None):
        return False

    sig_a = {s: _signature(a, s) for s in a.states}
    sig_b = {s: _signature(b, s) for s in b.states}
    if sorted(sig_a.values()) != sorted(sig_b.values()):
        return False

    trans_b = {
        (t.source, t.target): [] for t in b.transitions
    }
    for t in b.transitions:
        trans_b[(t.source, t.target)].append((t.label, t.guard, t.reset))
    for key in trans_b:
        trans_b[key].sort(key=str)

    candidates: dict[str, list[str]] = {
        s: [u for u in b.states if sig_b[u] == sig_a[s]] for s in a.states
    }
    order = sorted(a.states, key=lambda s: len(candidates[s]))
    mapping: dict[str, str] = {}
    used: set[str] = set()

    def edges_match(mapping: dict[str, str]) -> bool:
        for t in a.transitions:
            if t.source in mapping and t.target in mapping:
                key = (mapping[t.source], mapping[t.target])
                want = (t.label, t.guard, t.reset)
                if key not in trans_b or want not in trans_b[key]:
                    return False
        return True

    def complete_match(mapping: dict[str, str]) -> bool:
        mapped = {}
        for t in a.transitions:
            key = (mapping[t.source], mapping[t.target])
            mapped.setdefault(key, []).append((t.label, t.guard, t.reset))
        for key in mapped:
            mapped[key].sort(key=str)
        return mapped == trans_b

    def assign(i: int) -> bool:
        if i == len(order):
            return complete_match(mapping)
        s = order[i]
        for u in candidates[s]:
            if u in used:
                continue
            if s == a.initial and u != b.initial:
                continue
            if a.error is not None and (s == a.error) != (u == b.error):
                continue
            if match_current and (s == a.current) != (u == b.current):
                continue
            mapping[s] = u
            used.add(u)
            if edges_match(mapping) and assign(i + 1):
                return True
            del mapping[s]
            used.discard(u)
        return False

    return assign(0)


# -- serialization ------------------------------------------------------


def observer_to_dict(obs: Observer, snapshot: bool = False) -> dict:
    doc = {
        "states": list(obs.states),
        "initial": obs.initial,
        "error": obs.error,
        "clock": CLOCK_NAME,
        "transitions": [
            {
                "source": t.source,
                "target": t.target,
                **({"label": t.label} if t.label is not None else {}),
                **(
                    {"guard": {"op": t.guard.op, "bound_ms": t.guard.bound_ms}}
                    if t.guard is not None
                    else {}
                ),
                "reset": t.reset,
            }
            for t in obs.transitions
        ],
    }
    if snapshot:
        doc["current"] = obs.current
        doc["clock_reset_at"] = obs.clock_reset_at
        doc["violated"] = obs.violated
        doc["last_seen_ts"] = obs.last_seen_ts
    return doc


def observer_from_dict(doc: dict) -> Observer:
    transitions = [
        Transition(
            source=t["source"],
            target=t["target"],
            label=t.get("label"),
            guard=Guard(t["guard"]["op"], t["guard"]["bound_ms"]) if t.get("guard") else None,
            reset=bool(t.get("reset", False)),
        )
        for t in doc["transitions"]
    ]
    return Observer(
        doc["states"],
        doc["initial"],
        doc.get("error"),
        transitions,
        current=doc.get("current"),
        clock_reset_at=doc.get("clock_reset_at"),
        last_seen_ts=doc.get("last_seen_ts"),
    )


def observer_to_json(obs: Observer, snapshot: bool = False) -> str:
    return json.dumps(observer_to_dict(obs, snapshot=snapshot), indent=2)


def observer_from_json(text: str) -> Observer:
    return observer_from_dict(json.loads(text))
