"""Labeled trace generation and the line-oriented trace file format.

Traces are planned per pattern with randomized structure (episode counts,
spacing, violation cause) and then self-checked against the reference
evaluator before being returned, so the requested label is guaranteed by
construction rather than by the planner's bookkeeping.  Violating traces
rotate their cause across seeds: a response that never comes, a response
outside its window, or a scope that closes while a response is still owed.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Iterable

from . import oracle
from .errors import GenerationFailureError, TraceParseError
from .observer import Event
from .psp import Pattern, PatternInstance, ScopeKind, to_mtl

SATISFYING = "satisfying"
VIOLATING = "violating"

_RETRIES = 60


def generate(
    p: PatternInstance, label: str, seed: int, approx_length: int = 60
) -> list[Event]:
    """A trace of roughly `approx_length` events whose oracle verdict matches
    `label`; deterministic per (pattern, label, seed, length)."""
    if label not in (SATISFYING, VIOLATING):
        raise ValueError(f"label must be {SATISFYING!r} or {VIOLATING!r}: {label!r}")
    if approx_length < 6:
        raise GenerationFailureError(f"approx_length {approx_length} too small", seed)
    formula = to_mtl(p)
    for attempt in range(_RETRIES):
        rng = random.Random(seed * 1009 + attempt)
        trace = _plan(p, rng, label == VIOLATING, approx_length)
        verdict = oracle.evaluate(formula, trace)
        if verdict.violated == (label == VIOLATING):
            return trace
    raise GenerationFailureError(
        f"could not produce a {label} trace for {p.pattern.value}", seed
    )


# -- planning ---------------------------------------------------------------


class _Stream:
    def __init__(self, rng: random.Random, gap_hi: int):
        self.rng = rng
        self.gap_hi = max(2, gap_hi)
        self.ts = rng.randint(0, 50)
        self.events: list[Event] = []

    def emit(self, event_type: str, gap: int | None = None) -> Event:
        self.ts += self.rng.randint(1, self.gap_hi) if gap is None else gap
        ev = Event(event_type, self.ts)
        self.events.append(ev)
        return ev

    def __len__(self) -> int:
        return len(self.events)


def _noise_types(p: PatternInstance) -> list[str]:
    used = p.events()
    return [n for n in ("hum", "tick", "blip") if n not in used] or ["zz_noise"]


def _max_bound(p: PatternInstance) -> int:
    if p.recurrence_period is not None:
        return p.recurrence_period
    if p.responses:
        return max(t.deadline_ms for t in p.responses)
    return 300


def _plan(p: PatternInstance, rng: random.Random, violate: bool, length: int) -> list[Event]:
    n = max(1, len(p.responses))
    gap_hi = max(2, (2 * _max_bound(p)) // n)
    s = _Stream(rng, gap_hi)
    noise = _noise_types(p)

    if p.pattern is Pattern.ABSENCE:
        _plan_absence(p, s, noise, violate, length)
    elif p.pattern is Pattern.RECURRENCE:
        _plan_recurrence(p, s, noise, violate, length)
    else:
        _plan_chain(p, s, noise, violate, length)
    return s.events


def _plan_absence(p, s: _Stream, noise, violate: bool, length: int) -> None:
    rng = s.rng
    kind = p.scope.kind
    inject_at = rng.randint(length // 4, max(length // 4 + 1, length - 4)) if violate else -1

    if kind is ScopeKind.GLOBALLY:
        while len(s) < length:
            if len(s) == inject_at:
                s.emit(p.subject)
            else:
                s.emit(rng.choice(noise))
        return

    if kind is ScopeKind.BEFORE:
        head = rng.randint(length // 3, 2 * length // 3)
        for i in range(head):
            if violate and i == head // 2:
                s.emit(p.subject)
            else:
                s.emit(rng.choice(noise))
        s.emit(p.scope.r)
        while len(s) < length:
            # after the closer the subject is unconstrained
            s.emit(p.subject if rng.random() < 0.2 else rng.choice(noise))
        return

    if kind is ScopeKind.AFTER:
        head = rng.randint(2, length // 3)
        for _ in range(head):
            # before the opener the subject is unconstrained
            s.emit(p.subject if rng.random() < 0.2 else rng.choice(noise))
        s.emit(p.scope.q)
        while len(s) < length:
            if violate and len(s) >= inject_at:
                s.emit(p.subject)
                violate = False
            else:
                s.emit(rng.choice(noise))
        if violate:
            s.emit(p.subject)
        return

    # between
    injected = not violate
    while len(s) < length or not injected:
        for _ in range(rng.randint(0, 3)):  # closed phase: subject is allowed
            s.emit(p.subject if rng.random() < 0.15 else rng.choice(noise))
        s.emit(p.scope.q)
        for _ in range(rng.randint(1, 5)):
            if not injected and len(s) >= inject_at:
                s.emit(p.subject)
                injected = True
            else:
                s.emit(rng.choice(noise))
        s.emit(p.scope.r)


def _plan_recurrence(p, s: _Stream, noise, violate: bool, length: int) -> None:
    rng = s.rng
    period = p.recurrence_period
    between = p.scope.kind is ScopeKind.BETWEEN

    def pulse_run(count: int, break_at: int) -> bool:
        """Emit `count` subject pulses, breaking the cadence at index
        `break_at` (-1 = never). Returns True if the break was emitted."""
        broke = False
        last = s.ts
        for i in range(count):
            if i == break_at:
                gap = period + rng.randint(2, period + 2)
                broke = True
            else:
                gap = rng.randint(1, max(1, period)) if period >= 1 else 1
            target = last + gap
            while rng.random() < 0.4 and s.ts < target:
                s.emit(rng.choice(noise), gap=rng.randint(0, target - s.ts))
            s.emit(p.subject, gap=max(0, target - s.ts))
            last = target
        return broke

    if not between:
        for _ in range(rng.randint(0, 3)):
            s.emit(rng.choice(noise))
        pulses = max(4, length - len(s) - 2)
        break_at = rng.randint(1, pulses - 1) if violate else -1
        pulse_run(pulses, break_at)
        if violate:
            s.emit(rng.choice(noise))  # attest past the deadline if needed
        return

    # between scope: the opener arms the clock, the closer releases it
    injected = not violate
    while len(s) < length or not injected:
        s.emit(p.scope.q, gap=rng.randint(1, max(1, period)))
        pulses = rng.randint(1, 4)
        do_break = not injected and rng.random() < 0.6
        if do_break:
            injected = pulse_run(pulses, rng.randint(0, pulses - 1))
        else:
            pulse_run(pulses, -1)
        gap_to_close = rng.randint(1, max(1, period)) if period >= 1 else 1
        s.emit(p.scope.r, gap=gap_to_close)
        for _ in range(rng.randint(0, 2)):
            s.emit(rng.choice(noise))


def _plan_chain(p, s: _Stream, noise, violate: bool, length: int) -> None:
    """Response and Response Chain, Globally or Between scope."""
    rng = s.rng
    terms = p.responses
    n = len(terms)
    between = p.scope.kind is ScopeKind.BETWEEN
    causes = ["timeout", "late"] + (["scope-end"] if between else [])
    cause = rng.choice(causes) if violate else None
    fail_stage = rng.randint(1, n) if violate else -1
    injected = not violate

    def good_cycle(with_trigger: bool) -> None:
        if between:
            s.emit(p.scope.q)
        if with_trigger:
            s.emit(p.trigger)
            for term in terms:
                if rng.random() < 0.3:
                    # a stray out-of-order or repeated response must be ignored
                    s.emit(rng.choice([t.event for t in terms]), gap=0)
                gap = rng.randint(1, max(1, term.deadline_ms)) if term.deadline_ms >= 1 else 0
                s.emit(term.event, gap=min(gap, term.deadline_ms))
        for _ in range(rng.randint(0, 2)):
            s.emit(rng.choice(noise))
        if between:
            s.emit(p.scope.r)

    def bad_cycle() -> None:
        if between:
            s.emit(p.scope.q)
        s.emit(p.trigger)
        for term in terms[: fail_stage - 1]:
            gap = rng.randint(1, max(1, term.deadline_ms)) if term.deadline_ms >= 1 else 0
            s.emit(term.event, gap=min(gap, term.deadline_ms))
        term = terms[fail_stage - 1]
        if cause == "late":
            s.emit(term.event, gap=term.deadline_ms + rng.randint(2, term.deadline_ms + 2))
        elif cause == "scope-end":
            s.emit(p.scope.r, gap=rng.randint(0, max(0, term.deadline_ms)))
        else:  # timeout: nothing arrives until well past the window
            s.emit(rng.choice(noise), gap=term.deadline_ms + rng.randint(2, 60))

    while len(s) < length or not injected:
        if not injected and (len(s) >= length // 2 or rng.random() < 0.3):
            bad_cycle()
            injected = True
        else:
            good_cycle(with_trigger=rng.random() < 0.8)
    for _ in range(rng.randint(0, 2)):
        s.emit(rng.choice(noise))


# -- trace files --------------------------------------------------------------


def write_trace(trace: Iterable[Event], path: str | Path) -> None:
    """One `<timestamp_ms> <event_type>` pair per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for ev in trace:
            fh.write(f"{ev.timestamp} {ev.event_type}\n")


def read_trace(path: str | Path) -> list[Event]:
    """Inverse of write_trace; `#` starts a comment, blank lines are skipped,
    and decreasing timestamps are rejected."""
    trace: list[Event] = []
    last = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise TraceParseError(f"expected '<timestamp_ms> <event_type>': {text!r}", line_no)
            try:
                ts = int(parts[0])
            except ValueError:
                raise TraceParseError(f"bad timestamp {parts[0]!r}", line_no) from None
            if ts < 0:
                raise TraceParseError(f"negative timestamp {ts}", line_no)
            if last is not None and ts < last:
                raise TraceParseError(f"timestamp {ts} decreases below {last}", line_no)
            trace.append(Event(parts[1], ts))
            last = ts
    return trace
