"""Reference finite-trace evaluator used as ground truth in tests.

Evaluation is a direct scan over trace positions with explicit window
arithmetic, per pattern; it shares no code with the observer machinery.
Verdicts follow the runtime conventions: integer-millisecond time,
``within t`` inclusive of the instant t, deadline expiry detected at
reset + t + 1, events at the expiry instant processed before the expiry
itself, and scope obligations enforced eagerly (a breach inside an open
Between/Before region counts even if the closing event never arrives).

The ``classical_between`` flag exposes the textbook reading instead, where
a breach inside a region only becomes a violation once the closing event
arrives (and is inconclusive if it never does).  It exists for
documentation tests only.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from . import mtl
from .errors import UnsupportedFormulaError
from .observer import Event
from .psp import Pattern, PatternInstance, ResponseTerm, Scope, ScopeKind


class VerdictValue(Enum):
    SATISFIED_SO_FAR = "satisfied-so-far"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class OracleVerdict:
    value: VerdictValue
    at: Optional[int] = None  # earliest instant whose prefix is bad

    @property
    def violated(self) -> bool:
        return self.value is VerdictValue.VIOLATED


SAT = OracleVerdict(VerdictValue.SATISFIED_SO_FAR)
INCONCLUSIVE = OracleVerdict(VerdictValue.INCONCLUSIVE)


def violated(at: int) -> OracleVerdict:
    return OracleVerdict(VerdictValue.VIOLATED, at)


def evaluate(f: mtl.Formula, trace: list[Event], classical_between: bool = False) -> OracleVerdict:
    """Evaluate a formula produced by the catalog templates over a finite trace."""
    return evaluate_pattern(pattern_of(f), trace, classical_between=classical_between)


def evaluate_pattern(
    p: PatternInstance, trace: list[Event], classical_between: bool = False
) -> OracleVerdict:
    if p.pattern is Pattern.ABSENCE:
        return _absence(p, trace, classical_between)
    if p.pattern is Pattern.RECURRENCE:
        if p.scope.kind is ScopeKind.GLOBALLY:
            return _recurrence_globally(p, trace)
        return _recurrence_between(p, trace, classical_between)
    if p.scope.kind is ScopeKind.GLOBALLY:
        return _response_globally(p, trace)
    return _chain_between(p, trace, classical_between)


# -- formula recognition --------------------------------------------------


def pattern_of(f: mtl.Formula) -> PatternInstance:
    """Destructure a template-shaped formula back into its pattern instance.

    Raises UnsupportedFormulaError for anything outside the fragment the
    catalog emits.
    """
    recognizers = (
        _match_absence_globally,
        _match_absence_before,
        _match_absence_after,
        _match_absence_between,
        _match_recurrence_globally,
        _match_response_globally,
        _match_between_body,
    )
    for rec in recognizers:
        try:
            p = rec(f)
        except ValueError:  # shape matched but the instance is ill-formed
            continue
        if p is not None:
            return p
    raise UnsupportedFormulaError(f"formula outside the template fragment: {mtl.render(f)}")


def _atom(f) -> Optional[str]:
    return f.name if isinstance(f, mtl.Atom) else None


def _neg_atom(f) -> Optional[str]:
    if isinstance(f, mtl.Not):
        return _atom(f.child)
    return None


def _unbounded_eventually_atom(f) -> Optional[str]:
    if isinstance(f, mtl.Eventually) and f.bound is None:
        return _atom(f.child)
    return None


def _window_eventually(f) -> Optional[tuple[str, int]]:
    if isinstance(f, mtl.Eventually) and f.bound is not None and f.bound.lo == 0:
        name = _atom(f.child)
        if name is not None:
            return (name, f.bound.hi)
    return None


def _match_absence_globally(f) -> Optional[PatternInstance]:
    if isinstance(f, mtl.Globally):
        a = _neg_atom(f.child)
        if a is not None:
            return PatternInstance(Pattern.ABSENCE, Scope(ScopeKind.GLOBALLY), subject=a)
    return None


def _match_absence_before(f) -> Optional[PatternInstance]:
    if not isinstance(f, mtl.Implies):
        return None
    r = _unbounded_eventually_atom(f.lhs)
    if r is None or not isinstance(f.rhs, mtl.Until) or f.rhs.bound is not None:
        return None
    a = _neg_atom(f.rhs.left)
    if a is None or _atom(f.rhs.right) != r:
        return None
    return PatternInstance(Pattern.ABSENCE, Scope(ScopeKind.BEFORE, r=r), subject=a)


def _match_absence_after(f) -> Optional[PatternInstance]:
    if not (isinstance(f, mtl.Globally) and isinstance(f.child, mtl.Implies)):
        return None
    q = _atom(f.child.lhs)
    rhs = f.child.rhs
    if q is None or not isinstance(rhs, mtl.Globally):
        return None
    a = _neg_atom(rhs.child)
    if a is None:
        return None
    return PatternInstance(Pattern.ABSENCE, Scope(ScopeKind.AFTER, q=q), subject=a)


def _between_scope(f) -> Optional[tuple[str, str, mtl.Formula]]:
    """Matches □((q ∧ ◊r) → X U r); returns (q, r, X)."""
    if not (isinstance(f, mtl.Globally) and isinstance(f.child, mtl.Implies)):
        return None
    lhs, rhs = f.child.lhs, f.child.rhs
    if not (isinstance(lhs, mtl.And) and len(lhs.children) == 2):
        return None
    q = _atom(lhs.children[0])
    r = _unbounded_eventually_atom(lhs.children[1])
    if q is None or r is None:
        return None
    if not (isinstance(rhs, mtl.Until) and rhs.bound is None and _atom(rhs.right) == r):
        return None
    return (q, r, rhs.left)


def _match_absence_between(f) -> Optional[PatternInstance]:
    m = _between_scope(f)
    if m is None:
        return None
    q, r, body = m
    a = _neg_atom(body)
    if a is None:
        return None
    return PatternInstance(Pattern.ABSENCE, Scope(ScopeKind.BETWEEN, q=q, r=r), subject=a)


def _match_recurrence_globally(f) -> Optional[PatternInstance]:
    if isinstance(f, mtl.Globally):
        w = _window_eventually(f.child)
        if w is not None:
            return PatternInstance(
                Pattern.RECURRENCE, Scope(ScopeKind.GLOBALLY), subject=w[0], recurrence_period=w[1]
            )
    return None


def _match_response_globally(f) -> Optional[PatternInstance]:
    if not (isinstance(f, mtl.Globally) and isinstance(f.child, mtl.Implies)):
        return None
    p = _atom(f.child.lhs)
    w = _window_eventually(f.child.rhs)
    if p is None or w is None:
        return None
    return PatternInstance(
        Pattern.RESPONSE,
        Scope(ScopeKind.GLOBALLY),
        trigger=p,
        responses=(ResponseTerm(*w),),
    )


def _match_between_body(f) -> Optional[PatternInstance]:
    m = _between_scope(f)
    if m is None:
        return None
    q, r, body = m
    scope = Scope(ScopeKind.BETWEEN, q=q, r=r)
    w = _window_eventually(body)
    if w is not None:  # recurrence between
        return PatternInstance(Pattern.RECURRENCE, scope, subject=w[0], recurrence_period=w[1])
    if not isinstance(body, mtl.Implies):
        return None
    trigger = _atom(body.lhs)
    chain = body.rhs
    if trigger is None or not isinstance(chain, mtl.Until) or chain.bound is None:
        return None
    if chain.bound.lo != 0 or _neg_atom(chain.left) != r:
        return None
    responses = _chain_terms(chain.right, chain.bound.hi, r)
    if responses is None:
        return None
    pattern = Pattern.RESPONSE if len(responses) == 1 else Pattern.RESPONSE_CHAIN
    return PatternInstance(pattern, scope, trigger=trigger, responses=tuple(responses))


def _chain_terms(body, first_bound: int, r: str) -> Optional[list[ResponseTerm]]:
    first = _atom(body)
    if first is not None:
        return [ResponseTerm(first, first_bound)]
    if not isinstance(body, mtl.And) or len(body.children) < 3 or len(body.children) % 2 == 0:
        return None
    first = _atom(body.children[0])
    if first is None:
        return None
    terms = [ResponseTerm(first, first_bound)]
    rest = body.children[1:]
    for neg, window in zip(rest[0::2], rest[1::2]):
        if _neg_atom(neg) != r:
            return None
        w = _window_eventually(window)
        if w is None:
            return None
        terms.append(ResponseTerm(*w))
    return terms


# -- per-pattern scans ------------------------------------------------------


def _absence(p: PatternInstance, trace: list[Event], classical: bool) -> OracleVerdict:
    a = p.subject
    kind = p.scope.kind
    if kind is ScopeKind.GLOBALLY:
        for e in trace:
            if e.event_type == a:
                return violated(e.timestamp)
        return SAT
    if kind is ScopeKind.AFTER:
        seen_q = False
        for e in trace:
            if seen_q and e.event_type == a:
                return violated(e.timestamp)
            if e.event_type == p.scope.q:
                seen_q = True
        return SAT
    if kind is ScopeKind.BEFORE:
        breach: Optional[int] = None
        for e in trace:
            if e.event_type == p.scope.r:
                if classical:
                    return violated(e.timestamp) if breach is not None else SAT
                return SAT
            if e.event_type == a:
                if not classical:
                    return violated(e.timestamp)
                breach = breach if breach is not None else e.timestamp
        return INCONCLUSIVE if (classical and breach is not None) else SAT
    # between
    is_open = False
    breach = None
    for e in trace:
        if not is_open:
            if e.event_type == p.scope.q:
                is_open = True
        else:
            if e.event_type == p.scope.r:
                if classical and breach is not None:
                    return violated(e.timestamp)
                is_open = False
                breach = None
            elif e.event_type == a:
                if not classical:
                    return violated(e.timestamp)
                breach = breach if breach is not None else e.timestamp
    return INCONCLUSIVE if (classical and breach is not None) else SAT


def _recurrence_globally(p: PatternInstance, trace: list[Event]) -> OracleVerdict:
    period = p.recurrence_period
    last: Optional[int] = None
    for e in trace:
        if last is not None and last + period + 1 < e.timestamp:
            return violated(last + period + 1)
        if e.event_type == p.subject:
            last = e.timestamp
        elif last is not None and e.timestamp >= last + period + 1:
            return violated(last + period + 1)
    return SAT


def _recurrence_between(p: PatternInstance, trace: list[Event], classical: bool) -> OracleVerdict:
    period = p.recurrence_period
    is_open = False
    anchor: Optional[int] = None
    breach: Optional[int] = None
    for e in trace:
        if is_open and breach is None and anchor + period + 1 < e.timestamp:
            if not classical:
                return violated(anchor + period + 1)
            breach = anchor + period + 1
        if not is_open:
            if e.event_type == p.scope.q:
                is_open = True
                anchor = e.timestamp
        else:
            if e.event_type == p.scope.r:
                if classical and breach is not None:
                    return violated(e.timestamp)
                is_open = False
                anchor = None
                breach = None
            elif e.event_type == p.subject:
                anchor = e.timestamp
        if is_open and breach is None and e.timestamp >= anchor + period + 1:
            if not classical:
                return violated(anchor + period + 1)
            breach = anchor + period + 1
    return INCONCLUSIVE if (classical and breach is not None) else SAT


def _response_globally(p: PatternInstance, trace: list[Event]) -> OracleVerdict:
    trigger = p.trigger
    response, deadline = p.responses[0]
    pending: Optional[int] = None
    for e in trace:
        if pending is not None and pending + deadline + 1 < e.timestamp:
            return violated(pending + deadline + 1)
        if pending is None:
            if e.event_type == trigger:
                pending = e.timestamp
        else:
            if e.event_type == response and e.timestamp - pending <= deadline:
                pending = None
        if pending is not None and e.timestamp >= pending + deadline + 1:
            return violated(pending + deadline + 1)
    return SAT


def _chain_between(p: PatternInstance, trace: list[Event], classical: bool) -> OracleVerdict:
    """Response and Response Chain with Between scope (n >= 1)."""
    q, r = p.scope.q, p.scope.r
    terms = p.responses
    n = len(terms)
    region = "closed"  # closed | open | waiting
    index = 0  # 1-based response position when waiting
    anchor: Optional[int] = None
    breach: Optional[int] = None

    def expiry() -> int:
        return anchor + terms[index - 1].deadline_ms + 1

    for e in trace:
        if region == "waiting" and breach is None and expiry() < e.timestamp:
            if not classical:
                return violated(expiry())
            breach = expiry()
            region = "open"
        if breach is not None:
            # classical mode: breached region is settled by the next closer
            if e.event_type == r:
                return violated(e.timestamp)
            continue
        if region == "closed":
            if e.event_type == q:
                region = "open"
        elif region == "open":
            if e.event_type == r:
                region = "closed"
            elif e.event_type == p.trigger:
                region = "waiting"
                index = 1
                anchor = e.timestamp
        else:  # waiting
            if e.event_type == r:
                return violated(e.timestamp)
            if (
                e.event_type == terms[index - 1].event
                and e.timestamp - anchor <= terms[index - 1].deadline_ms
            ):
                if index == n:
                    region = "open"
                    anchor = None
                else:
                    index += 1
                    anchor = e.timestamp
        if region == "waiting" and breach is None and e.timestamp >= expiry():
            if not classical:
                return violated(expiry())
            breach = expiry()
            region = "open"
    return INCONCLUSIVE if (classical and breach is not None) else SAT
