"""Pattern catalog: structured-English requirements, their MTL templates,
and the observer templates that operationalize them.

Grammar (keywords case-insensitive, event names verbatim, DUR = integer
with optional ``s``/``ms`` unit, plain integers are milliseconds)::

    req        := scope "," body
    scope      := "Globally" | "Before" ID | "After" ID | "Between" ID "and" ID
    body       := absence | recurrence | response
    absence    := "it is never the case that" ID "holds"
    recurrence := "it is always the case that" ID "holds at least every" DUR
    response   := "if" ID "then in response" ID "eventually within" DUR
                  {"followed by" ID "within" DUR}

A response clause with one response is the Response pattern; two or more
make a Response Chain.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Optional

from . import mtl
from .errors import (
    RequirementSyntaxError,
    TemplateValidationError,
    UnknownPatternError,
    UnsupportedCombinationError,
)
from .observer import GUARD_GT, GUARD_LE, Guard, Observer, Transition, validate


class Pattern(Enum):
    ABSENCE = "absence"
    RECURRENCE = "recurrence"
    RESPONSE = "response"
    RESPONSE_CHAIN = "response_chain"


class ScopeKind(Enum):
    GLOBALLY = "globally"
    BEFORE = "before"
    AFTER = "after"
    BETWEEN = "between"


@dataclass(frozen=True)
class Scope:
    kind: ScopeKind
    q: Optional[str] = None  # opening event (After, Between)
    r: Optional[str] = None  # closing event (Before, Between)

    def __post_init__(self):
        need_q = self.kind in (ScopeKind.AFTER, ScopeKind.BETWEEN)
        need_r = self.kind in (ScopeKind.BEFORE, ScopeKind.BETWEEN)
        if need_q != (self.q is not None) or need_r != (self.r is not None):
            raise ValueError(f"scope {self.kind.value} has wrong anchors: q={self.q} r={self.r}")

    def events(self) -> set[str]:
        return {e for e in (self.q, self.r) if e is not None}

    def render(self) -> str:
        if self.kind is ScopeKind.GLOBALLY:
            return "Globally"
        if self.kind is ScopeKind.BEFORE:
            return f"Before {self.r}"
        if self.kind is ScopeKind.AFTER:
            return f"After {self.q}"
        return f"Between {self.q} and {self.r}"


class ResponseTerm(NamedTuple):
    event: str
    deadline_ms: int


@dataclass(frozen=True)
class PatternInstance:
    """A parsed requirement: pattern kind, scope, events, and time bounds."""

    pattern: Pattern
    scope: Scope
    trigger: Optional[str] = None
    subject: Optional[str] = None
    responses: tuple[ResponseTerm, ...] = ()
    recurrence_period: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "responses", tuple(ResponseTerm(*r) for r in self.responses))
        p = self.pattern
        if p in (Pattern.ABSENCE, Pattern.RECURRENCE):
            if not self.subject or self.trigger or self.responses:
                raise ValueError(f"{p.value} needs a subject and nothing else")
            if p is Pattern.RECURRENCE and self.recurrence_period is None:
                raise ValueError("recurrence needs a period")
            if p is Pattern.ABSENCE and self.recurrence_period is not None:
                raise ValueError("absence takes no period")
        else:
            if not self.trigger or self.subject or self.recurrence_period is not None:
                raise ValueError(f"{p.value} needs a trigger and responses only")
            if p is Pattern.RESPONSE and len(self.responses) != 1:
                raise ValueError("response has exactly one response")
            if p is Pattern.RESPONSE_CHAIN and len(self.responses) < 2:
                raise ValueError("response chain needs at least two responses")
        for term in self.responses:
            if not isinstance(term.deadline_ms, int) or term.deadline_ms < 0:
                raise ValueError(f"bad deadline: {term.deadline_ms!r}")
        if self.recurrence_period is not None and (
            not isinstance(self.recurrence_period, int) or self.recurrence_period < 0
        ):
            raise ValueError(f"bad period: {self.recurrence_period!r}")
        names = self.event_list()
        if len(names) != len(set(names)):
            raise ValueError(f"event names must be pairwise distinct: {names}")

    def event_list(self) -> list[str]:
        names = []
        if self.scope.q:
            names.append(self.scope.q)
        if self.scope.r:
            names.append(self.scope.r)
        if self.trigger:
            names.append(self.trigger)
        if self.subject:
            names.append(self.subject)
        names.extend(term.event for term in self.responses)
        return names

    def events(self) -> set[str]:
        return set(self.event_list())


# The combinations the catalog provides templates for.
SUPPORTED_MATRIX: frozenset[tuple[Pattern, ScopeKind]] = frozenset(
    {
        (Pattern.ABSENCE, ScopeKind.GLOBALLY),
        (Pattern.ABSENCE, ScopeKind.BEFORE),
        (Pattern.ABSENCE, ScopeKind.AFTER),
        (Pattern.ABSENCE, ScopeKind.BETWEEN),
        (Pattern.RECURRENCE, ScopeKind.GLOBALLY),
        (Pattern.RECURRENCE, ScopeKind.BETWEEN),
        (Pattern.RESPONSE, ScopeKind.GLOBALLY),
        (Pattern.RESPONSE, ScopeKind.BETWEEN),
        (Pattern.RESPONSE_CHAIN, ScopeKind.BETWEEN),
    }
)


def is_supported(p: PatternInstance) -> bool:
    return (p.pattern, p.scope.kind) in SUPPORTED_MATRIX


def _require_supported(p: PatternInstance) -> None:
    if not is_supported(p):
        raise UnsupportedCombinationError(
            f"no template for {p.pattern.value} with scope {p.scope.kind.value}"
        )


# -- grammar ------------------------------------------------------------

_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_DUR_RE = re.compile(r"(\d+)(s|ms)?\Z")

KEYWORDS = frozenset(
    "globally before after between and it is never always the case that holds "
    "at least every if then in response eventually within followed by".split()
)


class _Token(NamedTuple):
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    for m in re.finditer(r"[^\s,]+|,", text):
        tokens.append(_Token(m.group(0), m.start()))
    return tokens


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _fail(self, expected: set[str]) -> RequirementSyntaxError:
        tok = self.peek()
        if tok is None:
            return RequirementSyntaxError(
                f"unexpected end of input, expected {sorted(expected)}", len(self.text), expected
            )
        return RequirementSyntaxError(
            f"unexpected {tok.text!r}, expected {sorted(expected)}", tok.pos, expected
        )

    def keyword(self, *words: str) -> str:
        tok = self.peek()
        if tok is None or tok.text.lower() not in words:
            raise self._fail(set(words))
        self.i += 1
        return tok.text.lower()

    def phrase(self, words: str) -> None:
        for w in words.split():
            self.keyword(w)

    def ident(self) -> str:
        tok = self.peek()
        if tok is None or not _ID_RE.match(tok.text) or tok.text.lower() in KEYWORDS:
            raise self._fail({"<event name>"})
        self.i += 1
        return tok.text

    def duration(self) -> int:
        tok = self.peek()
        m = _DUR_RE.match(tok.text) if tok is not None else None
        if m is None:
            raise self._fail({"<duration>"})
        self.i += 1
        value = int(m.group(1))
        return value * 1000 if m.group(2) == "s" else value

    def comma(self) -> None:
        tok = self.peek()
        if tok is None or tok.text != ",":
            raise self._fail({","})
        self.i += 1

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    def lookahead_lower(self, offset: int = 0) -> Optional[str]:
        j = self.i + offset
        return self.tokens[j].text.lower() if j < len(self.tokens) else None


def parse_requirement(text: str) -> PatternInstance:
    """Parse structured English into a PatternInstance.

    Raises RequirementSyntaxError for text outside the grammar and
    UnknownPatternError when the body clause matches no supported pattern.
    """
    cur = _Cursor(text)
    scope = _parse_scope(cur)
    cur.comma()
    instance = _parse_body(cur, scope)
    if not cur.at_end():
        tok = cur.peek()
        raise RequirementSyntaxError(f"trailing input {tok.text!r}", tok.pos, {"<end>"})
    return instance


def _parse_scope(cur: _Cursor) -> Scope:
    word = cur.keyword("globally", "before", "after", "between")
    if word == "globally":
        return Scope(ScopeKind.GLOBALLY)
    if word == "before":
        return Scope(ScopeKind.BEFORE, r=cur.ident())
    if word == "after":
        return Scope(ScopeKind.AFTER, q=cur.ident())
    q = cur.ident()
    cur.keyword("and")
    return Scope(ScopeKind.BETWEEN, q=q, r=cur.ident())


def _parse_body(cur: _Cursor, scope: Scope) -> PatternInstance:
    head = cur.lookahead_lower()
    if head == "if":
        return _parse_response(cur, scope)
    if head == "it":
        cur.phrase("it is")
        mode = cur.lookahead_lower()
        if mode == "never":
            cur.phrase("never the case that")
            subject = cur.ident()
            cur.keyword("holds")
            return PatternInstance(Pattern.ABSENCE, scope, subject=subject)
        if mode == "always":
            cur.phrase("always the case that")
            subject = cur.ident()
            cur.phrase("holds at least every")
            period = cur.duration()
            return PatternInstance(
                Pattern.RECURRENCE, scope, subject=subject, recurrence_period=period
            )
        raise UnknownPatternError(f"no pattern starts with 'it is {mode}'")
    raise UnknownPatternError(f"no pattern clause starts with {head!r}")


def _parse_response(cur: _Cursor, scope: Scope) -> PatternInstance:
    cur.keyword("if")
    trigger = cur.ident()
    cur.phrase("then in response")
    first = cur.ident()
    cur.phrase("eventually within")
    responses = [ResponseTerm(first, cur.duration())]
    while cur.lookahead_lower() == "followed":
        cur.phrase("followed by")
        ev = cur.ident()
        cur.keyword("within")
        responses.append(ResponseTerm(ev, cur.duration()))
    pattern = Pattern.RESPONSE if len(responses) == 1 else Pattern.RESPONSE_CHAIN
    return PatternInstance(pattern, scope, trigger=trigger, responses=tuple(responses))


def render_requirement(p: PatternInstance) -> str:
    """Canonical structured-English rendering; reparses to an equal instance."""
    scope = p.scope.render()
    if p.pattern is Pattern.ABSENCE:
        return f"{scope}, it is never the case that {p.subject} holds"
    if p.pattern is Pattern.RECURRENCE:
        return (
            f"{scope}, it is always the case that {p.subject} holds "
            f"at least every {p.recurrence_period}"
        )
    first = p.responses[0]
    parts = [
        f"{scope}, if {p.trigger} then in response {first.event} "
        f"eventually within {first.deadline_ms}"
    ]
    for term in p.responses[1:]:
        parts.append(f"followed by {term.event} within {term.deadline_ms}")
    return " ".join(parts)


# -- MTL templates -------------------------------------------------------


def to_mtl(p: PatternInstance) -> mtl.Formula:
    """Substitute the instance's events into the (pattern, scope) MTL template."""
    _require_supported(p)
    kind = (p.pattern, p.scope.kind)
    q = mtl.Atom(p.scope.q) if p.scope.q else None
    r = mtl.Atom(p.scope.r) if p.scope.r else None

    if p.pattern is Pattern.ABSENCE:
        a = mtl.Atom(p.subject)
        if kind == (Pattern.ABSENCE, ScopeKind.GLOBALLY):
            return mtl.Globally(mtl.Not(a))
        if kind == (Pattern.ABSENCE, ScopeKind.BEFORE):
            return mtl.Implies(mtl.Eventually(r), mtl.Until(mtl.Not(a), r))
        if kind == (Pattern.ABSENCE, ScopeKind.AFTER):
            return mtl.Globally(mtl.Implies(q, mtl.Globally(mtl.Not(a))))
        return mtl.Globally(
            mtl.Implies(mtl.And(q, mtl.Eventually(r)), mtl.Until(mtl.Not(a), r))
        )

    if p.pattern is Pattern.RECURRENCE:
        recur = mtl.Eventually(mtl.Atom(p.subject), mtl.Bound(0, p.recurrence_period))
        if kind == (Pattern.RECURRENCE, ScopeKind.GLOBALLY):
            return mtl.Globally(recur)
        return mtl.Globally(
            mtl.Implies(mtl.And(q, mtl.Eventually(r)), mtl.Until(recur, r))
        )

    # response / response chain
    trigger = mtl.Atom(p.trigger)
    if kind == (Pattern.RESPONSE, ScopeKind.GLOBALLY):
        term = p.responses[0]
        return mtl.Globally(
            mtl.Implies(trigger, mtl.Eventually(mtl.Atom(term.event), mtl.Bound(0, term.deadline_ms)))
        )

    # Between-scoped chain (n >= 1); n == 1 is the plain Response template
    first = p.responses[0]
    if len(p.responses) == 1:
        body: mtl.Formula = mtl.Atom(first.event)
    else:
        parts: list[mtl.Formula] = [mtl.Atom(first.event)]
        for term in p.responses[1:]:
            parts.append(mtl.Not(r))
            parts.append(mtl.Eventually(mtl.Atom(term.event), mtl.Bound(0, term.deadline_ms)))
        body = mtl.And(*parts)
    chain = mtl.Until(mtl.Not(r), body, mtl.Bound(0, first.deadline_ms))
    return mtl.Globally(
        mtl.Implies(
            mtl.And(q, mtl.Eventually(r)),
            mtl.Until(mtl.Implies(trigger, chain), r),
        )
    )


def relevant_event_types(p: PatternInstance) -> set[str]:
    """The event types the monitor must not filter out for this property."""
    return p.events()


# -- observer templates ---------------------------------------------------

STATE_CLOSED = "closed"
STATE_OPEN = "open"
STATE_OK = "ok"
STATE_ERROR = "error"


def waiting_state(i: int) -> str:
    return f"waiting_{i}"


def instantiate_observer(p: PatternInstance) -> Observer:
    """Instantiate the observer template for the instance and validate it."""
    _require_supported(p)
    builder = {
        (Pattern.ABSENCE, ScopeKind.GLOBALLY): _absence_globally,
        (Pattern.ABSENCE, ScopeKind.BEFORE): _absence_before,
        (Pattern.ABSENCE, ScopeKind.AFTER): _absence_after,
        (Pattern.ABSENCE, ScopeKind.BETWEEN): _absence_between,
        (Pattern.RECURRENCE, ScopeKind.GLOBALLY): _recurrence_globally,
        (Pattern.RECURRENCE, ScopeKind.BETWEEN): _recurrence_between,
        (Pattern.RESPONSE, ScopeKind.GLOBALLY): _chain_globally,
        (Pattern.RESPONSE, ScopeKind.BETWEEN): _chain_between,
        (Pattern.RESPONSE_CHAIN, ScopeKind.BETWEEN): _chain_between,
    }[(p.pattern, p.scope.kind)]
    obs = builder(p)
    issues = validate(obs)
    if issues:
        raise TemplateValidationError(issues)
    return obs


def _absence_globally(p: PatternInstance) -> Observer:
    return Observer(
        [STATE_OK, STATE_ERROR],
        STATE_OK,
        STATE_ERROR,
        [Transition(STATE_OK, STATE_ERROR, label=p.subject)],
    )


def _absence_before(p: PatternInstance) -> Observer:
    # the scope is open from the start; the first closer settles the property
    return Observer(
        [STATE_OPEN, STATE_CLOSED, STATE_ERROR],
        STATE_OPEN,
        STATE_ERROR,
        [
            Transition(STATE_OPEN, STATE_CLOSED, label=p.scope.r),
            Transition(STATE_OPEN, STATE_ERROR, label=p.subject),
        ],
    )


def _absence_after(p: PatternInstance) -> Observer:
    return Observer(
        [STATE_CLOSED, STATE_OPEN, STATE_ERROR],
        STATE_CLOSED,
        STATE_ERROR,
        [
            Transition(STATE_CLOSED, STATE_OPEN, label=p.scope.q),
            Transition(STATE_OPEN, STATE_ERROR, label=p.subject),
        ],
    )


def _absence_between(p: PatternInstance) -> Observer:
    return Observer(
        [STATE_CLOSED, STATE_OPEN, STATE_ERROR],
        STATE_CLOSED,
        STATE_ERROR,
        [
            Transition(STATE_CLOSED, STATE_OPEN, label=p.scope.q),
            Transition(STATE_OPEN, STATE_CLOSED, label=p.scope.r),
            Transition(STATE_OPEN, STATE_ERROR, label=p.subject),
        ],
    )


def _recurrence_globally(p: PatternInstance) -> Observer:
    # the clock arms at the first occurrence of the subject; from then on the
    # next occurrence must come within the period
    period = p.recurrence_period
    return Observer(
        [STATE_OK, STATE_ERROR],
        STATE_OK,
        STATE_ERROR,
        [
            Transition(STATE_OK, STATE_OK, label=p.subject, reset=True),
            Transition(STATE_OK, STATE_ERROR, guard=Guard(GUARD_GT, period)),
        ],
    )


def _recurrence_between(p: PatternInstance) -> Observer:
    period = p.recurrence_period
    return Observer(
        [STATE_CLOSED, STATE_OPEN, STATE_ERROR],
        STATE_CLOSED,
        STATE_ERROR,
        [
            Transition(STATE_CLOSED, STATE_OPEN, label=p.scope.q, reset=True),
            Transition(STATE_OPEN, STATE_OPEN, label=p.subject, reset=True),
            Transition(STATE_OPEN, STATE_CLOSED, label=p.scope.r),
            Transition(STATE_OPEN, STATE_ERROR, guard=Guard(GUARD_GT, period)),
        ],
    )


def _chain_globally(p: PatternInstance) -> Observer:
    # degenerate chain without scope anchors; only n == 1 is in the matrix
    transitions = [Transition(STATE_OPEN, waiting_state(1), label=p.trigger, reset=True)]
    transitions += _waiting_transitions(p, closer=None)
    states = [STATE_OPEN] + [waiting_state(i + 1) for i in range(len(p.responses))] + [STATE_ERROR]
    return Observer(states, STATE_OPEN, STATE_ERROR, transitions)


def _chain_between(p: PatternInstance) -> Observer:
    transitions = [
        Transition(STATE_CLOSED, STATE_OPEN, label=p.scope.q),
        Transition(STATE_OPEN, STATE_CLOSED, label=p.scope.r),
        Transition(STATE_OPEN, waiting_state(1), label=p.trigger, reset=True),
    ]
    transitions += _waiting_transitions(p, closer=p.scope.r)
    states = (
        [STATE_CLOSED, STATE_OPEN]
        + [waiting_state(i + 1) for i in range(len(p.responses))]
        + [STATE_ERROR]
    )
    return Observer(states, STATE_CLOSED, STATE_ERROR, transitions)


def _waiting_transitions(p: PatternInstance, closer: Optional[str]) -> list[Transition]:
    """Shared chain body: waiting_i accepts response i within its window,
    times out to error, and (in Between scope) fails if the scope closes."""
    n = len(p.responses)
    out: list[Transition] = []
    for i, term in enumerate(p.responses, start=1):
        source = waiting_state(i)
        last = i == n
        out.append(
            Transition(
                source,
                STATE_OPEN if last else waiting_state(i + 1),
                label=term.event,
                guard=Guard(GUARD_LE, term.deadline_ms),
                reset=not last,
            )
        )
        if closer is not None:
            out.append(Transition(source, STATE_ERROR, label=closer))
        out.append(Transition(source, STATE_ERROR, guard=Guard(GUARD_GT, term.deadline_ms)))
    return out


# -- random instances (used by round-trip and equivalence suites) ---------

_NAME_POOL = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf",
    "hotel", "india", "juliet", "kilo", "lima",
]


def random_instance(rng, combo: Optional[tuple[Pattern, ScopeKind]] = None,
                    max_chain: int = 4) -> PatternInstance:
    """Draw a random valid instance, optionally pinned to one combination."""
    if combo is None:
        combo = rng.choice(sorted(SUPPORTED_MATRIX, key=lambda c: (c[0].value, c[1].value)))
    pattern, scope_kind = combo
    names = rng.sample(_NAME_POOL, k=8)
    it = iter(names)
    q = next(it) if scope_kind in (ScopeKind.AFTER, ScopeKind.BETWEEN) else None
    r = next(it) if scope_kind in (ScopeKind.BEFORE, ScopeKind.BETWEEN) else None
    scope = Scope(scope_kind, q=q, r=r)
    if pattern is Pattern.ABSENCE:
        return PatternInstance(pattern, scope, subject=next(it))
    if pattern is Pattern.RECURRENCE:
        return PatternInstance(
            pattern, scope, subject=next(it), recurrence_period=rng.randint(1, 5000)
        )
    n = 1 if pattern is Pattern.RESPONSE else rng.randint(2, max_chain)
    responses = tuple(ResponseTerm(next(it), rng.randint(1, 5000)) for _ in range(n))
    return PatternInstance(pattern, scope, trigger=next(it), responses=responses)
