"""Adaptation rules: in-place observer transformations that track a
requirement change while preserving verification progress.

Each rule rewrites both the pattern instance and its observer.  The
rewrites are fixed-shape and imperative; their contract is that every
output observer is isomorphic to a fresh instantiation of the post-change
pattern, differing only in the current state and clock, which follow the
rule's state mapping.  Rules never mutate their inputs: they build new
Observer instances, so a rejected adaptation leaves the session untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

from .errors import (
    AdaptationError,
    BadIndexError,
    NameCollisionError,
    NoTimeBoundError,
    UnknownEventError,
    UnsupportedCombinationError,
    WrongPatternError,
)
from .observer import Guard, Observer, Transition, validate
from .psp import (
    Pattern,
    PatternInstance,
    ResponseTerm,
    Scope,
    ScopeKind,
    STATE_OPEN,
    STATE_ERROR,
    SUPPORTED_MATRIX,
    instantiate_observer,
    waiting_state,
)


class RuleKind(Enum):
    UPDATE_TIME_GUARD = "update_time_guard"
    UPDATE_EVENT = "update_event"
    ADD_RESPONSE = "add_response"
    REMOVE_RESPONSE = "remove_response"
    SPLIT_CHAIN = "split_chain"


@dataclass(frozen=True)
class AdaptationRule:
    """An instantiated adaptation pattern; unused parameter fields stay None."""

    kind: RuleKind
    new_bound_ms: Optional[int] = None
    which: Union[str, int] = "all"  # "all" or a 1-based response index
    old_event: Optional[str] = None
    new_event: Optional[str] = None
    event: Optional[str] = None
    bound_ms: Optional[int] = None
    index: Optional[int] = None

    def describe(self) -> str:
        k = self.kind
        if k is RuleKind.UPDATE_TIME_GUARD:
            target = "all bounds" if self.which == "all" else f"response {self.which}"
            return f"update time guard of {target} to {self.new_bound_ms} ms"
        if k is RuleKind.UPDATE_EVENT:
            return f"update event {self.old_event} to {self.new_event}"
        if k is RuleKind.ADD_RESPONSE:
            return f"add response {self.event} within {self.bound_ms} ms"
        if k is RuleKind.REMOVE_RESPONSE:
            return f"remove response {self.index}"
        return "split chain into independent responses"


def update_time_guard_rule(new_bound_ms: int, which: Union[str, int] = "all") -> AdaptationRule:
    return AdaptationRule(RuleKind.UPDATE_TIME_GUARD, new_bound_ms=new_bound_ms, which=which)


def update_event_rule(old_event: str, new_event: str) -> AdaptationRule:
    return AdaptationRule(RuleKind.UPDATE_EVENT, old_event=old_event, new_event=new_event)


def add_response_rule(event: str, bound_ms: int) -> AdaptationRule:
    return AdaptationRule(RuleKind.ADD_RESPONSE, event=event, bound_ms=bound_ms)


def remove_response_rule(index: int) -> AdaptationRule:
    return AdaptationRule(RuleKind.REMOVE_RESPONSE, index=index)


def split_chain_rule() -> AdaptationRule:
    return AdaptationRule(RuleKind.SPLIT_CHAIN)


@dataclass
class AdaptationOutcome:
    observers: list[Observer]
    patterns: list[PatternInstance]
    state_map: dict


# -- entry point ----------------------------------------------------------


def apply(obs: Observer, p: PatternInstance, rule: AdaptationRule) -> AdaptationOutcome:
    """Dispatch a rule and validate every output observer.

    Inputs are never mutated, so any raised error leaves the caller's
    observer and pattern exactly as they were.
    """
    handler = {
        RuleKind.UPDATE_TIME_GUARD: update_time_guard,
        RuleKind.UPDATE_EVENT: update_event,
        RuleKind.ADD_RESPONSE: add_response,
        RuleKind.REMOVE_RESPONSE: remove_response,
        RuleKind.SPLIT_CHAIN: split_chain,
    }[rule.kind]
    outcome = handler(obs, p, rule)
    for out in outcome.observers:
        issues = validate(out)
        if issues:
            raise AdaptationError(
                "adapted observer failed validation: " + "; ".join(str(i) for i in issues)
            )
    return outcome


def apply_to_pattern(p: PatternInstance, rule: AdaptationRule) -> list[PatternInstance]:
    """The pattern-level half of a rule (used by the redeployment baseline)."""
    if rule.kind is RuleKind.UPDATE_TIME_GUARD:
        return [_pattern_update_guard(p, rule)]
    if rule.kind is RuleKind.UPDATE_EVENT:
        return [_pattern_update_event(p, rule)]
    if rule.kind is RuleKind.ADD_RESPONSE:
        return [_pattern_add_response(p, rule)]
    if rule.kind is RuleKind.REMOVE_RESPONSE:
        return [_pattern_remove_response(p, rule)]
    return _pattern_split(p)


# -- helpers ----------------------------------------------------------------


def _chain_waiting_states(obs: Observer, p: PatternInstance) -> list[str]:
    """The waiting states in response order, recovered by walking the chain
    from the trigger transition (state names may drift after adaptations)."""
    trigger_ts = [t for t in obs.transitions if t.label == p.trigger]
    if len(trigger_ts) != 1:
        raise AdaptationError(f"expected one trigger transition, found {len(trigger_ts)}")
    states = [trigger_ts[0].target]
    for term in p.responses[:-1]:
        nxt = [t for t in obs.outgoing(states[-1]) if t.label == term.event]
        if len(nxt) != 1:
            raise AdaptationError(f"chain walk failed at {states[-1]} on {term.event}")
        states.append(nxt[0].target)
    return states


def _fresh_waiting_name(states: tuple[str, ...]) -> str:
    taken = set(states)
    i = 1
    while waiting_state(i) in taken:
        i += 1
    return waiting_state(i)


def _rebuild(obs: Observer, states, transitions, current=None, clock_reset_at="keep") -> Observer:
    return Observer(
        states,
        obs.initial,
        obs.error,
        transitions,
        current=obs.current if current is None else current,
        clock_reset_at=obs.clock_reset_at if clock_reset_at == "keep" else clock_reset_at,
        last_seen_ts=obs.last_seen_ts,
    )


def _is_chain(p: PatternInstance) -> bool:
    return p.pattern in (Pattern.RESPONSE, Pattern.RESPONSE_CHAIN)


# -- a) update a time guard --------------------------------------------------


def _pattern_update_guard(p: PatternInstance, rule: AdaptationRule) -> PatternInstance:
    new = rule.new_bound_ms
    if not isinstance(new, int) or new < 0:
        raise AdaptationError(f"bad bound: {new!r}")
    if p.pattern is Pattern.RECURRENCE:
        if rule.which not in ("all", 1):
            raise BadIndexError(f"recurrence has one bound, not index {rule.which}")
        return replace(p, recurrence_period=new)
    if not _is_chain(p):
        raise NoTimeBoundError(f"{p.pattern.value} has no time bound")
    if rule.which == "all":
        terms = tuple(ResponseTerm(t.event, new) for t in p.responses)
    else:
        i = rule.which
        if not isinstance(i, int) or not (1 <= i <= len(p.responses)):
            raise BadIndexError(f"response index {i} out of range 1..{len(p.responses)}")
        terms = tuple(
            ResponseTerm(t.event, new if j == i else t.deadline_ms)
            for j, t in enumerate(p.responses, start=1)
        )
    return replace(p, responses=terms)


def update_time_guard(obs: Observer, p: PatternInstance, rule: AdaptationRule) -> AdaptationOutcome:
    new_p = _pattern_update_guard(p, rule)
    new = rule.new_bound_ms
    if rule.which == "all" or p.pattern is Pattern.RECURRENCE:
        transitions = [
            replace(t, guard=Guard(t.guard.op, new)) if t.guard is not None else t
            for t in obs.transitions
        ]
    else:
        target_state = _chain_waiting_states(obs, p)[rule.which - 1]
        transitions = [
            replace(t, guard=Guard(t.guard.op, new))
            if t.source == target_state and t.guard is not None
            else t
            for t in obs.transitions
        ]
    out = _rebuild(obs, obs.states, transitions)
    return AdaptationOutcome([out], [new_p], {"current": {obs.current: obs.current}})


# -- b) update an event -------------------------------------------------------


def _pattern_update_event(p: PatternInstance, rule: AdaptationRule) -> PatternInstance:
    old, new = rule.old_event, rule.new_event
    if old not in p.events():
        raise UnknownEventError(f"{old!r} does not occur in the pattern")
    if not new or new in p.events():
        raise NameCollisionError(f"{new!r} already occurs in the pattern")
    scope = p.scope
    if old in scope.events():
        scope = Scope(
            scope.kind,
            q=new if scope.q == old else scope.q,
            r=new if scope.r == old else scope.r,
        )
    return replace(
        p,
        scope=scope,
        trigger=new if p.trigger == old else p.trigger,
        subject=new if p.subject == old else p.subject,
        responses=tuple(
            ResponseTerm(new if t.event == old else t.event, t.deadline_ms) for t in p.responses
        ),
    )


def update_event(obs: Observer, p: PatternInstance, rule: AdaptationRule) -> AdaptationOutcome:
    new_p = _pattern_update_event(p, rule)
    transitions = [
        replace(t, label=rule.new_event) if t.label == rule.old_event else t
        for t in obs.transitions
    ]
    out = _rebuild(obs, obs.states, transitions)
    return AdaptationOutcome([out], [new_p], {"current": {obs.current: obs.current}})


# -- c) add a response to the chain -------------------------------------------


def _pattern_add_response(p: PatternInstance, rule: AdaptationRule) -> PatternInstance:
    if not _is_chain(p):
        raise WrongPatternError(f"cannot add a response to {p.pattern.value}")
    if (Pattern.RESPONSE_CHAIN, p.scope.kind) not in SUPPORTED_MATRIX:
        raise UnsupportedCombinationError(
            f"no chain template for scope {p.scope.kind.value}"
        )
    if rule.event in p.events():
        raise NameCollisionError(f"{rule.event!r} already occurs in the pattern")
    if not isinstance(rule.bound_ms, int) or rule.bound_ms < 0:
        raise AdaptationError(f"bad bound: {rule.bound_ms!r}")
    return replace(
        p,
        pattern=Pattern.RESPONSE_CHAIN,
        responses=p.responses + (ResponseTerm(rule.event, rule.bound_ms),),
    )


def add_response(obs: Observer, p: PatternInstance, rule: AdaptationRule) -> AdaptationOutcome:
    new_p = _pattern_add_response(p, rule)
    last = _chain_waiting_states(obs, p)[-1]
    last_term = p.responses[-1]
    fresh = _fresh_waiting_name(obs.states)
    transitions = []
    for t in obs.transitions:
        if t.source == last and t.label == last_term.event:
            # the old final response now hands over to the new waiting state
            transitions.append(replace(t, target=fresh, reset=True))
        else:
            transitions.append(t)
    transitions.append(
        Transition(fresh, STATE_OPEN, label=rule.event, guard=Guard("<=", rule.bound_ms))
    )
    transitions.append(Transition(fresh, STATE_ERROR, label=p.scope.r))
    transitions.append(Transition(fresh, STATE_ERROR, guard=Guard(">", rule.bound_ms)))
    states = obs.states[:-1] + (fresh, obs.states[-1]) if obs.states[-1] == STATE_ERROR else obs.states + (fresh,)
    out = _rebuild(obs, states, transitions)
    return AdaptationOutcome([out], [new_p], {"current": {obs.current: obs.current}})


# -- d) remove a response from the chain --------------------------------------


def _pattern_remove_response(p: PatternInstance, rule: AdaptationRule) -> PatternInstance:
    if p.pattern is not Pattern.RESPONSE_CHAIN:
        raise WrongPatternError(f"cannot remove a response from {p.pattern.value}")
    i = rule.index
    if not isinstance(i, int) or not (1 <= i <= len(p.responses)):
        raise BadIndexError(f"response index {i} out of range 1..{len(p.responses)}")
    terms = p.responses[: i - 1] + p.responses[i:]
    kind = Pattern.RESPONSE_CHAIN if len(terms) >= 2 else Pattern.RESPONSE
    return replace(p, pattern=kind, responses=terms)


def remove_response(obs: Observer, p: PatternInstance, rule: AdaptationRule) -> AdaptationOutcome:
    new_p = _pattern_remove_response(p, rule)
    i = rule.index
    n = len(p.responses)
    chain = _chain_waiting_states(obs, p)
    removed = chain[i - 1]
    successor = chain[i] if i < n else STATE_OPEN
    prev_label = p.trigger if i == 1 else p.responses[i - 2].event

    transitions = []
    for t in obs.transitions:
        if t.source == removed:
            continue  # the removed state's obligations disappear with it
        if t.label == prev_label and t.target == removed:
            # bridge the predecessor over the removed state; a hop to `open`
            # closes the chain, so it no longer restarts the clock
            transitions.append(replace(t, target=successor, reset=i < n))
        else:
            transitions.append(t)

    states = tuple(s for s in obs.states if s != removed)
    current = obs.current
    mapping = {current: current}
    if current == removed:
        current = successor
        mapping = {removed: successor}
    out = _rebuild(obs, states, transitions, current=current)
    return AdaptationOutcome([out], [new_p], {"current": mapping})


# -- e) split the chain into independent responses -----------------------------


def _pattern_split(p: PatternInstance) -> list[PatternInstance]:
    if p.pattern is not Pattern.RESPONSE_CHAIN:
        raise WrongPatternError(f"cannot split {p.pattern.value}")
    return [
        PatternInstance(Pattern.RESPONSE, p.scope, trigger=p.trigger, responses=(term,))
        for term in p.responses
    ]


def split_chain(obs: Observer, p: PatternInstance, rule: AdaptationRule) -> AdaptationOutcome:
    new_patterns = _pattern_split(p)
    chain = _chain_waiting_states(obs, p)
    current_index = chain.index(obs.current) + 1 if obs.current in chain else None

    observers = []
    mapping: dict[str, list[str]] = {obs.current: []}
    for j, single in enumerate(new_patterns, start=1):
        out = instantiate_observer(single)
        out.last_seen_ts = obs.last_seen_ts
        if current_index is None:
            # closed/open/error carry the same meaning in every output
            out.current = obs.current
        elif j < current_index:
            # this response already occurred: nothing is owed
            out.current = STATE_OPEN
        else:
            # still owed; keep the original clock so no extra time is granted
            out.current = waiting_state(1)
            out.clock_reset_at = obs.clock_reset_at
        mapping[obs.current].append(out.current)
        observers.append(out)
    return AdaptationOutcome(observers, new_patterns, {"current": mapping})
