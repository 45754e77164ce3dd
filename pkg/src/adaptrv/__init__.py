"""Adaptive runtime verification.

Structured-English requirements are compiled into MTL formulas and
deterministic timed observer automata; event streams are verified against
the observers, and the observers can be safely adapted in place when a
requirement changes, preserving the verification progress made so far.
"""

from .engine import MonitorSession, ProcessResult, RunResult, Verdict, run_virtual, verify_trace
from .mtl import render as render_mtl
from .observer import Event, Guard, Observer, Transition, isomorphic, validate
from .oracle import OracleVerdict, VerdictValue, evaluate, evaluate_pattern
from .pap import (
    AdaptationOutcome,
    AdaptationRule,
    RuleKind,
    add_response_rule,
    apply,
    remove_response_rule,
    split_chain_rule,
    update_event_rule,
    update_time_guard_rule,
)
from .psp import (
    Pattern,
    PatternInstance,
    ResponseTerm,
    Scope,
    ScopeKind,
    instantiate_observer,
    parse_requirement,
    relevant_event_types,
    render_requirement,
    to_mtl,
)
from .tracegen import SATISFYING, VIOLATING, generate, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "AdaptationOutcome",
    "AdaptationRule",
    "Event",
    "Guard",
    "MonitorSession",
    "Observer",
    "OracleVerdict",
    "Pattern",
    "PatternInstance",
    "ProcessResult",
    "ResponseTerm",
    "RuleKind",
    "RunResult",
    "SATISFYING",
    "Scope",
    "ScopeKind",
    "Transition",
    "Verdict",
    "VerdictValue",
    "VIOLATING",
    "add_response_rule",
    "apply",
    "evaluate",
    "evaluate_pattern",
    "generate",
    "instantiate_observer",
    "isomorphic",
    "parse_requirement",
    "read_trace",
    "relevant_event_types",
    "remove_response_rule",
    "render_mtl",
    "render_requirement",
    "run_virtual",
    "split_chain_rule",
    "to_mtl",
    "update_event_rule",
    "update_time_guard_rule",
    "validate",
    "verify_trace",
    "write_trace",
]
