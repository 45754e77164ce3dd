"""Exception hierarchy shared across the package."""

from __future__ import annotations


class AdaptRvError(Exception):
    """Base class for all package errors."""

    code = "error"


class RequirementSyntaxError(AdaptRvError):
    """Raised when requirement text does not conform to the grammar.

    Carries the character position of the offending token and the set of
    token descriptions that would have been accepted there.
    """

    code = "syntax"

    def __init__(self, message: str, position: int, expected: set[str] | None = None):
        super().__init__(f"{message} (at position {position})")
        self.position = position
        self.expected = frozenset(expected or ())


class UnknownPatternError(AdaptRvError):
    """Requirement body matches none of the supported pattern clauses."""

    code = "unknown-pattern"


class UnsupportedCombinationError(AdaptRvError):
    """The (pattern, scope) pair is outside the supported matrix."""

    code = "unsupported-combination"


class TemplateValidationError(AdaptRvError):
    """A constructed observer failed its structural checks (catalog bug)."""

    code = "template-invalid"

    def __init__(self, issues):
        super().__init__("observer failed validation: " + "; ".join(str(i) for i in issues))
        self.issues = list(issues)


class TimeRegressionError(AdaptRvError):
    """An item carried a timestamp earlier than one already processed."""

    code = "time-regression"


class NondeterminismError(AdaptRvError):
    """More than one transition was enabled for a single stimulus."""

    code = "nondeterminism"


class AdaptationError(AdaptRvError):
    """Base class for adaptation rejections; the observer is left untouched."""

    code = "adaptation"


class WrongPatternError(AdaptationError):
    code = "wrong-pattern"


class NoTimeBoundError(AdaptationError):
    code = "no-time-bound"


class UnknownEventError(AdaptationError):
    code = "unknown-event"


class NameCollisionError(AdaptationError):
    code = "name-collision"


class BadIndexError(AdaptationError):
    code = "bad-index"


class UnsupportedFormulaError(AdaptRvError):
    """Formula is outside the fragment the reference evaluator accepts."""

    code = "unsupported-formula"


class GenerationFailureError(AdaptRvError):
    """Trace generation could not produce the requested label."""

    code = "generation-failure"

    def __init__(self, message: str, seed: int):
        super().__init__(f"{message} (seed {seed})")
        self.seed = seed


class TraceParseError(AdaptRvError):
    """A trace file line could not be parsed."""

    code = "trace-parse"

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
