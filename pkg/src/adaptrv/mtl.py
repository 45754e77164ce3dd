"""Abstract syntax for the bounded-future MTL fragment used by the catalog.

Temporal bounds are closed integer-millisecond intervals [lo, hi]; the
templates only ever produce upper-bounded windows [0, t].  Formulas are
frozen dataclasses, so structural equality is plain ``==``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union


@dataclass(frozen=True)
class Bound:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo < 0 or self.hi < self.lo:
            raise ValueError(f"bad bound [{self.lo}, {self.hi}]")

    def __str__(self) -> str:
        return f"[{self.lo},{self.hi}]"


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    children: tuple["Formula", ...]

    def __init__(self, *children: "Formula"):
        object.__setattr__(self, "children", tuple(children))


@dataclass(frozen=True)
class Or:
    children: tuple["Formula", ...]

    def __init__(self, *children: "Formula"):
        object.__setattr__(self, "children", tuple(children))


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Globally:
    child: "Formula"


@dataclass(frozen=True)
class Eventually:
    child: "Formula"
    bound: Optional[Bound] = None


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"
    bound: Optional[Bound] = None


Formula = Union[Atom, Not, And, Or, Implies, Globally, Eventually, Until]


def atoms(f: Formula) -> set[str]:
    """All event-type names occurring in the formula."""
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, Not):
        return atoms(f.child)
    if isinstance(f, (And, Or)):
        out: set[str] = set()
        for c in f.children:
            out |= atoms(c)
        return out
    if isinstance(f, Implies):
        return atoms(f.lhs) | atoms(f.rhs)
    if isinstance(f, Globally):
        return atoms(f.child)
    if isinstance(f, Eventually):
        return atoms(f.child)
    if isinstance(f, Until):
        return atoms(f.left) | atoms(f.right)
    raise TypeError(f"not a formula: {f!r}")


def _needs_parens(f: Formula) -> bool:
    return isinstance(f, (And, Or, Implies, Until))


def _sub(f: Formula) -> str:
    text = render(f)
    return f"({text})" if _needs_parens(f) else text


def render(f: Formula) -> str:
    """Human-readable rendering with unicode operators, e.g.
    ``□((q ∧ ◊r) → (p → (¬r U[0,2000] s)) U r)``."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "¬" + _sub(f.child)
    if isinstance(f, And):
        return " ∧ ".join(_sub(c) for c in f.children)
    if isinstance(f, Or):
        return " ∨ ".join(_sub(c) for c in f.children)
    if isinstance(f, Implies):
        return f"{_sub(f.lhs)} → {_sub(f.rhs)}"
    if isinstance(f, Globally):
        return "□" + _sub_tight(f.child)
    if isinstance(f, Eventually):
        op = "◊" + (str(f.bound) if f.bound else "")
        return op + _sub_tight(f.child)
    if isinstance(f, Until):
        op = "U" + (str(f.bound) if f.bound else "")
        return f"{_sub(f.left)} {op} {_sub(f.right)}"
    raise TypeError(f"not a formula: {f!r}")


def _sub_tight(f: Formula) -> str:
    # unary temporal operators parenthesize everything but atoms
    text = render(f)
    return text if isinstance(f, Atom) else f"({text})"


def normalize(f: Formula) -> Formula:
    """Canonical form for AST comparison: flattens nested conjunctions and
    disjunctions (preserving order)."""
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(normalize(f.child))
    if isinstance(f, And):
        flat: list[Formula] = []
        for c in f.children:
            c = normalize(c)
            if isinstance(c, And):
                flat.extend(c.children)
            else:
                flat.append(c)
        return And(*flat) if len(flat) != 1 else flat[0]
    if isinstance(f, Or):
        flat = []
        for c in f.children:
            c = normalize(c)
            if isinstance(c, Or):
                flat.extend(c.children)
            else:
                flat.append(c)
        return Or(*flat) if len(flat) != 1 else flat[0]
    if isinstance(f, Implies):
        return Implies(normalize(f.lhs), normalize(f.rhs))
    if isinstance(f, Globally):
        return Globally(normalize(f.child))
    if isinstance(f, Eventually):
        return Eventually(normalize(f.child), f.bound)
    if isinstance(f, Until):
        return Until(normalize(f.left), normalize(f.right), f.bound)
    raise TypeError(f"not a formula: {f!r}")


def equivalent(a: Formula, b: Formula) -> bool:
    """AST equality after normalization."""
    return normalize(a) == normalize(b)
