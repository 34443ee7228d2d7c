"""AST node definitions for the STL fragment used throughout the toolkit.

Operators: predicates, negation, conjunction, disjunction, implication,
and the bounded temporal operators Eventually / Globally.  Interval
bounds are kept as parsed numbers; interpretation (sample indices vs.
seconds) happens at evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass


class StlError(ValueError):
    pass


# --- predicate expressions -------------------------------------------------


@dataclass(frozen=True)
class ChannelExpr:
    """A scalar channel reference such as ``y.y`` or ``x``."""

    name: str


@dataclass(frozen=True)
class Norm2Expr:
    """Euclidean distance between a 3-vector channel group and a point.

    ``point`` is a constant (x, y, z) tuple; ``point_name`` records the
    scenario symbol it was resolved from, for pretty-printing.
    """

    base: str
    point: tuple[float, float, float]
    point_name: str | None = None


@dataclass(frozen=True)
class AbsExpr:
    child: "Expr"


Expr = ChannelExpr | Norm2Expr | AbsExpr


# --- formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class Pred:
    """Atomic comparison expr <op> threshold with op in {<, >}.

    Robustness of (expr > c) is expr - c; of (expr < c) is c - expr.
    """

    expr: Expr
    op: str
    threshold: float

    def __post_init__(self):
        if self.op not in ("<", ">"):
            raise StlError(f"predicate comparator must be < or >, got {self.op!r}")


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    children: tuple["Formula", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise StlError("And needs at least two children")


@dataclass(frozen=True)
class Or:
    children: tuple["Formula", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise StlError("Or needs at least two children")


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Eventually:
    lo: float
    hi: float
    child: "Formula"

    def __post_init__(self):
        _check_interval(self.lo, self.hi)


@dataclass(frozen=True)
class Globally:
    lo: float
    hi: float
    child: "Formula"

    def __post_init__(self):
        _check_interval(self.lo, self.hi)


Formula = Pred | Not | And | Or | Implies | Eventually | Globally


def _check_interval(lo, hi):
    if lo < 0 or lo > hi:
        raise StlError(f"temporal interval must satisfy 0 <= a <= b, got [{lo},{hi}]")


def pretty_expr(expr: Expr) -> str:
    if isinstance(expr, ChannelExpr):
        return expr.name
    if isinstance(expr, Norm2Expr):
        p = expr.point
        pt = f"[{_num(p[0])},{_num(p[1])},{_num(p[2])}]"
        return f"norm2({expr.base} - {pt})"
    if isinstance(expr, AbsExpr):
        return f"abs({pretty_expr(expr.child)})"
    raise TypeError(expr)


def pretty(formula: Formula) -> str:
    """Canonical textual form; parses back to an equal AST."""
    if isinstance(formula, Pred):
        return f"{pretty_expr(formula.expr)} {formula.op} {_num(formula.threshold)}"
    if isinstance(formula, Not):
        return f"!({pretty(formula.child)})"
    if isinstance(formula, And):
        return "(" + " & ".join(pretty(c) for c in formula.children) + ")"
    if isinstance(formula, Or):
        return "(" + " | ".join(pretty(c) for c in formula.children) + ")"
    if isinstance(formula, Implies):
        return f"(({pretty(formula.lhs)}) -> ({pretty(formula.rhs)}))"
    if isinstance(formula, Eventually):
        return f"F[{_num(formula.lo)},{_num(formula.hi)}]({pretty(formula.child)})"
    if isinstance(formula, Globally):
        return f"G[{_num(formula.lo)},{_num(formula.hi)}]({pretty(formula.child)})"
    raise TypeError(formula)


def _num(x: float) -> str:
    return repr(float(x))


def expr_channels(expr: Expr) -> set[str]:
    if isinstance(expr, ChannelExpr):
        return {expr.name}
    if isinstance(expr, Norm2Expr):
        return {f"{expr.base}.{ax}" for ax in "xyz"}
    if isinstance(expr, AbsExpr):
        return expr_channels(expr.child)
    raise TypeError(expr)


def formula_channels(formula: Formula) -> set[str]:
    """All trace channels referenced by predicates in the formula."""
    if isinstance(formula, Pred):
        return expr_channels(formula.expr)
    if isinstance(formula, Not):
        return formula_channels(formula.child)
    if isinstance(formula, (And, Or)):
        out: set[str] = set()
        for c in formula.children:
            out |= formula_channels(c)
        return out
    if isinstance(formula, Implies):
        return formula_channels(formula.lhs) | formula_channels(formula.rhs)
    if isinstance(formula, (Eventually, Globally)):
        return formula_channels(formula.child)
    raise TypeError(formula)
