"""Quantitative semantics over discrete-time traces.

Exact robustness follows the standard min/max table: negation flips
sign, conjunction takes the min of children, disjunction the max,
Globally the min over the inclusive sample window [t+a, t+b], and
Eventually the max.  Implication is evaluated as Or(Not lhs, rhs).

The smooth variant replaces min/max with log-sum-exp softmin/softmax
at a temperature tau:

    softmax(x) =  tau * log(sum exp(x / tau))   >= max(x)
    softmin(x) = -tau * log(sum exp(-x / tau))  <= min(x)

Each relaxed node deviates from the exact one by at most tau * ln(n)
for a window of n values, and the relaxation is differentiable in the
trace samples; gradients are propagated by reverse accumulation.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import logsumexp, softmax as _softmax_weights

from ..trace import SignalTrace
from .ast import (
    AbsExpr,
    And,
    ChannelExpr,
    Eventually,
    Expr,
    Formula,
    Globally,
    Implies,
    Norm2Expr,
    Not,
    Or,
    Pred,
    StlError,
)


def resolve_interval(lo: float, hi: float, dt: float, in_seconds: bool) -> tuple[int, int]:
    """Turn an interval into inclusive sample offsets."""
    if in_seconds:
        a, b = int(round(lo / dt)), int(round(hi / dt))
    else:
        a, b = int(round(lo)), int(round(hi))
        if abs(a - lo) > 1e-9 or abs(b - hi) > 1e-9:
            raise StlError(
                f"interval [{lo},{hi}] is not integral; pass intervals_in_seconds=True "
                "to interpret bounds as seconds"
            )
    if a < 0 or a > b:
        raise StlError(f"resolved interval [{a},{b}] must satisfy 0 <= a <= b")
    return a, b


def horizon(formula: Formula, dt: float = 1.0, in_seconds: bool = False) -> int:
    """Minimum number of samples beyond t0 needed to evaluate the formula."""
    if isinstance(formula, Pred):
        return 0
    if isinstance(formula, Not):
        return horizon(formula.child, dt, in_seconds)
    if isinstance(formula, (And, Or)):
        return max(horizon(c, dt, in_seconds) for c in formula.children)
    if isinstance(formula, Implies):
        return max(horizon(formula.lhs, dt, in_seconds), horizon(formula.rhs, dt, in_seconds))
    if isinstance(formula, (Eventually, Globally)):
        _, b = resolve_interval(formula.lo, formula.hi, dt, in_seconds)
        return b + horizon(formula.child, dt, in_seconds)
    raise TypeError(formula)


# --- predicate margins -------------------------------------------------------


def _expr_values(expr: Expr, trace: SignalTrace) -> np.ndarray:
    if isinstance(expr, ChannelExpr):
        return trace.channel(expr.name)
    if isinstance(expr, Norm2Expr):
        diff = trace.vector(expr.base) - np.asarray(expr.point)
        return np.linalg.norm(diff, axis=1)
    if isinstance(expr, AbsExpr):
        return np.abs(_expr_values(expr.child, trace))
    raise TypeError(expr)


def _expr_backward(expr: Expr, trace: SignalTrace, adj: np.ndarray, grads: dict):
    """Accumulate d(expr values)/d(channel samples) . adj into grads."""
    if isinstance(expr, ChannelExpr):
        grads.setdefault(expr.name, np.zeros(len(trace)))
        grads[expr.name][: len(adj)] += adj
        return
    if isinstance(expr, Norm2Expr):
        diff = trace.vector(expr.base) - np.asarray(expr.point)
        norms = np.linalg.norm(diff, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        unit = diff / safe[:, None]
        for j, ax in enumerate("xyz"):
            name = f"{expr.base}.{ax}"
            grads.setdefault(name, np.zeros(len(trace)))
            grads[name][: len(adj)] += adj * unit[: len(adj), j]
        return
    if isinstance(expr, AbsExpr):
        values = _expr_values(expr.child, trace)
        _expr_backward(expr.child, trace, adj * np.sign(values[: len(adj)]), grads)
        return
    raise TypeError(expr)


def _pred_margin(pred: Pred, trace: SignalTrace) -> np.ndarray:
    values = _expr_values(pred.expr, trace)
    return values - pred.threshold if pred.op == ">" else pred.threshold - values


# --- exact semantics ---------------------------------------------------------


def _series(formula: Formula, trace: SignalTrace, in_seconds: bool) -> np.ndarray:
    """Robustness at every valid start index: series[i] = rho(formula, trace, i)."""
    if isinstance(formula, Pred):
        return _pred_margin(formula, trace)
    if isinstance(formula, Not):
        return -_series(formula.child, trace, in_seconds)
    if isinstance(formula, (And, Or)):
        parts = [_series(c, trace, in_seconds) for c in formula.children]
        L = min(len(p) for p in parts)
        stacked = np.stack([p[:L] for p in parts])
        return stacked.min(axis=0) if isinstance(formula, And) else stacked.max(axis=0)
    if isinstance(formula, Implies):
        return _series(Or((Not(formula.lhs), formula.rhs)), trace, in_seconds)
    if isinstance(formula, (Eventually, Globally)):
        a, b = resolve_interval(formula.lo, formula.hi, trace.dt, in_seconds)
        inner = _series(formula.child, trace, in_seconds)
        if len(inner) < b + 1:
            raise StlError(
                f"trace too short: window [{a},{b}] needs {b + 1} evaluable samples, "
                f"have {len(inner)}"
            )
        windows = sliding_window_view(inner[a:], b - a + 1)
        return windows.min(axis=1) if isinstance(formula, Globally) else windows.max(axis=1)
    raise TypeError(formula)


def robustness(
    formula: Formula,
    trace: SignalTrace,
    t0: int = 0,
    intervals_in_seconds: bool = False,
) -> float:
    """Exact quantitative robustness rho(formula, trace, t0)."""
    series = _series(formula, trace, intervals_in_seconds)
    if not 0 <= t0 < len(series):
        raise StlError(
            f"t0={t0} out of range: formula horizon "
            f"{horizon(formula, trace.dt, intervals_in_seconds)} leaves "
            f"{len(series)} evaluable start samples in a trace of length {len(trace)}"
        )
    return float(series[t0])


def boolean_satisfies(
    formula: Formula,
    trace: SignalTrace,
    t0: int = 0,
    intervals_in_seconds: bool = False,
) -> bool:
    """Boolean satisfaction under the same discrete semantics (strict predicates)."""
    if isinstance(formula, Pred):
        return bool(_pred_margin(formula, trace)[t0] > 0)
    if isinstance(formula, Not):
        return not boolean_satisfies(formula.child, trace, t0, intervals_in_seconds)
    if isinstance(formula, And):
        return all(boolean_satisfies(c, trace, t0, intervals_in_seconds) for c in formula.children)
    if isinstance(formula, Or):
        return any(boolean_satisfies(c, trace, t0, intervals_in_seconds) for c in formula.children)
    if isinstance(formula, Implies):
        return boolean_satisfies(
            Or((Not(formula.lhs), formula.rhs)), trace, t0, intervals_in_seconds
        )
    if isinstance(formula, (Eventually, Globally)):
        a, b = resolve_interval(formula.lo, formula.hi, trace.dt, intervals_in_seconds)
        hits = (
            boolean_satisfies(formula.child, trace, t, intervals_in_seconds)
            for t in range(t0 + a, t0 + b + 1)
        )
        return all(hits) if isinstance(formula, Globally) else any(hits)
    raise TypeError(formula)


# --- smooth semantics --------------------------------------------------------


def _smooth_series(formula, trace, tau, in_seconds, tape):
    """Forward pass; tape records (node, inputs) closures for the backward pass.

    Returns the series and a backward callable taking the adjoint of the
    series and a channel-gradient dict to accumulate into.
    """
    if isinstance(formula, Pred):
        series = _pred_margin(formula, trace)
        sign = 1.0 if formula.op == ">" else -1.0

        def back(adj, grads):
            _expr_backward(formula.expr, trace, sign * adj, grads)

        return series, back
    if isinstance(formula, Not):
        inner, back_inner = _smooth_series(formula.child, trace, tau, in_seconds, tape)

        def back(adj, grads):
            back_inner(-adj, grads)

        return -inner, back
    if isinstance(formula, (And, Or)):
        sign = -1.0 if isinstance(formula, And) else 1.0
        parts = [_smooth_series(c, trace, tau, in_seconds, tape) for c in formula.children]
        L = min(len(p[0]) for p in parts)
        stacked = np.stack([p[0][:L] for p in parts])
        series = sign * tau * logsumexp(sign * stacked / tau, axis=0)
        weights = _softmax_weights(sign * stacked / tau, axis=0)

        def back(adj, grads):
            for w_row, (_, back_child) in zip(weights, parts):
                child_adj = np.zeros(len(w_row))
                child_adj[: len(adj)] = adj * w_row[: len(adj)]
                back_child(child_adj, grads)

        return series, back
    if isinstance(formula, Implies):
        return _smooth_series(
            Or((Not(formula.lhs), formula.rhs)), trace, tau, in_seconds, tape
        )
    if isinstance(formula, (Eventually, Globally)):
        a, b = resolve_interval(formula.lo, formula.hi, trace.dt, in_seconds)
        sign = -1.0 if isinstance(formula, Globally) else 1.0
        inner, back_inner = _smooth_series(formula.child, trace, tau, in_seconds, tape)
        if len(inner) < b + 1:
            raise StlError(
                f"trace too short: window [{a},{b}] needs {b + 1} evaluable samples, "
                f"have {len(inner)}"
            )
        windows = sliding_window_view(inner[a:], b - a + 1)
        series = sign * tau * logsumexp(sign * windows / tau, axis=1)
        weights = _softmax_weights(sign * windows / tau, axis=1)

        def back(adj, grads):
            child_adj = np.zeros(len(inner))
            for i in range(len(adj)):
                child_adj[a + i : a + i + (b - a + 1)] += adj[i] * weights[i]
            back_inner(child_adj, grads)

        return series, back
    raise TypeError(formula)


def smooth_robustness(
    formula: Formula,
    trace: SignalTrace,
    t0: int = 0,
    temperature: float = 0.05,
    intervals_in_seconds: bool = False,
) -> float:
    """Log-sum-exp relaxation of robustness; converges to it as temperature -> 0."""
    value, _ = smooth_robustness_with_grad(
        formula, trace, t0, temperature, intervals_in_seconds, want_grad=False
    )
    return value


def smooth_robustness_with_grad(
    formula: Formula,
    trace: SignalTrace,
    t0: int = 0,
    temperature: float = 0.05,
    intervals_in_seconds: bool = False,
    want_grad: bool = True,
) -> tuple[float, dict[str, np.ndarray]]:
    """Smooth robustness and its gradient w.r.t. every referenced channel.

    The gradient dict maps channel name to an array of length(trace).
    """
    if temperature <= 0:
        raise StlError(f"temperature must be positive, got {temperature}")
    series, back = _smooth_series(formula, trace, temperature, intervals_in_seconds, [])
    if not 0 <= t0 < len(series):
        raise StlError(
            f"t0={t0} out of range: {len(series)} evaluable start samples"
        )
    grads: dict[str, np.ndarray] = {}
    if want_grad:
        adj = np.zeros(len(series))
        adj[t0] = 1.0
        back(adj, grads)
    return float(series[t0]), grads


def smoothing_error_bound(
    formula: Formula, temperature: float, dt: float = 1.0, in_seconds: bool = False
) -> float:
    """Worst-case |smooth - exact| bound: sum of tau*ln(n) over min/max nodes."""
    if isinstance(formula, Pred):
        return 0.0
    if isinstance(formula, Not):
        return smoothing_error_bound(formula.child, temperature, dt, in_seconds)
    if isinstance(formula, (And, Or)):
        return temperature * math.log(len(formula.children)) + max(
            smoothing_error_bound(c, temperature, dt, in_seconds) for c in formula.children
        )
    if isinstance(formula, Implies):
        return smoothing_error_bound(
            Or((Not(formula.lhs), formula.rhs)), temperature, dt, in_seconds
        )
    if isinstance(formula, (Eventually, Globally)):
        a, b = resolve_interval(formula.lo, formula.hi, dt, in_seconds)
        return temperature * math.log(b - a + 1) + smoothing_error_bound(
            formula.child, temperature, dt, in_seconds
        )
    raise TypeError(formula)
