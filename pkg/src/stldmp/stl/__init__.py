from .ast import (
    AbsExpr,
    And,
    ChannelExpr,
    Eventually,
    Formula,
    Globally,
    Implies,
    Norm2Expr,
    Not,
    Or,
    Pred,
    StlError,
    formula_channels,
    pretty,
)
from .parser import StlSyntaxError, parse
from .semantics import (
    boolean_satisfies,
    horizon,
    robustness,
    smooth_robustness,
    smooth_robustness_with_grad,
    smoothing_error_bound,
)

__all__ = [
    "AbsExpr",
    "And",
    "ChannelExpr",
    "Eventually",
    "Formula",
    "Globally",
    "Implies",
    "Norm2Expr",
    "Not",
    "Or",
    "Pred",
    "StlError",
    "StlSyntaxError",
    "boolean_satisfies",
    "formula_channels",
    "horizon",
    "parse",
    "pretty",
    "robustness",
    "smooth_robustness",
    "smooth_robustness_with_grad",
    "smoothing_error_bound",
]
