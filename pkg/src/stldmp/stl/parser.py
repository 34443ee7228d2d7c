"""Recursive-descent parser for the textual STL grammar.

Grammar (tightest binding last)::

    formula  := or ('->' formula)?          # right-associative implication
    or       := and ('|' and)*
    and      := unary ('&' unary)*
    unary    := '!' unary | 'G' interval '(' formula ')'
              | 'F' interval '(' formula ')' | '(' formula ')' | pred
    interval := '[' number ',' number ']'
    pred     := expr ('<'|'>') number
    expr     := ident ('.' ident)? | 'norm2' '(' ident '-' point ')'
              | 'abs' '(' expr ')'
    point    := '[' number ',' number ',' number ']' | ident

Named points are resolved against a scenario symbol table at parse
time; unknown channel names are deferred to evaluation.
"""

from __future__ import annotations

import re

import numpy as np

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


class StlSyntaxError(StlError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<sym>[()\[\],<>!&|.\-])
  | (?P<ws>\s+)
""",
    re.VERBOSE,
)


class _Token:
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind, text, line, column):
        self.kind = kind
        self.text = text
        self.line = line
        self.column = column


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise StlSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], symbols: dict[str, np.ndarray]):
        self.tokens = tokens
        self.i = 0
        self.symbols = symbols

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise StlSyntaxError(
                f"expected {text!r}, found {tok.text or 'end of input'!r}",
                tok.line,
                tok.column,
            )
        return tok

    def fail(self, message: str) -> StlSyntaxError:
        tok = self.peek()
        return StlSyntaxError(message, tok.line, tok.column)

    # formula := or ('->' formula)?
    def formula(self) -> Formula:
        lhs = self.or_()
        if self.peek().kind == "arrow":
            self.next()
            return Implies(lhs, self.formula())
        return lhs

    def or_(self) -> Formula:
        parts = [self.and_()]
        while self.peek().text == "|":
            self.next()
            parts.append(self.and_())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def and_(self) -> Formula:
        parts = [self.unary()]
        while self.peek().text == "&":
            self.next()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.text == "!":
            self.next()
            return Not(self.unary())
        if tok.text in ("G", "F") and self.peek(1).text == "[":
            self.next()
            lo, hi = self.interval()
            self.expect("(")
            inner = self.formula()
            self.expect(")")
            return Globally(lo, hi, inner) if tok.text == "G" else Eventually(lo, hi, inner)
        if tok.text == "(":
            self.next()
            inner = self.formula()
            self.expect(")")
            return inner
        return self.pred()

    def interval(self) -> tuple[float, float]:
        open_tok = self.expect("[")
        lo = self.number()
        self.expect(",")
        hi = self.number()
        self.expect("]")
        if lo < 0 or lo > hi:
            raise StlSyntaxError(
                f"interval [{lo},{hi}] must satisfy 0 <= a <= b",
                open_tok.line,
                open_tok.column,
            )
        return lo, hi

    def pred(self) -> Pred:
        expr = self.expr()
        op_tok = self.next()
        if op_tok.text not in ("<", ">"):
            raise StlSyntaxError(
                f"expected comparator < or >, found {op_tok.text or 'end of input'!r}",
                op_tok.line,
                op_tok.column,
            )
        return Pred(expr, op_tok.text, self.number())

    def expr(self) -> Expr:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.fail(f"expected expression, found {tok.text or 'end of input'!r}")
        if tok.text == "norm2" and self.peek(1).text == "(":
            self.next()
            self.next()
            base_tok = self.next()
            if base_tok.kind != "ident":
                raise StlSyntaxError(
                    "norm2 expects a channel group name", base_tok.line, base_tok.column
                )
            self.expect("-")
            point, name = self.point()
            self.expect(")")
            return Norm2Expr(base_tok.text, point, name)
        if tok.text == "abs" and self.peek(1).text == "(":
            self.next()
            self.next()
            inner = self.expr()
            self.expect(")")
            return AbsExpr(inner)
        self.next()
        name = tok.text
        if self.peek().text == ".":
            self.next()
            field = self.next()
            if field.kind != "ident":
                raise StlSyntaxError(
                    "expected channel field after '.'", field.line, field.column
                )
            name = f"{name}.{field.text}"
        return ChannelExpr(name)

    def point(self) -> tuple[tuple[float, float, float], str | None]:
        tok = self.peek()
        if tok.text == "[":
            self.next()
            coords = [self.number()]
            for _ in range(2):
                self.expect(",")
                coords.append(self.number())
            self.expect("]")
            return (coords[0], coords[1], coords[2]), None
        if tok.kind == "ident":
            self.next()
            if tok.text not in self.symbols:
                raise StlSyntaxError(
                    f"unknown point symbol {tok.text!r}", tok.line, tok.column
                )
            p = np.asarray(self.symbols[tok.text], dtype=float)
            if p.shape != (3,):
                raise StlSyntaxError(
                    f"point symbol {tok.text!r} must be a 3-vector", tok.line, tok.column
                )
            return (float(p[0]), float(p[1]), float(p[2])), tok.text
        raise self.fail("expected point literal or symbol")

    def number(self) -> float:
        sign = 1.0
        tok = self.next()
        if tok.text == "-":
            sign = -1.0
            tok = self.next()
        if tok.kind != "number":
            raise StlSyntaxError(
                f"expected number, found {tok.text or 'end of input'!r}",
                tok.line,
                tok.column,
            )
        return sign * float(tok.text)


def parse(text: str, symbols: dict[str, np.ndarray] | None = None) -> Formula:
    """Parse STL text into a formula AST.

    ``symbols`` maps named points (obstacle, via, goal ...) to 3-vectors;
    named points are substituted during parsing.
    """
    parser = _Parser(_tokenize(text), symbols or {})
    formula = parser.formula()
    tail = parser.peek()
    if tail.kind != "eof":
        raise StlSyntaxError(
            f"unexpected trailing input {tail.text!r}", tail.line, tail.column
        )
    return formula
