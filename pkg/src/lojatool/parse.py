"""Text grammar for polynomials.

Terms are joined by ``+``/``-``; a term is a ``*``-separated product of
numbers, variables ``x<k>`` (k >= 1) and parenthesized groups, each
optionally raised to a nonnegative integer power with ``^``::

    x1^2*x2 + 3*x2^4 - 0.5*x1
    (x1 + x2^2)^2

Whitespace is ignored.  The dimension is the largest variable index unless
given explicitly.
"""

from __future__ import annotations

import re

from .poly import PRUNE_TOL, Poly

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_VAR = re.compile(r"x(\d+)")


class PolySyntaxError(ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text
        self.reason = message


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*^()":
            tokens.append((ch, ch, i))
            i += 1
            continue
        m = _VAR.match(text, i)
        if m:
            tokens.append(("var", int(m.group(1)), i))
            i = m.end()
            continue
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(("num", m.group(0), i))
            i = m.end()
            continue
        raise PolySyntaxError(f"unexpected character {ch!r}", i, text)
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int, prune: float):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.dim = dim
        self.prune = prune

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise PolySyntaxError(message, tok[2], self.text)

    def parse(self) -> Poly:
        if self.peek()[0] == "end":
            self.error("empty polynomial")
        p = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return p

    def expr(self) -> Poly:
        sign = 1.0
        while self.peek()[0] in "+-":
            if self.take()[0] == "-":
                sign = -sign
        p = self.term() * sign
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            sign = 1.0 if op == "+" else -1.0
            while self.peek()[0] in "+-":
                if self.take()[0] == "-":
                    sign = -sign
            p = p + self.term() * sign
        return p

    def term(self) -> Poly:
        p = self.power()
        while self.peek()[0] == "*":
            self.take()
            p = p * self.power()
        return p

    def power(self) -> Poly:
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            tok = self.peek()
            if tok[0] == "-":
                self.error("negative exponent")
            if tok[0] != "num" or not tok[1].isdigit():
                self.error("expected a nonnegative integer exponent")
            self.take()
            base = base ** int(tok[1])
            if self.peek()[0] == "^":
                self.error("chained exponent")
        return base

    def atom(self) -> Poly:
        tok = self.peek()
        kind = tok[0]
        if kind == "num":
            self.take()
            return Poly.constant(self.dim, float(tok[1]), prune=self.prune)
        if kind == "var":
            self.take()
            if tok[1] < 1:
                self.error("variable index must be >= 1", tok)
            return Poly.variable(tok[1] - 1, self.dim, prune=self.prune)
        if kind == "(":
            self.take()
            p = self.expr()
            if self.peek()[0] != ")":
                self.error("expected ')'")
            self.take()
            return p
        if kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {tok[1]!r}")


def parse_poly(text: str, dim: int | None = None, *, prune: float = PRUNE_TOL) -> Poly:
    """Parse ``text``; ``dim`` defaults to the largest variable index (min 1)."""
    tokens = _tokenize(text)
    indices = [tok[1] for tok in tokens if tok[0] == "var"]
    for tok in tokens:
        if tok[0] == "var" and tok[1] < 1:
            raise PolySyntaxError("variable index must be >= 1", tok[2], text)
    inferred = max(indices, default=1)
    if dim is None:
        dim = inferred
    elif dim < inferred:
        raise PolySyntaxError(f"variable x{inferred} exceeds dimension {dim}", 0, text)
    return _Parser(text, dim, prune).parse()
