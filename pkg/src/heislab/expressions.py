"""Small arithmetic-expression parser for defining functions.

Grammar (highest binding first): integer powers, unary minus, * and /,
then + and -.  All binary operators associate left except ^.  Variables are
named x1..x{2n+1}.  Evaluation is vectorized over numpy arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


Expr = Const | Var | Neg | BinOp | Pow

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)|(?P<var>x\d+)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            if src[pos:].strip() == "":
                break
            raise ExprSyntaxError(f"unexpected character {src[pos:].strip()[0]!r}", pos)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("var") is not None:
            tokens.append(("var", m.group("var"), m.start("var")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, n: int):
        self.src = src
        self.n = n
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected {op!r}", pos)
        self.advance()

    def parse(self) -> Expr:
        e = self.sum_expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
        return e

    def sum_expr(self) -> Expr:
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                e = BinOp(val, e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                e = BinOp(val, e, self.unary())
            else:
                return e

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        """Nonnegative integer literal; right-associated chains collapse."""
        kind, val, pos = self.peek()
        if kind != "num":
            raise ExprSyntaxError("exponent must be an integer literal", pos)
        if not re.fullmatch(r"\d+", val):
            raise ExprSyntaxError("exponent must be a nonnegative integer", pos)
        self.advance()
        exp = int(val)
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            exp = exp ** self.exponent()
        return exp

    def atom(self) -> Expr:
        kind, val, pos = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "var":
            idx = int(val[1:])
            if not 1 <= idx <= 2 * self.n + 1:
                raise ExprSyntaxError(
                    f"variable {val} out of range for dimension n={self.n}", pos
                )
            return Var(idx)
        if kind == "op" and val == "(":
            e = self.sum_expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(f"expected a value, got {val!r}", pos)


def parse(src: str, n: int) -> Expr:
    return _Parser(src, n).parse()


def evaluate(expr: Expr, p: np.ndarray) -> np.ndarray:
    """Evaluate on a point or batch of points (last axis = coordinates)."""
    p = np.asarray(p, dtype=float)
    if isinstance(expr, Const):
        return np.broadcast_to(np.float64(expr.value), p.shape[:-1]).copy()
    if isinstance(expr, Var):
        return p[..., expr.index - 1].copy()
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, p)
    if isinstance(expr, Pow):
        return evaluate(expr.base, p) ** expr.exponent
    if isinstance(expr, BinOp):
        a = evaluate(expr.left, p)
        b = evaluate(expr.right, p)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if np.any(b == 0):
            raise ZeroDivisionError(f"division by zero in {to_string(expr)!r}")
        return a / b
    raise TypeError(f"not an expression node: {expr!r}")


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_string(expr: Expr) -> str:
    """Canonical text form; parses back to the same tree."""

    def render(e: Expr, parent_prec: int) -> str:
        if isinstance(e, Const):
            s = repr(e.value)
            return s[:-2] if s.endswith(".0") else s
        if isinstance(e, Var):
            return f"x{e.index}"
        if isinstance(e, Neg):
            s = f"-{render(e.operand, _PRECEDENCE['neg'])}"
            return f"({s})" if parent_prec > _PRECEDENCE["neg"] else s
        if isinstance(e, Pow):
            return f"{render(e.base, _PRECEDENCE['^'] + 1)}^{e.exponent}"
        prec = _PRECEDENCE[e.op]
        s = f"{render(e.left, prec)} {e.op} {render(e.right, prec + 1)}"
        return f"({s})" if parent_prec > prec else s

    return render(expr, 0)
