"""Closed-form scalar expressions in chart coordinates, evaluated as jets.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative, '**' accepted
    atom    := number | name | name '(' expr ')' | '(' expr ')'

Names are the coordinates ``x1..xn``, the radius ``r``, ``pi``, caller-bound
parameters, and the functions in :data:`FUNCTIONS`.  In a Cartesian chart ``r``
expands to ``sqrt(x1^2 + ... + xn^2)``; in a polar chart it is ``x1``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import (
    ArityMismatch,
    DimensionExceeded,
    ExprSyntaxError,
    SingularEvaluation,
    UnknownIdentifier,
)

FUNCTIONS = {
    "sin": jets.sin,
    "cos": jets.cos,
    "tan": jets.tan,
    "exp": jets.exp,
    "log": jets.log,
    "sqrt": jets.sqrt,
    "sinh": jets.sinh,
    "cosh": jets.cosh,
    "tanh": jets.tanh,
    "atan": jets.atan,
}


class Node:
    """Base of the expression tree; subclasses are frozen dataclasses."""

    def eval(self, X):
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Node):
    value: float

    def eval(self, X):
        return jets.constant(X.space, np.full(X.shape[1:], self.value))

    def text(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Param(Node):
    name: str
    value: float

    def eval(self, X):
        return jets.constant(X.space, np.full(X.shape[1:], self.value))

    def text(self):
        return self.name


@dataclass(frozen=True)
class Var(Node):
    index: int  # 1-based

    def eval(self, X):
        return X[self.index - 1]

    def text(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Neg(Node):
    operand: Node

    def eval(self, X):
        return -self.operand.eval(X)

    def text(self):
        return f"-({self.operand.text()})"


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def eval(self, X):
        a = self.left.eval(X)
        if self.op == "^":
            return _power(a, self.right, X, self)
        b = self.right.eval(X)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        try:
            return a / b
        except SingularEvaluation as err:
            raise SingularEvaluation(self.text(), err.why) from None

    def text(self):
        return f"({self.left.text()}){self.op}({self.right.text()})"


@dataclass(frozen=True)
class Call(Node):
    name: str
    arg: Node

    def eval(self, X):
        u = self.arg.eval(X)
        try:
            return FUNCTIONS[self.name](u)
        except SingularEvaluation as err:
            raise SingularEvaluation(self.text(), err.why) from None

    def text(self):
        return f"{self.name}({self.arg.text()})"


def _is_constant(node):
    if isinstance(node, (Const, Param)):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, Neg):
        return _is_constant(node.operand)
    if isinstance(node, BinOp):
        return _is_constant(node.left) and _is_constant(node.right)
    if isinstance(node, Call):
        return _is_constant(node.arg)
    return False


def _constant_value(node):
    if isinstance(node, (Const, Param)):
        return node.value
    if isinstance(node, Neg):
        return -_constant_value(node.operand)
    if isinstance(node, Call):
        return float(getattr(np, node.name if node.name != "atan" else "arctan")(_constant_value(node.arg)))
    a, b = _constant_value(node.left), _constant_value(node.right)
    return {"+": a + b, "-": a - b, "*": a * b, "/": a / b, "^": a**b}[node.op]


def _power(base, exponent, X, node):
    try:
        if _is_constant(exponent):
            return jets.power(base, _constant_value(exponent))
        return jets.exp(exponent.eval(X) * jets.log(base))
    except SingularEvaluation as err:
        raise SingularEvaluation(node.text(), err.why) from None


@dataclass(frozen=True)
class Expression:
    """Parsed expression bound to a dimension; call :meth:`evaluate` on coordinate jets."""

    ast: Node
    dimension: int
    source: str = ""

    def evaluate(self, X):
        """Evaluate at coordinate jets ``X`` of shape ``(n, *batch)``; returns a jet of shape ``batch``."""
        return self.ast.eval(X)

    def text(self):
        return to_text(self)

    def __str__(self):
        return self.source or self.text()


def to_text(expr):
    """Fully parenthesized text that parses back to the same tree."""
    node = expr.ast if isinstance(expr, Expression) else expr
    return node.text()


# --- tokenizer / parser -------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            offset = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[offset]!r}", offset)
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        if value == "**":
            value = "^"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, dimension, params, chart):
        self.text = text
        self.n = dimension
        self.params = params
        self.chart = chart
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, pos = self.take()
        if v != value or kind == "end":
            found = "end of input" if kind == "end" else repr(v)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {v!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, v, pos = self.take()
        if kind == "num":
            return Const(float(v))
        if kind == "op" and v == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(v, pos)
            return self.name(v, pos)
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected token {v!r}", pos)

    def call(self, name, pos):
        if name not in FUNCTIONS:
            raise UnknownIdentifier(f"unknown function {name!r}", pos)
        self.take()  # '('
        if self.peek()[1] == ")" and self.peek()[0] == "op":
            raise ArityMismatch(f"{name} takes exactly one argument, got 0", pos)
        arg = self.expr()
        count = 1
        while self.peek()[1] == "," and self.peek()[0] == "op":
            self.take()
            self.expr()
            count += 1
        if count != 1:
            raise ArityMismatch(f"{name} takes exactly one argument, got {count}", pos)
        self.expect(")")
        return Call(name, arg)

    def name(self, v, pos):
        m = re.fullmatch(r"x(\d+)", v)
        if m:
            idx = int(m.group(1))
            if idx < 1:
                raise UnknownIdentifier(f"coordinate index must start at 1: {v!r}", pos)
            if idx > self.n:
                raise DimensionExceeded(f"{v} exceeds dimension {self.n}", pos)
            return Var(idx)
        if v == "r":
            if self.chart == "polar":
                return Var(1)
            total = BinOp("^", Var(1), Const(2.0))
            for i in range(2, self.n + 1):
                total = BinOp("+", total, BinOp("^", Var(i), Const(2.0)))
            return Call("sqrt", total)
        if v in self.params:
            return Param(v, float(self.params[v]))
        if v == "pi":
            return Const(math.pi)
        if v in FUNCTIONS:
            raise ArityMismatch(f"function {v!r} used without an argument", pos)
        raise UnknownIdentifier(f"unknown identifier {v!r}", pos)


def parse(text, dimension, params=None, chart="cartesian"):
    """Parse ``text`` into an :class:`Expression` over ``x1..x{dimension}``.

    ``params`` binds extra names (e.g. ``{"m": 1.0}``); ``chart`` decides the
    meaning of ``r``.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    if chart not in ("cartesian", "polar"):
        raise ValueError(f"unknown chart {chart!r}")
    ast = _Parser(text, dimension, dict(params or {}), chart).parse()
    return Expression(ast, dimension, text)


def eval_jet(expr, point, order=3):
    """Jet of ``expr`` at ``point`` (shape ``(n,)`` or ``(N, n)``) up to ``order``."""
    point = np.asarray(point, dtype=float)
    if point.shape[-1] != expr.dimension:
        raise ValueError(f"point has {point.shape[-1]} coordinates, expression expects {expr.dimension}")
    return expr.evaluate(jets.seed(point, order))
