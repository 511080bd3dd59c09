"""Parser and evaluator for nonlinearities ``f(s, x)`` given as text.

Grammar, loosest binding first::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | 's' | 'x' | 'pi' | NAME '(' args ')' | '(' expr ')'

so ``-x^2`` is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.  Evaluation works on
floats or numpy arrays; domain violations raise instead of producing
``inf`` or ``nan``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfracError, EvaluationError

VARIABLES = ("s", "x")
CONSTANTS = {"pi": math.pi}
FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1, "abs": 1, "pow": 2}


class ParseError(ConfracError, ValueError):
    """Malformed expression text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    raw = text.encode()
    tokens = []
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:]
            if rest.strip() == "":
                break
            col = pos + (len(rest) - len(rest.lstrip()))
            raise ParseError(f"unexpected character {text[col]!r}", len(text[:col].encode()))
        kind = m.lastgroup
        start = len(text[:m.start(kind)].encode())
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        kind, value, offset = self.advance()
        if value != op or kind != "op":
            found = "end of input" if kind == "end" else repr(value)
            raise ParseError(f"expected {op!r}, found {found}", offset)

    def parse(self) -> Expr:
        node = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {value!r}", offset)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, value, offset = self.advance()
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value in VARIABLES:
                return Var(value)
            if value in CONSTANTS:
                return Const(value)
            if value in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.advance()
                    args.append(self.expr())
                close = self.peek()[2]
                self.expect(")")
                if len(args) != FUNCTIONS[value]:
                    raise ParseError(
                        f"{value} takes {FUNCTIONS[value]} argument(s), got {len(args)}", close)
                return Call(value, tuple(args))
            raise ParseError(f"unknown identifier {value!r}", offset)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"unexpected {found}", offset)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree over ``s`` and ``x``."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


def to_text(e: Expr) -> str:
    """Render ``e`` so that ``parse(to_text(e)) == e``."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    return f"{e.name}({', '.join(to_text(a) for a in e.args)})"


def _fail(message, mask, s, x):
    i = int(np.argmax(np.broadcast_to(mask, np.broadcast(s, x).shape)))
    sb, xb = np.broadcast_arrays(s, x)
    point = (float(sb.flat[i]), float(xb.flat[i]))
    raise EvaluationError(f"{message} at (s, x) = {point}", point)


def _eval(e: Expr, s, x):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return s if e.name == "s" else x
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Neg):
        return -_eval(e.operand, s, x)
    if isinstance(e, BinOp):
        a = _eval(e.left, s, x)
        b = _eval(e.right, s, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            zero = np.asarray(b) == 0
            if zero.any():
                _fail("division by zero", zero, s, x)
            return np.divide(a, b)
        return _power(a, b, s, x)
    args = [_eval(a, s, x) for a in e.args]
    name = e.name
    if name == "log":
        bad = np.asarray(args[0]) <= 0
        if bad.any():
            _fail("log of a nonpositive number", bad, s, x)
        return np.log(args[0])
    if name == "sqrt":
        bad = np.asarray(args[0]) < 0
        if bad.any():
            _fail("sqrt of a negative number", bad, s, x)
        return np.sqrt(args[0])
    if name == "pow":
        return _power(args[0], args[1], s, x)
    return {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}[name](args[0])


def _power(a, b, s, x):
    a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    bad = (a_arr < 0) & (b_arr != np.round(b_arr))
    if bad.any():
        _fail("negative base with non-integer exponent", bad, s, x)
    bad = (a_arr == 0) & (b_arr < 0)
    if bad.any():
        _fail("zero raised to a negative power", bad, s, x)
    return np.power(a_arr, b_arr)


def evaluate(e: Expr, s, x):
    """Evaluate ``e`` at ``(s, x)``; scalars give a float, arrays broadcast.

    Raises :class:`EvaluationError` on domain errors and on any non-finite
    result (overflow included).
    """
    s_arr = np.asarray(s, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        value = np.asarray(_eval(e, s_arr, x_arr), dtype=float)
    value = np.broadcast_to(value, np.broadcast(s_arr, x_arr).shape)
    bad = ~np.isfinite(value)
    if bad.any():
        _fail("non-finite value", bad, s_arr, x_arr)
    if value.ndim == 0:
        return float(value)
    return np.array(value)


# alias; shadows the builtin only as a module attribute
eval = evaluate  # noqa: A001
