"""A small expression language for chart functions, evaluated as jets.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Exponents must fold to integer constants.  Constant subtrees are folded
with exact rational arithmetic before evaluation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .numerics import Jet, JetError, atan2, seed_jets

__all__ = ["DSLError", "Expr", "Num", "Var", "Const", "Neg", "BinOp", "Call", "parse", "evaluate",
           "to_source", "compile_scalar"]

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "sqrt": 1, "log": 1, "atan2": 2}
CONSTANTS = {"pi": math.pi}


class DSLError(ValueError):
    """Syntax or evaluation error with a 1-based source position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        where = f" at line {line}, column {column}" if line else ""
        super().__init__(f"{message}{where}")


class Expr:
    def __str__(self) -> str:
        return to_source(self)


@dataclass(frozen=True)
class Num(Expr):
    value: Fraction
    text: str


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))")


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(src):
        ch = src[pos]
        if ch == "\n":
            line += 1
            pos += 1
            line_start = pos
            continue
        if ch.isspace():
            pos += 1
            continue
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise DSLError(f"unexpected character {ch!r}", line, pos - line_start + 1)
        start = m.start(m.lastgroup)
        toks.append(_Tok(m.lastgroup, m.group(m.lastgroup), line, start - line_start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, src: str, names: frozenset | None):
        self.toks = _tokenize(src)
        self.i = 0
        self.names = names

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise DSLError(msg, tok.line, tok.col)

    def expect(self, text: str):
        t = self.peek()
        if t.text != text:
            self.fail(f"expected {text!r} but found {t.text or 'end of input'!r}")
        return self.take()

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek().kind != "end":
            self.fail(f"unexpected {self.peek().text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek().text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().text == "^":
            tok = self.take()
            exp = self.unary()
            val = _fold(exp)
            if not isinstance(val, Fraction) or val.denominator != 1:
                self.fail("exponent must be an integer constant", tok)
            return BinOp("^", base, exp)
        return base

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "num":
            self.take()
            return Num(Fraction(t.text), t.text)
        if t.kind == "name":
            self.take()
            if self.peek().text == "(":
                if t.text not in FUNCTIONS:
                    self.fail(f"unknown function {t.text!r}", t)
                self.take()
                args = [self.expr()]
                while self.peek().text == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[t.text]:
                    self.fail(f"{t.text} takes {FUNCTIONS[t.text]} argument(s)", t)
                return Call(t.text, tuple(args))
            if t.text in CONSTANTS:
                return Const(t.text)
            if t.text in FUNCTIONS:
                self.fail(f"function {t.text!r} needs arguments", t)
            if self.names is not None and t.text not in self.names:
                self.fail(f"unbound identifier {t.text!r}", t)
            return Var(t.text)
        if t.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        self.fail(f"unexpected {t.text or 'end of input'!r}")


def _fold(e: Expr):
    """Exact rational value of a constant subtree, or None."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        v = _fold(e.arg)
        return None if v is None else -v
    if isinstance(e, BinOp):
        a, b = _fold(e.left), _fold(e.right)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return None if b == 0 else a / b
        if e.op == "^":
            if b.denominator != 1 or (a == 0 and b < 0):
                return None
            return a ** int(b)
    return None


def parse(src: str, names: Sequence[str] | None = None) -> Expr:
    """Parse source text; if ``names`` is given, identifiers must be among them."""
    return _Parser(src, None if names is None else frozenset(names) | set(CONSTANTS)).parse()


def to_source(e: Expr) -> str:
    """Fully parenthesised source; parsing it gives back the same tree."""
    if isinstance(e, Num):
        return e.text
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}(" + ", ".join(to_source(a) for a in e.args) + ")"
    raise TypeError(e)


def free_names(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_names(e.arg)
    if isinstance(e, BinOp):
        return free_names(e.left) | free_names(e.right)
    if isinstance(e, Call):
        return set().union(*(free_names(a) for a in e.args))
    return set()


def _eval(e: Expr, env: Mapping[str, Jet], like: Jet):
    c = _fold(e)
    if c is not None:
        return float(c)
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        if e.name not in env:
            raise DSLError(f"unbound identifier {e.name!r}")
        return env[e.name]
    if isinstance(e, Neg):
        return -_eval(e.arg, env, like)
    try:
        if isinstance(e, BinOp):
            a = _eval(e.left, env, like)
            if e.op == "^":
                n = int(_fold(e.right))
                if not isinstance(a, Jet):
                    return float(a) ** n
                return a ** n
            b = _eval(e.right, env, like)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if not isinstance(b, Jet) and b == 0:
                raise JetError("division by zero value")
            return a / b
        if isinstance(e, Call):
            args = [_eval(a, env, like) for a in e.args]
            args = [a if isinstance(a, Jet) else Jet.constant(np.full(like.parts[0].shape, a), like.dim, like.order, like.nb)
                    for a in args]
            if e.name == "atan2":
                return atan2(args[0], args[1])
            return getattr(args[0], e.name)()
    except JetError as exc:
        raise DSLError(f"{exc} in {to_source(e)}") from exc
    raise TypeError(e)


def evaluate(e: Expr, point, order: int = 0, coords: Sequence[str] | None = None,
             params: Mapping[str, float] | None = None) -> Jet:
    """Evaluate an expression as a jet at a point (or a batch of points).

    Coordinates default to ``x1, x2, ...``.
    """
    p = np.asarray(point, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    dim = p.shape[-1]
    coords = list(coords) if coords is not None else [f"x{i + 1}" for i in range(dim)]
    if len(coords) != dim:
        raise DSLError("coordinate names do not match point dimension")
    seeds = seed_jets(p, order)
    env = {name: seeds[i] for i, name in enumerate(coords)}
    like = seeds[0]
    for k, v in (params or {}).items():
        env[k] = Jet.constant(np.full(like.parts[0].shape, float(v)), dim, order, like.nb)
    out = _eval(e, env, like)
    if not isinstance(out, Jet):
        out = Jet.constant(np.full(like.parts[0].shape, out), dim, order, like.nb)
    return out


def compile_scalar(src: str, coords: Sequence[str], params: Mapping[str, float] | None = None):
    """Parse once and return a field callable ``f(points, order) -> Jet``."""
    names = list(coords) + list(params or {})
    e = parse(src, names)

    def field(points, order=0):
        return evaluate(e, points, order, coords, params)

    field.expr = e
    return field
