"""Expression language for coordinate-dependent metric data.

Grammar (precedence low to high; every binary operator is left-associative):

    sum      := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ('^' exponent)*
    exponent := '-' exponent | atom
    atom     := NUMBER | IDENT | IDENT '(' sum ')' | '(' sum ')'

Identifiers are coordinates ``x1..xd`` (1-based), named constants bound to
numbers at parse time, or the functions exp, log, sin, cos, sqrt.

Expression trees are immutable; evaluation is pure and accepts any scalar
type implementing the arithmetic operators (floats, dual numbers with
exp/log/sin/cos/sqrt methods), so the same tree serves plain evaluation and
forward-mode differentiation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")


class ExprSyntaxError(ValueError):
    """Malformed expression text; carries the character offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class DomainError(ArithmeticError):
    """Evaluation left the real domain; carries the offending subexpression."""

    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message} in '{subexpr}'")
        self.subexpr = subexpr


def _real(v):
    # dual numbers expose their real part as .value; plain floats pass through
    return getattr(v, "value", v)


def _call_fn(name: str, v):
    method = getattr(v, name, None)
    if callable(method):
        return method()
    return getattr(math, name)(v)


@dataclass(frozen=True)
class Expr:
    """Base node.  Subclasses implement eval, diff and text rendering."""

    precedence = 9

    def eval(self, x: Sequence):
        raise NotImplementedError

    def diff(self, var: int) -> "Expr":
        raise NotImplementedError

    def __str__(self) -> str:
        raise NotImplementedError

    def _wrap(self, child: "Expr") -> str:
        return f"({child})" if child.precedence < self.precedence else str(child)


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def eval(self, x):
        return self.value

    def diff(self, var):
        return Num(0.0)

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Coord(Expr):
    index: int  # 0-based; rendered 1-based as x1..xd

    def eval(self, x):
        if self.index >= len(x):
            raise DomainError(f"point has dimension {len(x)}", self)
        return x[self.index]

    def diff(self, var):
        return Num(1.0 if var == self.index else 0.0)

    def __str__(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    precedence = 4

    def eval(self, x):
        return -self.arg.eval(x)

    def diff(self, var):
        return _neg(self.arg.diff(var))

    def __str__(self):
        return f"-{self._wrap(self.arg)}"


@dataclass(frozen=True)
class Add(Expr):
    lhs: Expr
    rhs: Expr
    precedence = 1

    def eval(self, x):
        return self.lhs.eval(x) + self.rhs.eval(x)

    def diff(self, var):
        return _add(self.lhs.diff(var), self.rhs.diff(var))

    def __str__(self):
        return f"{self._wrap(self.lhs)} + {self._wrap(self.rhs)}"


@dataclass(frozen=True)
class Sub(Expr):
    lhs: Expr
    rhs: Expr
    precedence = 1

    def eval(self, x):
        return self.lhs.eval(x) - self.rhs.eval(x)

    def diff(self, var):
        return _sub(self.lhs.diff(var), self.rhs.diff(var))

    def __str__(self):
        rhs = self.rhs
        # right operand of '-' needs parens at equal precedence: a - (b + c)
        rtxt = f"({rhs})" if rhs.precedence <= self.precedence else str(rhs)
        return f"{self._wrap(self.lhs)} - {rtxt}"


@dataclass(frozen=True)
class Mul(Expr):
    lhs: Expr
    rhs: Expr
    precedence = 2

    def eval(self, x):
        return self.lhs.eval(x) * self.rhs.eval(x)

    def diff(self, var):
        return _add(
            _mul(self.lhs.diff(var), self.rhs),
            _mul(self.lhs, self.rhs.diff(var)),
        )

    def __str__(self):
        return f"{self._wrap(self.lhs)}*{self._wrap(self.rhs)}"


@dataclass(frozen=True)
class Div(Expr):
    lhs: Expr
    rhs: Expr
    precedence = 2

    def eval(self, x):
        den = self.rhs.eval(x)
        if _real(den) == 0.0:
            raise DomainError("division by zero", self)
        return self.lhs.eval(x) / den

    def diff(self, var):
        # (u/v)' = (u'v - uv') / v^2
        num = _sub(_mul(self.lhs.diff(var), self.rhs), _mul(self.lhs, self.rhs.diff(var)))
        return _div(num, _pow(self.rhs, Num(2.0)))

    def __str__(self):
        rhs = self.rhs
        rtxt = f"({rhs})" if rhs.precedence <= self.precedence else str(rhs)
        return f"{self._wrap(self.lhs)}/{rtxt}"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Expr
    precedence = 5

    def eval(self, x):
        b = self.base.eval(x)
        e = self.exponent.eval(x)
        bv = _real(b)
        if isinstance(e, (int, float)):
            if float(e).is_integer():
                n = int(e)
                if bv == 0.0 and n < 0:
                    raise DomainError("zero base with negative exponent", self)
                return b ** n
            if bv < 0.0:
                raise DomainError("negative base with non-integer exponent", self)
            if bv == 0.0 and e < 0.0:
                raise DomainError("zero base with negative exponent", self)
            try:
                return b ** e
            except (ValueError, ZeroDivisionError) as err:
                raise DomainError(str(err), self) from err
        # exponent carries derivative information: needs log of the base
        if bv <= 0.0:
            raise DomainError("non-positive base with variable exponent", self)
        return b ** e

    def diff(self, var):
        base, exp = self.base, self.exponent
        if isinstance(exp, Num):
            # power rule: c * u^(c-1) * u'
            return _mul(
                _mul(Num(exp.value), _pow(base, Num(exp.value - 1.0))),
                base.diff(var),
            )
        # u^v * (v' log u + v u'/u)
        return _mul(
            self,
            _add(
                _mul(exp.diff(var), Fn("log", base)),
                _div(_mul(exp, base.diff(var)), base),
            ),
        )

    def __str__(self):
        # '^' chains render with explicit parens on the right operand
        ltxt = f"({self.base})" if self.base.precedence <= self.precedence else str(self.base)
        rtxt = f"({self.exponent})" if self.exponent.precedence <= self.precedence else str(self.exponent)
        return f"{ltxt}^{rtxt}"


@dataclass(frozen=True)
class Fn(Expr):
    name: str
    arg: Expr

    def eval(self, x):
        v = self.arg.eval(x)
        rv = _real(v)
        if self.name == "log" and rv <= 0.0:
            raise DomainError("log of non-positive value", self)
        if self.name == "sqrt" and rv < 0.0:
            raise DomainError("sqrt of negative value", self)
        try:
            return _call_fn(self.name, v)
        except (ValueError, ZeroDivisionError) as err:
            raise DomainError(str(err), self) from err

    def diff(self, var):
        u, du = self.arg, self.arg.diff(var)
        if self.name == "exp":
            outer = Fn("exp", u)
        elif self.name == "log":
            return _div(du, u)
        elif self.name == "sin":
            outer = Fn("cos", u)
        elif self.name == "cos":
            outer = _neg(Fn("sin", u))
        elif self.name == "sqrt":
            return _div(du, _mul(Num(2.0), Fn("sqrt", u)))
        else:  # unreachable: parser only admits FUNCTIONS
            raise ValueError(f"unknown function {self.name}")
        return _mul(outer, du)

    def __str__(self):
        return f"{self.name}({self.arg})"


# -- construction-time folding keeps derivative trees readable; this is not a
#    simplifier, just zero/one elimination at build time.

def _is_num(e: Expr, v: float) -> bool:
    return isinstance(e, Num) and e.value == v


def _add(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is_num(a, 0.0):
        return _neg(b)
    return Sub(a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Mul(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return Num(0.0)
    if _is_num(b, 1.0):
        return a
    return Div(a, b)


def _pow(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 1.0):
        return a
    if _is_num(b, 0.0):
        return Num(1.0)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value ** b.value)
    return Pow(a, b)


# -- tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

_COORD = re.compile(r"x([1-9][0-9]*)$")


class _Parser:
    def __init__(self, text: str, constants: Mapping[str, float]):
        self.text = text
        self.constants = constants
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str | None:
        self._skip_ws()
        if self.pos >= len(self.text):
            return None
        return self.text[self.pos]

    def take(self) -> tuple[str, str, int]:
        """Return (kind, text, offset) of the next token."""
        self._skip_ws()
        start = self.pos
        if start >= len(self.text):
            return ("end", "", start)
        m = _TOKEN.match(self.text, start)
        if not m:
            raise ExprSyntaxError(f"unexpected character {self.text[start]!r}", start)
        self.pos = m.end()
        for kind in ("num", "ident", "op"):
            if m.group(kind) is not None:
                return (kind, m.group(kind), m.start(kind))
        raise ExprSyntaxError("unreadable token", start)  # pragma: no cover

    def expect_op(self, op: str):
        kind, text, offset = self.take()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected '{op}'", offset)

    def parse(self) -> Expr:
        e = self.parse_sum()
        self._skip_ws()
        if self.pos < len(self.text):
            raise ExprSyntaxError("trailing input", self.pos)
        return e

    def parse_sum(self) -> Expr:
        lhs = self.parse_term()
        while self.peek() in ("+", "-"):
            _, op, _ = self.take()
            rhs = self.parse_term()
            lhs = Add(lhs, rhs) if op == "+" else Sub(lhs, rhs)
        return lhs

    def parse_term(self) -> Expr:
        lhs = self.parse_unary()
        while self.peek() in ("*", "/"):
            _, op, _ = self.take()
            rhs = self.parse_unary()
            lhs = Mul(lhs, rhs) if op == "*" else Div(lhs, rhs)
        return lhs

    def parse_unary(self) -> Expr:
        if self.peek() == "-":
            self.take()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Expr:
        lhs = self.parse_atom()
        while self.peek() == "^":
            self.take()
            rhs = self.parse_exponent()
            lhs = Pow(lhs, rhs)
        return lhs

    def parse_exponent(self) -> Expr:
        if self.peek() == "-":
            self.take()
            return Neg(self.parse_exponent())
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        kind, text, offset = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if self.peek() == "(":
                if text not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function '{text}'", offset)
                self.take()  # '('
                args = [self.parse_sum()]
                while self.peek() == ",":
                    self.take()
                    args.append(self.parse_sum())
                self.expect_op(")")
                if len(args) != 1:
                    raise ExprSyntaxError(
                        f"{text} expects 1 argument, got {len(args)}", offset
                    )
                return Fn(text, args[0])
            m = _COORD.match(text)
            if m:
                return Coord(int(m.group(1)) - 1)
            if text in self.constants:
                return Num(float(self.constants[text]))
            raise ExprSyntaxError(f"unknown identifier '{text}'", offset)
        if kind == "op" and text == "(":
            e = self.parse_sum()
            self.expect_op(")")
            return e
        if kind == "end":
            raise ExprSyntaxError("expected an operand", offset)
        raise ExprSyntaxError(f"unexpected '{text}'", offset)


def parse(text: str, constants: Mapping[str, float] | None = None) -> Expr:
    """Parse expression text into an immutable tree.

    Named constants are substituted by value at parse time.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, constants or {}).parse()


def diff(e: Expr, var: int) -> Expr:
    """Exact symbolic derivative with respect to coordinate index ``var`` (0-based)."""
    return e.diff(var)


def evaluate(e: Expr, x: Sequence):
    """Evaluate at a point; scalars may be floats or dual numbers."""
    return e.eval(x)
