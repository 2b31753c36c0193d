"""Arithmetic expressions over x and y with exact symbolic differentiation.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right associative
    primary := NUMBER | 'x' | 'y' | '(' expr ')'

Exponents must fold to a non-negative integer constant (negative integers are
accepted only on constant bases) and denominators must fold to a nonzero
constant, so every expression is a polynomial and evaluation is total.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

VARIABLES = ("x", "y")


class Expr:
    """Base node. Subclasses are frozen dataclasses, hence hashable."""

    __slots__ = ()

    def __call__(self, x, y=0.0):
        return evaluate(self, x, y)

    def __str__(self):
        return to_string(self)

    @property
    def is_constant(self):
        return not free_variables(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


ZERO = Num(0.0)
ONE = Num(1.0)

_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while True:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", _byte_offset(text, bad), text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text, index):
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text, dim):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.i = 0

    def error(self, message, index=None):
        if index is None:
            index = self.tokens[self.i][2]
        return ParseError(message, _byte_offset(self.text, index), self.text)

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self):
        if self.tok[0] == "end":
            raise self.error("empty expression")
        node = self.expr()
        if self.tok[0] != "end":
            raise self.error(f"unexpected token {self.tok[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.advance()[1]
            node = _BINARY[op](node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            op, start = self.advance()[1:]
            rhs_start = self.tok[2]
            rhs = self.unary()
            if op == "/":
                value = _constant_value(rhs)
                if value is None:
                    raise self.error("division by a non-constant expression", rhs_start)
                if value == 0.0:
                    raise self.error("division by zero", rhs_start)
            node = _BINARY[op](node, rhs)
        return node

    def unary(self):
        if self.tok == ("op", "-", self.tok[2]):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            exp_start = self.tok[2]
            exponent = self.unary()
            value = _constant_value(exponent)
            if value is None or not float(value).is_integer():
                raise self.error("non-integer exponent", exp_start)
            n = int(value)
            if n < 0:
                base_value = _constant_value(base)
                if base_value is None:
                    raise self.error("negative exponent on a non-constant base", exp_start)
                if base_value == 0.0:
                    raise self.error("zero raised to a negative power", exp_start)
            return Pow(base, n)
        return base

    def primary(self):
        kind, value, start = self.tok
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "name":
            if value not in VARIABLES:
                raise self.error(f"unknown identifier {value!r}")
            if value == "y" and self.dim == 1:
                raise self.error("variable y is not available in dimension 1")
            self.advance()
            return Var(value)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            if self.tok[1] != ")":
                raise self.error("expected ')'")
            self.advance()
            return node
        if kind == "end":
            raise self.error("unexpected end of expression")
        raise self.error(f"unexpected token {value!r}")


def parse(text: str, dim: int = 1) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises :class:`ParseError` with the byte offset of the offending token.
    """
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    if not text or not text.strip():
        raise ParseError("empty expression", 0, text or "")
    return _Parser(text, dim).parse()


def free_variables(e: Expr) -> frozenset:
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Neg):
        return free_variables(e.arg)
    if isinstance(e, Pow):
        return free_variables(e.base)
    return free_variables(e.left) | free_variables(e.right)


def _constant_value(e):
    if free_variables(e):
        return None
    return float(evaluate(e, 0.0, 0.0))


def evaluate(e: Expr, x, y=0.0):
    """Evaluate pointwise; ``x`` and ``y`` may be scalars or numpy arrays."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x if e.name == "x" else y
    if isinstance(e, Neg):
        return -evaluate(e.arg, x, y)
    if isinstance(e, Pow):
        b = evaluate(e.base, x, y)
        if e.exponent < 0:
            return 1.0 / b ** (-e.exponent)
        return b ** e.exponent
    a = evaluate(e.left, x, y)
    b = evaluate(e.right, x, y)
    if isinstance(e, Add):
        return a + b
    if isinstance(e, Sub):
        return a - b
    if isinstance(e, Mul):
        return a * b
    return a / b


def evaluate_array(e: Expr, x, y=None):
    """Like :func:`evaluate` but always returns a float array of the broadcast shape."""
    x = np.asarray(x, dtype=float)
    y = np.zeros_like(x) if y is None else np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(x.shape, y.shape)
    return np.broadcast_to(np.asarray(evaluate(e, x, y), dtype=float), shape).copy()


def simplify(e: Expr) -> Expr:
    """Bottom-up algebraic cleanup: constant folding and the 0/1 identities."""
    if isinstance(e, (Num, Var)):
        return e
    if isinstance(e, Neg):
        a = simplify(e.arg)
        if isinstance(a, Num):
            return Num(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(e, Pow):
        b = simplify(e.base)
        if e.exponent == 0:
            return ONE
        if e.exponent == 1:
            return b
        if isinstance(b, Num):
            return Num(evaluate(Pow(b, e.exponent), 0.0))
        if isinstance(b, Pow) and b.exponent >= 0:
            return Pow(b.base, b.exponent * e.exponent)
        return Pow(b, e.exponent)

    a = simplify(e.left)
    b = simplify(e.right)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(float(evaluate(type(e)(a, b), 0.0)))
    if isinstance(e, Add):
        if a == ZERO:
            return b
        if b == ZERO:
            return a
        if isinstance(b, Neg):
            return Sub(a, b.arg)
        return Add(a, b)
    if isinstance(e, Sub):
        if b == ZERO:
            return a
        if a == ZERO:
            return simplify(Neg(b))
        if a == b:
            return ZERO
        return Sub(a, b)
    if isinstance(e, Mul):
        if a == ZERO or b == ZERO:
            return ZERO
        if a == ONE:
            return b
        if b == ONE:
            return a
        if a == Num(-1.0):
            return simplify(Neg(b))
        if b == Num(-1.0):
            return simplify(Neg(a))
        # keep numeric factors on the left: 2*x rather than x*2
        if isinstance(b, Num):
            a, b = b, a
        if isinstance(a, Num) and isinstance(b, Mul) and isinstance(b.left, Num):
            return Mul(Num(a.value * b.left.value), b.right)
        return Mul(a, b)
    # Div; denominators are constant by construction
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    if isinstance(b, Num):
        return simplify(Mul(Num(1.0 / b.value), a))
    return Div(a, b)


def differentiate(e: Expr, var: str) -> Expr:
    """Exact derivative of ``e`` with respect to ``var``, simplified."""
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    return simplify(_d(e, var))


def _d(e, v):
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Neg):
        return Neg(_d(e.arg, v))
    if isinstance(e, Add):
        return Add(_d(e.left, v), _d(e.right, v))
    if isinstance(e, Sub):
        return Sub(_d(e.left, v), _d(e.right, v))
    if isinstance(e, Mul):
        return Add(Mul(_d(e.left, v), e.right), Mul(e.left, _d(e.right, v)))
    if isinstance(e, Div):
        # denominator is constant
        return Div(_d(e.left, v), e.right)
    if isinstance(e, Pow):
        if e.exponent == 0 or v not in free_variables(e.base):
            return ZERO
        return Mul(Mul(Num(float(e.exponent)), Pow(e.base, e.exponent - 1)), _d(e.base, v))
    raise TypeError(f"not an expression node: {e!r}")


_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4, Num: 5, Var: 5}


def _fmt_num(value):
    if float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def to_string(e: Expr) -> str:
    """Render with minimal parentheses; ``parse(to_string(e))`` rebuilds ``e``."""
    if isinstance(e, Num):
        s = _fmt_num(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if _PREC[type(e.arg)] < _PREC[Neg]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _PREC[type(e.base)] <= _PREC[Pow]:
            base = f"({base})"
        exp = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        return f"{base}^{exp}"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
    p = _PREC[type(e)]
    left = to_string(e.left)
    if _PREC[type(e.left)] < p:
        left = f"({left})"
    right = to_string(e.right)
    # left associativity: a - (b - c) and a / (b * c) need parentheses
    if _PREC[type(e.right)] < p or (_PREC[type(e.right)] == p and isinstance(e, (Sub, Div))):
        right = f"({right})"
    if isinstance(e.right, Neg) or (isinstance(e.right, Num) and e.right.value < 0):
        right = right if right.startswith("(") else f"({right})"
    return f"{left} {op} {right}" if p == 1 else f"{left}*{right}" if op == "*" else f"{left}/{right}"


def degree_bound(e: Expr) -> int:
    """Upper bound on the total polynomial degree."""
    if isinstance(e, Num):
        return 0
    if isinstance(e, Var):
        return 1
    if isinstance(e, Neg):
        return degree_bound(e.arg)
    if isinstance(e, Pow):
        return degree_bound(e.base) * max(e.exponent, 0)
    if isinstance(e, Mul):
        return degree_bound(e.left) + degree_bound(e.right)
    if isinstance(e, Div):
        return degree_bound(e.left)
    return max(degree_bound(e.left), degree_bound(e.right))
