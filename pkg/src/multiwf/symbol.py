"""Operator description language and symbolic coefficient expressions.

An operator ``sum a_alpha(x) D^alpha`` is written as text, e.g.::

    x1^2*D1^2 + (1 + cos(x2))*D2^2 + i*D^(1,1) - 3/4

and parsed into an :class:`OperatorSymbol`, the normalized list of
``(coefficient, alpha)`` terms.  ``D^alpha`` corresponds to the monomial
``xi^alpha`` of the symbol.

Coefficient expressions are small immutable trees built from rational
constants (with an imaginary part), the variables ``x1..xn``, ``+``, ``*``,
integer powers and ``sin``/``cos``/``exp``.  They can be differentiated
exactly and evaluated on numpy arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import prod
from typing import Sequence

import numpy as np

__all__ = [
    "DSLSyntaxError",
    "Expr",
    "Const",
    "Var",
    "Add",
    "Mul",
    "Pow",
    "Func",
    "OperatorSymbol",
    "parse_operator",
    "parse_coef",
    "diff_coef",
    "eval_symbol",
    "eval_symbol_derivative",
    "is_symbolic_zero",
]

ZERO_TEST_POINTS = 20
ZERO_TEST_SEED = 20240917
ZERO_TEST_TOL = 1e-13


class DSLSyntaxError(ValueError):
    """Raised on malformed operator text; ``pos`` is the 0-based offset."""

    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


# ---------------------------------------------------------------------------
# expression tree


class Expr:
    """Base class of coefficient expressions."""

    def evaluate(self, x) -> np.ndarray:
        """Evaluate at points ``x`` of shape ``(..., n)``; returns shape ``(...)``."""
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self._eval(x), x.shape[:-1]).astype(complex)

    def _eval(self, x: np.ndarray):
        raise NotImplementedError

    def diff(self, j: int) -> "Expr":
        """Exact partial derivative with respect to ``x_j`` (1-based)."""
        raise NotImplementedError

    def variables(self) -> frozenset[int]:
        raise NotImplementedError

    @property
    def is_constant(self) -> bool:
        return not self.variables()

    def __add__(self, other: "Expr") -> "Expr":
        return add(self, other)

    def __mul__(self, other: "Expr") -> "Expr":
        return mul(self, other)

    def __neg__(self) -> "Expr":
        return mul(Const(Fraction(-1)), self)

    def __sub__(self, other: "Expr") -> "Expr":
        return add(self, -other)


@dataclass(frozen=True)
class Const(Expr):
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def _eval(self, x):
        return complex(self.re, self.im)

    def diff(self, j):
        return ZERO

    def variables(self):
        return frozenset()

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __str__(self):
        if self.im == 0:
            return _fmt_rational(self.re)
        if self.re == 0:
            if self.im == 1:
                return "i"
            return f"({_fmt_rational(self.im)}*i)"
        return f"({_fmt_rational(self.re)} + {_fmt_rational(self.im)}*i)"


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def _eval(self, x):
        return x[..., self.index - 1]

    def diff(self, j):
        return ONE if j == self.index else ZERO

    def variables(self):
        return frozenset({self.index})

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Add(Expr):
    args: tuple[Expr, ...]

    def _eval(self, x):
        return sum(a._eval(x) for a in self.args)

    def diff(self, j):
        out = ZERO
        for a in self.args:
            out = add(out, a.diff(j))
        return out

    def variables(self):
        return frozenset().union(*(a.variables() for a in self.args))

    def __str__(self):
        return "(" + " + ".join(str(a) for a in self.args) + ")"


@dataclass(frozen=True)
class Mul(Expr):
    args: tuple[Expr, ...]

    def _eval(self, x):
        return prod((a._eval(x) for a in self.args), start=1)

    def diff(self, j):
        out = ZERO
        for k, a in enumerate(self.args):
            da = a.diff(j)
            if da == ZERO:
                continue
            term = da
            for m, b in enumerate(self.args):
                if m != k:
                    term = mul(term, b)
            out = add(out, term)
        return out

    def variables(self):
        return frozenset().union(*(a.variables() for a in self.args))

    def __str__(self):
        return "(" + "*".join(str(a) for a in self.args) + ")"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: int

    def _eval(self, x):
        return self.base._eval(x) ** self.exp

    def diff(self, j):
        db = self.base.diff(j)
        if db == ZERO:
            return ZERO
        return mul(mul(Const(Fraction(self.exp)), power(self.base, self.exp - 1)), db)

    def variables(self):
        return self.base.variables()

    def __str__(self):
        b = str(self.base)
        if not isinstance(self.base, (Var, Add, Mul)) and not b.startswith("("):
            b = f"({b})"
        return f"{b}^{self.exp}"


_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def _eval(self, x):
        return _FUNCS[self.name](np.asarray(self.arg._eval(x), dtype=complex))

    def diff(self, j):
        da = self.arg.diff(j)
        if da == ZERO:
            return ZERO
        if self.name == "sin":
            outer = Func("cos", self.arg)
        elif self.name == "cos":
            outer = -Func("sin", self.arg)
        else:
            outer = self
        return mul(outer, da)

    def variables(self):
        return self.arg.variables()

    def __str__(self):
        a = str(self.arg)
        if a.startswith("(") and a.endswith(")") and _balanced(a[1:-1]):
            a = a[1:-1]
        return f"{self.name}({a})"


ZERO = Const()
ONE = Const(Fraction(1))
IMAG = Const(Fraction(0), Fraction(1))


def _fmt_rational(r: Fraction) -> str:
    body = str(abs(r.numerator)) if r.denominator == 1 else f"{abs(r.numerator)}/{r.denominator}"
    return f"(-{body})" if r < 0 else body


def _balanced(s: str) -> bool:
    depth = 0
    for ch in s:
        depth += ch == "("
        depth -= ch == ")"
        if depth < 0:
            return False
    return depth == 0


def _cmul(a: Const, b: Const) -> Const:
    return Const(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


def add(a: Expr, b: Expr) -> Expr:
    args: list[Expr] = []
    const = ZERO
    for e in (a, b):
        for t in e.args if isinstance(e, Add) else (e,):
            if isinstance(t, Const):
                const = Const(const.re + t.re, const.im + t.im)
            else:
                args.append(t)
    if not const.is_zero():
        args.append(const)
    if not args:
        return ZERO
    return args[0] if len(args) == 1 else Add(tuple(args))


def mul(a: Expr, b: Expr) -> Expr:
    args: list[Expr] = []
    const = ONE
    for e in (a, b):
        for t in e.args if isinstance(e, Mul) else (e,):
            if isinstance(t, Const):
                const = _cmul(const, t)
            else:
                args.append(t)
    if const.is_zero():
        return ZERO
    if const != ONE:
        args.insert(0, const)
    if not args:
        return ONE
    return args[0] if len(args) == 1 else Mul(tuple(args))


def power(base: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        out = ONE
        for _ in range(k):
            out = _cmul(out, base)
        return out
    if isinstance(base, Pow):
        return Pow(base.base, base.exp * k)
    return Pow(base, k)


@lru_cache(maxsize=4096)
def _diff_cached(e: Expr, alpha: tuple[int, ...]) -> Expr:
    for j, aj in enumerate(alpha, start=1):
        for _ in range(aj):
            e = e.diff(j)
            if e == ZERO:
                return ZERO
    return e


def diff_coef(e: Expr, alpha: Sequence[int]) -> Expr:
    """Mixed partial derivative ``d^alpha e`` (``alpha[j-1]`` times in ``x_j``)."""
    return _diff_cached(e, tuple(int(a) for a in alpha))


def _zero_test_points(n: int) -> np.ndarray:
    rng = np.random.default_rng(ZERO_TEST_SEED)
    return rng.uniform(-1.0, 1.0, size=(ZERO_TEST_POINTS, max(n, 1)))


def is_symbolic_zero(e: Expr, n: int) -> bool:
    """Seeded numerical zero test: ``|e| < 1e-13`` at 20 fixed points of [-1,1]^n."""
    if isinstance(e, Const):
        return e.is_zero()
    n = max(n, max(e.variables(), default=0))
    vals = e.evaluate(_zero_test_points(n))
    return bool(np.all(np.abs(vals) < ZERO_TEST_TOL))


# ---------------------------------------------------------------------------
# operator symbol


@dataclass(frozen=True)
class OperatorSymbol:
    """Normalized symbol ``P(x, xi) = sum coef(x) * xi^alpha``.

    ``terms`` holds ``(coef, alpha)`` pairs with pairwise distinct ``alpha``
    and no symbolically-zero coefficient, sorted by ``alpha`` descending.
    """

    n: int
    terms: tuple[tuple[Expr, tuple[int, ...]], ...]

    @classmethod
    def from_terms(cls, n: int, terms) -> "OperatorSymbol":
        merged: dict[tuple[int, ...], Expr] = {}
        for coef, alpha in terms:
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n or any(a < 0 for a in alpha):
                raise ValueError(f"bad multi-index {alpha} for dimension {n}")
            merged[alpha] = add(merged.get(alpha, ZERO), coef)
        kept = [(c, a) for a, c in merged.items() if not is_symbolic_zero(c, n)]
        kept.sort(key=lambda t: t[1], reverse=True)
        return cls(n, tuple(kept))

    @property
    def alphas(self) -> list[tuple[int, ...]]:
        return [a for _, a in self.terms]

    def coefficient(self, alpha) -> Expr:
        alpha = tuple(alpha)
        for c, a in self.terms:
            if a == alpha:
                return c
        return ZERO

    @property
    def constant_coefficients(self) -> bool:
        return all(c.is_constant for c, _ in self.terms)

    def __add__(self, other: "OperatorSymbol") -> "OperatorSymbol":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return OperatorSymbol.from_terms(self.n, list(self.terms) + list(other.terms))

    def scaled(self, lam) -> "OperatorSymbol":
        lam = complex(lam)
        c = Const(Fraction(lam.real), Fraction(lam.imag))
        return OperatorSymbol.from_terms(self.n, [(mul(c, e), a) for e, a in self.terms])

    def sub_symbol(self, alphas) -> "OperatorSymbol":
        keep = {tuple(a) for a in alphas}
        return OperatorSymbol(self.n, tuple(t for t in self.terms if t[1] in keep))

    def evaluate(self, x, xi) -> np.ndarray:
        return eval_symbol(self, x, xi)

    def derivative(self, alpha, beta, x, xi) -> np.ndarray:
        return eval_symbol_derivative(self, alpha, beta, x, xi)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for c, a in self.terms:
            if not any(a):
                parts.append(str(c))
                continue
            d = "D^(" + ",".join(str(k) for k in a) + ")"
            parts.append(d if c == ONE else f"{c}*{d}")
        return " + ".join(parts)


def _monomial(xi: np.ndarray, alpha: Sequence[int]) -> np.ndarray:
    out = np.ones(xi.shape[:-1])
    for j, a in enumerate(alpha):
        if a:
            out = out * xi[..., j] ** a
    return out


def _falling(g: int, b: int) -> int:
    return prod(range(g - b + 1, g + 1), start=1)


def eval_symbol(P: OperatorSymbol, x, xi) -> np.ndarray:
    """``sum_alpha a_alpha(x) xi^alpha``; ``x`` and ``xi`` broadcast over leading axes."""
    return eval_symbol_derivative(P, (0,) * P.n, (0,) * P.n, x, xi)


def eval_symbol_derivative(P: OperatorSymbol, alpha, beta, x, xi) -> np.ndarray:
    """``d_x^alpha d_xi^beta P(x, xi)``.

    The xi-derivative of each monomial uses falling factorials; terms with
    ``beta`` not below their exponent drop out.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    alpha = tuple(int(a) for a in alpha)
    beta = tuple(int(b) for b in beta)
    shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
    out = np.zeros(shape, dtype=complex)
    for coef, gamma in P.terms:
        if any(b > g for b, g in zip(beta, gamma)):
            continue
        dc = diff_coef(coef, alpha)
        if dc == ZERO:
            continue
        factor = prod((_falling(g, b) for g, b in zip(gamma, beta)), start=1)
        rest = tuple(g - b for g, b in zip(gamma, beta))
        out = out + dc.evaluate(x) * (factor * _monomial(xi, rest))
    return out


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?|\.\d+)|(?P<dmulti>D\^\()|(?P<d>D\d+)|(?P<x>x\d+)"
    r"|(?P<fn>sin|cos|exp)|(?P<i>i)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    pos = 0
    toks = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise DSLSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


# operator-level polynomial: alpha -> coefficient
_Poly = dict


class _Parser:
    def __init__(self, text: str, n: int):
        self.toks = _tokenize(text)
        self.k = 0
        self.n = n

    @property
    def cur(self):
        return self.toks[self.k]

    def take(self, kind=None, value=None):
        t = self.cur
        if (kind and t[0] != kind) or (value is not None and t[1] != value):
            want = value or kind
            got = t[1] or "end of input"
            raise DSLSyntaxError(f"expected {want!r}, found {got!r}", t[2])
        self.k += 1
        return t

    def at(self, kind, value=None):
        t = self.cur
        return t[0] == kind and (value is None or t[1] == value)

    def nat(self) -> int:
        t = self.take("num")
        if not t[1].isdigit():
            raise DSLSyntaxError("expected a natural number", t[2])
        return int(t[1])

    def index(self, j: int, pos: int) -> int:
        if not 1 <= j <= self.n:
            raise DSLSyntaxError(f"index {j} out of range 1..{self.n}", pos)
        return j

    # grammar ------------------------------------------------------------
    def operator(self) -> _Poly:
        p = self.sum()
        if not self.at("end"):
            raise DSLSyntaxError(f"unexpected {self.cur[1]!r}", self.cur[2])
        return p

    def sum(self) -> _Poly:
        sign = 1
        if self.at("op", "-") or self.at("op", "+"):
            sign = -1 if self.take()[1] == "-" else 1
        acc = self.product()
        if sign < 0:
            acc = _scale(acc, -1)
        while self.at("op", "+") or self.at("op", "-"):
            op = self.take()[1]
            rhs = self.product()
            acc = _padd(acc, rhs if op == "+" else _scale(rhs, -1))
        return acc

    def product(self) -> _Poly:
        acc = self.factor()
        while self.at("op", "*"):
            pos = self.take()[2]
            rhs = self.factor()
            acc = self.compose(acc, rhs, pos)
        return acc

    def compose(self, left: _Poly, right: _Poly, pos: int) -> _Poly:
        left_has_d = any(any(a) for a in left)
        right_has_d = any(any(a) for a in right)
        if left_has_d and not all(c.is_constant for c in right.values()):
            if right_has_d:
                raise DSLSyntaxError("operator composition with variable coefficients is not supported", pos)
            raise DSLSyntaxError("derivative factor precedes coefficient factor", pos)
        out: _Poly = {}
        for a, ca in left.items():
            for b, cb in right.items():
                g = tuple(x + y for x, y in zip(a, b))
                out[g] = add(out.get(g, ZERO), mul(ca, cb))
        return out

    def factor(self) -> _Poly:
        t = self.cur
        if t[0] == "d":
            self.take()
            j = self.index(int(t[1][1:]), t[2])
            k = 1
            if self.at("op", "^"):
                self.take()
                k = self.nat()
            alpha = [0] * self.n
            alpha[j - 1] = k
            return {tuple(alpha): ONE}
        if t[0] == "dmulti":
            self.take()
            alpha = [self.nat()]
            while self.at("op", ","):
                self.take()
                alpha.append(self.nat())
            self.take("op", ")")
            if len(alpha) != self.n:
                raise DSLSyntaxError(f"multi-index has {len(alpha)} entries, expected {self.n}", t[2])
            return {tuple(alpha): ONE}
        base = self.atom()
        if self.at("op", "^"):
            pos = self.take()[2]
            k = self.nat()
            zero = (0,) * self.n
            if set(base) <= {zero}:
                return {zero: power(base.get(zero, ZERO), k)}
            out: _Poly = {zero: ONE}
            for _ in range(k):
                out = self.compose(out, base, pos)
            return out
        return base

    def atom(self) -> _Poly:
        t = self.cur
        zero = (0,) * self.n
        if t[0] == "num":
            self.take()
            value = Fraction(t[1])
            if self.at("op", "/"):
                self.take()
                den_tok = self.cur
                den = self.nat()
                if "." in t[1]:
                    raise DSLSyntaxError("rational literal needs natural numerator", t[2])
                if den == 0:
                    raise DSLSyntaxError("zero denominator", den_tok[2])
                value = value / den
            return {zero: Const(value)}
        if t[0] == "i":
            self.take()
            return {zero: IMAG}
        if t[0] == "x":
            self.take()
            return {zero: Var(self.index(int(t[1][1:]), t[2]))}
        if t[0] == "fn":
            self.take()
            self.take("op", "(")
            inner = self.sum()
            self.take("op", ")")
            if any(any(a) for a in inner):
                raise DSLSyntaxError(f"derivative inside {t[1]}()", t[2])
            return {zero: Func(t[1], inner.get(zero, ZERO))}
        if t[0] == "op" and t[1] == "(":
            self.take()
            inner = self.sum()
            self.take("op", ")")
            return inner
        raise DSLSyntaxError(f"unexpected {t[1] or 'end of input'!r}", t[2])


def _padd(a: _Poly, b: _Poly) -> _Poly:
    out = dict(a)
    for k, v in b.items():
        out[k] = add(out.get(k, ZERO), v)
    return out


def _scale(a: _Poly, s: int) -> _Poly:
    c = Const(Fraction(s))
    return {k: mul(c, v) for k, v in a.items()}


def parse_operator(text: str, n: int) -> OperatorSymbol:
    """Parse operator text in dimension ``n`` into a normalized symbol.

    >>> str(parse_operator("i*D1 + D2^2", 2))
    'i*D^(1,0) + D^(0,2)'
    """
    if n < 1:
        raise ValueError("dimension must be positive")
    poly = _Parser(text, n).operator()
    return OperatorSymbol.from_terms(n, [(c, a) for a, c in poly.items()])


def parse_coef(text: str, n: int) -> Expr:
    """Parse a pure coefficient expression (no ``D`` factors)."""
    poly = _Parser(text, n).operator()
    if any(any(a) for a in poly):
        raise DSLSyntaxError("coefficient expression contains derivatives")
    return poly.get((0,) * n, ZERO)
