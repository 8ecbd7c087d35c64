"""Exact arithmetic in the two symbols ``m`` and ``n``.

Coefficients are :class:`fractions.Fraction`.  :class:`Poly2` is a sparse
bivariate polynomial, :class:`RatFunc` a ratio of two of them kept in lowest
terms, and :class:`BTriangle` the decomposition of a rational function in the
basis ``1/((m-i)(n-j))``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import comb, factorial, gcd, lcm
from typing import Iterable, Union

Rat = Fraction
Number = Union[int, Fraction]

__all__ = [
    "Rat",
    "Poly2",
    "RatFunc",
    "BTriangle",
    "ExprSyntaxError",
    "PoleError",
    "M",
    "N",
    "ONE",
    "ZERO",
    "parse_expr",
    "ratfunc_arith",
    "binom_poly",
    "binom_shifted",
    "lemma_sum_check",
    "to_btriangle",
    "eval_at",
]


class ExprSyntaxError(ValueError):
    pass


class PoleError(ArithmeticError):
    """Evaluation point or residue extraction hits a pole it cannot handle."""


# ---------------------------------------------------------------------------
# univariate integer polynomials: tuples of ints, low degree first, no
# trailing zeros; () is the zero polynomial


def _u_trim(a: list) -> tuple:
    i = len(a)
    while i and a[i - 1] == 0:
        i -= 1
    return tuple(a[:i])


def _u_add(a: tuple, b: tuple) -> tuple:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return _u_trim(out)


def _u_sub(a: tuple, b: tuple) -> tuple:
    out = list(a) + [0] * max(0, len(b) - len(a))
    for i, c in enumerate(b):
        out[i] -= c
    return _u_trim(out)


def _u_mul(a: tuple, b: tuple) -> tuple:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _u_trim(out)


def _u_content(a: tuple) -> int:
    return reduce(gcd, a, 0)


def _u_divexact(a: tuple, b: tuple) -> tuple:
    """Exact division in Z[x]; raises if ``b`` does not divide ``a``."""
    if not a:
        return ()
    a = list(a)
    db = len(b) - 1
    lb = b[-1]
    q = [0] * (len(a) - db)
    for k in range(len(a) - 1, db - 1, -1):
        c = a[k]
        if c:
            qc, rem = divmod(c, lb)
            if rem:
                raise ArithmeticError("inexact polynomial division")
            q[k - db] = qc
            for i, y in enumerate(b):
                a[k - db + i] -= qc * y
    if any(a):
        raise ArithmeticError("inexact polynomial division")
    return _u_trim(q)


def _u_prem(a: tuple, b: tuple) -> tuple:
    a = list(a)
    db = len(b) - 1
    lb = b[-1]
    while len(a) - 1 >= db and a:
        c = a[-1]
        shift = len(a) - 1 - db
        a = [x * lb for x in a]
        for i, y in enumerate(b):
            a[shift + i] -= c * y
        a = list(_u_trim(a))
    return tuple(a)


def _u_prim(a: tuple) -> tuple:
    c = _u_content(a)
    if c in (0, 1):
        return a
    return tuple(x // c for x in a)


def _u_gcd(a: tuple, b: tuple) -> tuple:
    if not a:
        return _u_normsign(b)
    if not b:
        return _u_normsign(a)
    c = gcd(_u_content(a), _u_content(b))
    a, b = _u_prim(a), _u_prim(b)
    if len(a) < len(b):
        a, b = b, a
    while b:
        if len(b) == 1:
            a = (1,)
            break
        r = _u_prem(a, b)
        a, b = b, _u_prim(r)
    return _u_normsign(tuple(c * x for x in a))


def _u_normsign(a: tuple) -> tuple:
    if a and a[-1] < 0:
        return tuple(-x for x in a)
    return a


# ---------------------------------------------------------------------------
# bivariate integer polynomials viewed in Z[n][m]: tuples of univariate
# n-polynomials indexed by m-degree


def _b_trim(a: list) -> tuple:
    i = len(a)
    while i and not a[i - 1]:
        i -= 1
    return tuple(a[:i])


def _b_content(a: tuple) -> tuple:
    g: tuple = ()
    for c in a:
        g = _u_gcd(g, c)
        if g == (1,):
            break
    return g


def _b_prim(a: tuple) -> tuple:
    g = _b_content(a)
    if g in ((), (1,)):
        return a
    return tuple(_u_divexact(c, g) for c in a)


def _b_prem(a: tuple, b: tuple) -> tuple:
    a = list(a)
    db = len(b) - 1
    lb = b[-1]
    while a and len(a) - 1 >= db:
        c = a[-1]
        shift = len(a) - 1 - db
        a = [_u_mul(x, lb) for x in a]
        for i, y in enumerate(b):
            a[shift + i] = _u_sub(a[shift + i], _u_mul(c, y))
        a = list(_b_trim(a))
    return tuple(a)


def _b_gcd(a: tuple, b: tuple) -> tuple:
    c = _u_gcd(_b_content(a), _b_content(b))
    a, b = _b_prim(a), _b_prim(b)
    if len(a) < len(b):
        a, b = b, a
    while True:
        if len(b) == 1:
            g: tuple = ((1,),)
            break
        r = _b_prem(a, b)
        if not r:
            g = b
            break
        a, b = b, _b_prim(r)
    g = _b_prim(g)
    return tuple(_u_mul(c, x) for x in g)


# ---------------------------------------------------------------------------


def _grlex(key: tuple[int, int]) -> tuple[int, int, int]:
    return (key[0] + key[1], key[0], key[1])


class Poly2:
    """Sparse polynomial in ``m`` and ``n`` with rational coefficients.

    ``terms`` maps ``(deg_m, deg_n)`` to a nonzero :class:`Fraction`.
    Instances are treated as immutable.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict | None = None):
        if terms:
            self.terms = {k: Fraction(v) for k, v in terms.items() if v}
        else:
            self.terms = {}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "Poly2":
        p = cls.__new__(cls)
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def const(cls, c: Number) -> "Poly2":
        return cls._raw({(0, 0): Fraction(c)} if c else {})

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and (0, 0) in self.terms)

    def const_value(self) -> Fraction:
        return self.terms.get((0, 0), Fraction(0))

    def degree_m(self) -> int:
        return max((k[0] for k in self.terms), default=-1)

    def degree_n(self) -> int:
        return max((k[1] for k in self.terms), default=-1)

    def leading(self) -> tuple[tuple[int, int], Fraction]:
        key = max(self.terms, key=_grlex)
        return key, self.terms[key]

    def __eq__(self, other):
        if isinstance(other, Poly2):
            return self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __repr__(self):
        return f"Poly2({_poly_str(self)!r})"

    def __neg__(self):
        return Poly2._raw({k: -v for k, v in self.terms.items()})

    def __add__(self, other: "Poly2") -> "Poly2":
        out = dict(self.terms)
        for k, v in other.terms.items():
            s = out.get(k, 0) + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return Poly2._raw(out)

    def __sub__(self, other: "Poly2") -> "Poly2":
        return self + (-other)

    def __mul__(self, other: "Poly2") -> "Poly2":
        out: dict = {}
        for (a, b), u in self.terms.items():
            for (c, d), v in other.terms.items():
                key = (a + c, b + d)
                s = out.get(key, 0) + u * v
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return Poly2._raw(out)

    def scale(self, c: Number) -> "Poly2":
        if not c:
            return Poly2._raw({})
        return Poly2._raw({k: v * c for k, v in self.terms.items()})

    def divexact(self, other: "Poly2") -> "Poly2":
        """Exact quotient; raises :class:`ArithmeticError` if there is a remainder."""
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = dict(self.terms)
        dk = max(other.terms)
        dc = other.terms[dk]
        q: dict = {}
        while rem:
            rk = max(rem)
            if rk[0] < dk[0] or rk[1] < dk[1]:
                raise ArithmeticError("inexact polynomial division")
            mk = (rk[0] - dk[0], rk[1] - dk[1])
            mc = rem[rk] / dc
            q[mk] = mc
            for (a, b), v in other.terms.items():
                key = (a + mk[0], b + mk[1])
                s = rem.get(key, 0) - mc * v
                if s:
                    rem[key] = s
                else:
                    rem.pop(key, None)
        return Poly2._raw(q)

    def shift(self, dm: int = 0, dn: int = 0) -> "Poly2":
        """Substitute ``m -> m + dm`` and ``n -> n + dn``."""
        if (dm == 0 and dn == 0) or not self.terms:
            return self
        out: dict = {}
        for (a, b), v in self.terms.items():
            for i in range(a + 1):
                ci = comb(a, i) * dm ** (a - i)
                if not ci:
                    continue
                for j in range(b + 1):
                    cj = comb(b, j) * dn ** (b - j)
                    if not cj:
                        continue
                    key = (i, j)
                    s = out.get(key, 0) + v * ci * cj
                    if s:
                        out[key] = s
                    else:
                        out.pop(key, None)
        return Poly2._raw(out)

    def subs_m(self, m0: Number) -> "Poly2":
        """Substitute a number for ``m``; result is a polynomial in ``n``."""
        out: dict = {}
        for (a, b), v in self.terms.items():
            key = (0, b)
            s = out.get(key, 0) + v * Fraction(m0) ** a
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return Poly2._raw(out)

    def subs_n(self, n0: Number) -> "Poly2":
        out: dict = {}
        for (a, b), v in self.terms.items():
            key = (a, 0)
            s = out.get(key, 0) + v * Fraction(n0) ** b
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return Poly2._raw(out)

    def evaluate(self, m0: Number, n0: Number) -> Fraction:
        m0, n0 = Fraction(m0), Fraction(n0)
        return sum((v * m0**a * n0**b for (a, b), v in self.terms.items()), Fraction(0))

    # integer views ---------------------------------------------------------

    def _denominator_lcm(self) -> int:
        return reduce(lcm, (v.denominator for v in self.terms.values()), 1)

    def _to_bp(self) -> tuple:
        L = self._denominator_lcm()
        dm = self.degree_m()
        rows: list[list[int]] = [[] for _ in range(dm + 1)]
        for (a, b), v in self.terms.items():
            row = rows[a]
            if len(row) <= b:
                row.extend([0] * (b + 1 - len(row)))
            row[b] = int(v * L)
        return _b_trim([_u_trim(r) for r in rows])

    @classmethod
    def _from_bp(cls, bp: tuple) -> "Poly2":
        out = {}
        for a, row in enumerate(bp):
            for b, c in enumerate(row):
                if c:
                    out[(a, b)] = Fraction(c)
        return cls._raw(out)


def poly_gcd(a: Poly2, b: Poly2) -> Poly2:
    """Primitive integer gcd, normalized to a positive graded-lex leading coefficient."""
    if a.is_zero():
        return _primitive(b) if not b.is_zero() else Poly2.const(1)
    if b.is_zero():
        return _primitive(a)
    if a.is_const() or b.is_const():
        return Poly2.const(1)
    g = Poly2._from_bp(_b_gcd(a._to_bp(), b._to_bp()))
    return _primitive(g)


def _primitive(p: Poly2) -> Poly2:
    L = p._denominator_lcm()
    ints = {k: int(v * L) for k, v in p.terms.items()}
    c = reduce(gcd, ints.values(), 0)
    _, lead = p.leading()
    if lead < 0:
        c = -c
    return Poly2._raw({k: Fraction(v // c) for k, v in ints.items()})


M = Poly2._raw({(1, 0): Fraction(1)})
N_ = Poly2._raw({(0, 1): Fraction(1)})


def _mono_str(a: int, b: int) -> str:
    parts = []
    if a:
        parts.append("m" if a == 1 else f"m^{a}")
    if b:
        parts.append("n" if b == 1 else f"n^{b}")
    return "*".join(parts)


def _poly_str(p: Poly2) -> str:
    if not p.terms:
        return "0"
    out = []
    for key in sorted(p.terms, key=_grlex, reverse=True):
        c = p.terms[key]
        mono = _mono_str(*key)
        sign = "-" if c < 0 else "+"
        c = abs(c)
        if not mono:
            body = str(c)
        elif c == 1:
            body = mono
        else:
            body = f"{c}*{mono}"
        out.append((sign, body))
    s = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        s += sign + body
    return s


# ---------------------------------------------------------------------------


class RatFunc:
    """A normalized quotient ``num/den`` of :class:`Poly2` values.

    Normalization removes the polynomial gcd and scales ``den`` to an integer
    polynomial with content 1 and a positive graded-lex leading coefficient,
    so equal values have identical ``(num, den)``.
    """

    __slots__ = ("num", "den", "_hash", "_str")

    def __init__(self, num: Poly2 | Number = 0, den: Poly2 | Number = 1, *, normalized: bool = False):
        if not isinstance(num, Poly2):
            num = Poly2.const(num)
        if not isinstance(den, Poly2):
            den = Poly2.const(den)
        if not normalized:
            num, den = _normalize(num, den)
        self.num = num
        self.den = den
        self._hash = None
        self._str = None

    # constructors -----------------------------------------------------------

    @classmethod
    def const(cls, c: Number) -> "RatFunc":
        c = Fraction(c)
        return cls(Poly2.const(c), Poly2.const(1), normalized=True)

    @classmethod
    def m(cls) -> "RatFunc":
        return cls(M, Poly2.const(1), normalized=True)

    @classmethod
    def n(cls) -> "RatFunc":
        return cls(N_, Poly2.const(1), normalized=True)

    @classmethod
    def parse(cls, text: str) -> "RatFunc":
        return parse_expr(text)

    @classmethod
    def coerce(cls, x) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, (int, Fraction)):
            return cls.const(x)
        if isinstance(x, str):
            return parse_expr(x)
        if isinstance(x, Poly2):
            return cls(x, 1)
        raise TypeError(f"cannot convert {type(x).__name__} to RatFunc")

    # predicates -------------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError("not a constant")
        return self.num.const_value() / self.den.const_value()

    def __bool__(self):
        return not self.is_zero()

    # arithmetic -------------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        if self.den.is_const() and other.den.is_const():
            return RatFunc(
                self.num.scale(other.den.const_value()) + other.num.scale(self.den.const_value()),
                self.den.scale(other.den.const_value()),
            )
        g = poly_gcd(self.den, other.den)
        if g.is_const():
            num = self.num * other.den + other.num * self.den
            den = self.den * other.den
        else:
            bd = other.den.divexact(g)
            ad = self.den.divexact(g)
            num = self.num * bd + other.num * ad
            den = self.den * bd
        return RatFunc(num, den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, normalized=True)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return RatFunc.const(0)
        if other.is_const():
            c = other.const_value()
            return RatFunc(self.num.scale(c), self.den, normalized=True) if c != 1 else self
        if self.is_const():
            return other * self
        # cross-cancel before multiplying; inputs are already in lowest terms
        g1 = poly_gcd(self.num, other.den)
        g2 = poly_gcd(other.num, self.den)
        a_num = self.num.divexact(g1) if not g1.is_const() else self.num
        b_den = other.den.divexact(g1) if not g1.is_const() else other.den
        b_num = other.num.divexact(g2) if not g2.is_const() else other.num
        a_den = self.den.divexact(g2) if not g2.is_const() else self.den
        num = a_num * b_num
        den = a_den * b_den
        return RatFunc(*_scale_den(num, den), normalized=True)

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if self.is_zero():
            raise ZeroDivisionError("division by zero RatFunc")
        return RatFunc(*_scale_den(self.den, self.num), normalized=True)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        out = RatFunc.const(1)
        for _ in range(e):
            out = out * self
        return out

    # comparison ---------------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, str, Poly2)):
            other = RatFunc.coerce(other)
        if not isinstance(other, RatFunc):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def equals_cross(self, other: "RatFunc") -> bool:
        """Equality by cross multiplication, independent of normalization."""
        return (self.num * other.den - other.num * self.den).is_zero()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    # substitution / evaluation ---------------------------------------------

    def shift(self, dm: int = 0, dn: int = 0) -> "RatFunc":
        """Substitute ``m -> m + dm``, ``n -> n + dn``."""
        if dm == 0 and dn == 0:
            return self
        return RatFunc(*_scale_den(self.num.shift(dm, dn), self.den.shift(dm, dn)), normalized=True)

    def evaluate(self, m0: Number, n0: Number) -> Fraction:
        d = self.den.evaluate(m0, n0)
        if d == 0:
            raise PoleError(f"pole of {self} at m={m0}, n={n0}")
        return self.num.evaluate(m0, n0) / d

    def subs(self, m0: Number | None = None, n0: Number | None = None) -> "RatFunc":
        num, den = self.num, self.den
        if m0 is not None:
            num, den = num.subs_m(m0), den.subs_m(m0)
        if n0 is not None:
            num, den = num.subs_n(n0), den.subs_n(n0)
        if den.is_zero():
            raise PoleError(f"pole of {self} at m={m0}, n={n0}")
        return RatFunc(num, den)

    # printing ---------------------------------------------------------------

    def __str__(self):
        if self._str is None:
            self._str = _ratfunc_str(self)
        return self._str

    def __repr__(self):
        return f"RatFunc({str(self)!r})"


def _scale_den(num: Poly2, den: Poly2) -> tuple[Poly2, Poly2]:
    """Scale a coprime pair so ``den`` is primitive with positive leading coefficient."""
    if den.is_zero():
        raise ZeroDivisionError("division by zero RatFunc")
    if num.is_zero():
        return Poly2._raw({}), Poly2.const(1)
    L = den._denominator_lcm()
    c = reduce(gcd, (int(v * L) for v in den.terms.values()), 0)
    _, lead = den.leading()
    f = Fraction(L, c)
    if lead < 0:
        f = -f
    if f == 1:
        return num, den
    return num.scale(f), den.scale(f)


def _normalize(num: Poly2, den: Poly2) -> tuple[Poly2, Poly2]:
    if den.is_zero():
        raise ZeroDivisionError("division by zero RatFunc")
    if num.is_zero():
        return Poly2._raw({}), Poly2.const(1)
    if den.is_const():
        return num.scale(1 / den.const_value()), Poly2.const(1)
    if not num.is_const():
        g = poly_gcd(num, den)
        if not g.is_const():
            num = num.divexact(g)
            den = den.divexact(g)
    return _scale_den(num, den)


def _coerce(x):
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, (int, Fraction)):
        return RatFunc.const(x)
    return NotImplemented


def _int_scaled(p: Poly2, L: int) -> Poly2:
    return Poly2._raw({k: v * L for k, v in p.terms.items()})


def _ratfunc_str(f: RatFunc) -> str:
    if f.den.is_const():
        c = f.den.const_value()
        if c == 1:
            L = f.num._denominator_lcm()
            if L == 1:
                return _poly_str(f.num)
            num = _int_scaled(f.num, L)
            ns = _poly_str(num)
            if len(num.terms) > 1:
                ns = f"({ns})"
            return f"{ns}/{L}"
    L = f.num._denominator_lcm()
    num = _int_scaled(f.num, L)
    den = _int_scaled(f.den, L)
    ns = _poly_str(num)
    if len(num.terms) > 1:
        ns = f"({ns})"
    if den.is_const():
        return f"{ns}/{_poly_str(den)}"
    return f"{ns}/({_poly_str(den)})"


ONE = RatFunc.const(1)
ZERO = RatFunc.const(0)
N = N_


# ---------------------------------------------------------------------------
# expression grammar


_TOKEN = re.compile(r"\s*(?:(\d+)|([mn])|([-+*/^()]))")


def _tokenize(text: str) -> list[str]:
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise ExprSyntaxError(f"unexpected character at {pos} in {text!r}")
        out.append(mt.group(1) or mt.group(2) or mt.group(3))
        pos = mt.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, tok=None):
        t = self.peek()
        if t is None or (tok is not None and t != tok):
            raise ExprSyntaxError(f"expected {tok or 'token'} in {self.text!r}")
        self.i += 1
        return t

    def expr(self) -> RatFunc:
        out = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> RatFunc:
        out = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.factor()
            out = out * rhs if op == "*" else out / rhs
        return out

    def factor(self) -> RatFunc:
        t = self.peek()
        if t == "-":
            self.take()
            return -self.factor()
        if t == "(":
            self.take()
            base = self.expr()
            self.take(")")
        elif t == "m":
            self.take()
            base = RatFunc.m()
        elif t == "n":
            self.take()
            base = RatFunc.n()
        elif t is not None and t.isdigit():
            self.take()
            base = RatFunc.const(int(t))
        else:
            raise ExprSyntaxError(f"unexpected {t!r} in {self.text!r}")
        while self.peek() == "^":
            self.take()
            e = self.take()
            if not e.isdigit():
                raise ExprSyntaxError(f"exponent must be an integer in {self.text!r}")
            base = base ** int(e)
        return base


def parse_expr(text: str) -> RatFunc:
    """Parse ``expr := term (('+'|'-') term)*`` over ``m``, ``n`` and integers."""
    p = _Parser(text)
    if p.peek() is None:
        raise ExprSyntaxError("empty expression")
    out = p.expr()
    if p.peek() is not None:
        raise ExprSyntaxError(f"trailing input {p.peek()!r} in {text!r}")
    return out


# ---------------------------------------------------------------------------
# operations


def ratfunc_arith(a: RatFunc, b: RatFunc, op: str) -> RatFunc:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def binom_shifted(sym: str, shift: int, i: int) -> RatFunc:
    """``C(sym - shift, i)`` as a polynomial in ``sym``."""
    if i < 0:
        return ZERO
    base = M if sym == "m" else N_
    p = Poly2.const(1)
    for t in range(i):
        p = p * (base + Poly2.const(-(shift + t)))
    return RatFunc(p.scale(Fraction(1, factorial(i))), Poly2.const(1), normalized=True)


def binom_poly(sym: str, i: int) -> RatFunc:
    if sym not in ("m", "n"):
        raise ValueError("sym must be 'm' or 'n'")
    if i < 0:
        raise ValueError("i must be nonnegative")
    return binom_shifted(sym, 0, i)


def lemma_sum_check(m0: int, r: int) -> bool:
    if not 1 <= r < m0:
        raise ValueError("need 1 <= r < m0")
    lhs = sum(Fraction((-1) ** i * comb(r, i), m0 - i) for i in range(r + 1))
    rhs = Fraction((-1) ** r, m0 * comb(m0 - 1, r))
    return lhs == rhs


def eval_at(F: RatFunc, m0: Number, n0: Number) -> Fraction:
    return F.evaluate(m0, n0)


@dataclass
class BTriangle:
    k: int
    coeffs: dict = field(default_factory=dict)
    residual: list = field(default_factory=list)

    def basis_sum(self) -> RatFunc:
        out = ZERO
        for (i, j), c in sorted(self.coeffs.items()):
            if c:
                out = out + RatFunc(Poly2.const(c), (M + Poly2.const(-i)) * (N_ + Poly2.const(-j)))
        return out

    def value(self) -> RatFunc:
        out = self.basis_sum()
        for r in self.residual:
            out = out + r
        return out

    def rows(self) -> list[list[Fraction]]:
        """k x k display matrix; entry (i, j) is the coefficient of 1/((m-i)(n-j))."""
        return [[self.coeffs.get((i, j), Fraction(0)) for j in range(self.k)] for i in range(self.k)]

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs.values())

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[Number]], residual: Iterable[RatFunc] = ()) -> "BTriangle":
        rows = [list(r) for r in rows]
        k = len(rows)
        coeffs = {}
        for i, r in enumerate(rows):
            for j, c in enumerate(r):
                if i + j < k:
                    coeffs[(i, j)] = Fraction(c)
                elif c:
                    raise ValueError(f"nonzero coefficient outside the triangle at ({i}, {j})")
        return cls(k, coeffs, list(residual))


def _residue_m(F: RatFunc, i: int) -> RatFunc:
    """Residue of F at the simple pole m = i, as a function of n."""
    d_at = F.den.subs_m(i)
    if not d_at.is_zero():
        return ZERO
    lin = M + Poly2.const(-i)
    d1 = F.den.divexact(lin)
    d1_at = d1.subs_m(i)
    if d1_at.is_zero():
        raise PoleError(f"pole of order >= 2 at m={i}")
    return RatFunc(F.num.subs_m(i), d1_at)


def _residue_n(F: RatFunc, j: int) -> Fraction:
    """Laurent residue at n = j of a function of n alone (any pole order)."""
    num = _univ_n(F.num.shift(0, j))
    den = _univ_n(F.den.shift(0, j))
    p = 0
    while p < len(den) and den[p] == 0:
        p += 1
    if p == 0:
        return Fraction(0)
    den = den[p:]
    # coefficient of t^(p-1) in num(t)/den(t) as a power series in t = n - j
    q: list[Fraction] = []
    for e in range(p):
        acc = num[e] if e < len(num) else Fraction(0)
        for t in range(1, min(e, len(den) - 1) + 1):
            acc -= den[t] * q[e - t]
        q.append(acc / den[0])
    return q[p - 1]


def _univ_n(p: Poly2) -> list[Fraction]:
    if any(a for a, _ in p.terms):
        raise ValueError("expected a polynomial in n only")
    out = [Fraction(0)] * (p.degree_n() + 1)
    for (_, b), v in p.terms.items():
        out[b] = v
    return out


def to_btriangle(F: RatFunc, k: int) -> BTriangle:
    """Iterated residues (m first, then n) at ``m=i, n=j`` for ``i+j<k``.

    The m-residue must come from a simple pole; the n-residue is the Laurent
    coefficient and may come from a pole of any order.
    """
    if k < 1:
        raise ValueError("k must be positive")
    coeffs = {}
    for i in range(k):
        ri = _residue_m(F, i)
        for j in range(k - i):
            coeffs[(i, j)] = _residue_n(ri, j) if not ri.is_zero() else Fraction(0)
    tri = BTriangle(k, coeffs, [])
    rest = F - tri.basis_sum()
    if not rest.is_zero():
        tri.residual = [rest]
    if not tri.value().equals_cross(F):  # pragma: no cover - reconstruction is exact by construction
        raise ArithmeticError("b-triangle reconstruction failed")
    return tri
