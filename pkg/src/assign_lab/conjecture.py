"""Closed-form evaluators for F and the quantities derived from it.

Values produced from the partial-cover probabilities are conjectural in
general and proven when Z contains a (k-1)-assignment; :func:`provenance`
tells which applies.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, factorial

from .exact import (
    BTriangle,
    M,
    N,
    ONE,
    ZERO,
    Poly2,
    RatFunc,
    binom_poly,
    binom_shifted,
    to_btriangle,
)
from .pattern import (
    BoundsError,
    ZeroPattern,
    is_acyclic,
    lambda_row,
    nu,
    partial_cover_counts,
)


class PreconditionError(ValueError):
    pass


def basis(i: int, j: int) -> RatFunc:
    """``1/((m-i)(n-j))``."""
    return _basis(i, j)


@lru_cache(maxsize=None)
def _basis(i: int, j: int) -> RatFunc:
    return RatFunc(Poly2.const(1), (M + Poly2.const(-i)) * (N + Poly2.const(-j)))


def _triangle_sum(coeff) -> RatFunc:
    # combine over a common denominator once instead of k^2 pairwise adds
    out = ZERO
    for (i, j), c in coeff.items():
        if c:
            out = out + basis(i, j) * c
    return out


def cs_formula(k: int) -> RatFunc:
    if k < 1:
        raise ValueError("k must be positive")
    return _cs(k)


@lru_cache(maxsize=None)
def _cs(k: int) -> RatFunc:
    return _triangle_sum({(i, j): 1 for i in range(k) for j in range(k - i)})


def parisi_value(n0: int) -> Fraction:
    if n0 < 1:
        raise ValueError("n0 must be positive")
    return sum((Fraction(1, i * i) for i in range(1, n0 + 1)), Fraction(0))


def _check_bounds(Z: ZeroPattern, k: int):
    if k > 8:
        raise BoundsError("k exceeds 8")
    if k < 1:
        raise ValueError("k must be positive")


def partial_cover_probability(Z: ZeroPattern, k: int, i: int, j: int) -> RatFunc:
    """p_ij: chance that i uniform rows and j uniform columns extend to a (k-1)-covering."""
    cc = partial_cover_counts(Z, k)
    r = k - 1 - i - j
    num = ZERO
    for s in range(min(i, Z.rows) + 1):
        for t in range(min(j, Z.cols) + 1):
            g = cc.g.get((s, t, r), 0)
            if g:
                num = num + binom_shifted("m", Z.rows, i - s) * binom_shifted("n", Z.cols, j - t) * g
    return num / (binom_poly("m", i) * binom_poly("n", j))


def main_conjecture_F(Z: ZeroPattern, k: int) -> RatFunc:
    _check_bounds(Z, k)
    return _main(Z, k)


@lru_cache(maxsize=4096)
def _main(Z: ZeroPattern, k: int) -> RatFunc:
    out = ZERO
    for i in range(k):
        for j in range(k - i):
            p = partial_cover_probability(Z, k, i, j)
            if p:
                out = out + p * basis(i, j)
    return out


def provenance(Z: ZeroPattern, k: int) -> str:
    return "exact" if nu(Z.zeros) >= k - 1 else "conjectural"


def main_theorem_F(Z: ZeroPattern, k: int) -> RatFunc:
    if nu(Z.zeros) < k - 1:
        raise PreconditionError("Z does not contain a (k-1)-assignment")
    return main_conjecture_F(Z, k)


def _C(a: int, b: int) -> int:
    if b < 0 or a < 0 or a < b:
        return 0
    return comb(a, b)


def b_formula(Z: ZeroPattern, k: int) -> BTriangle:
    """Integer triangle from the d-counts, without going through F."""
    _check_bounds(Z, k)
    cc = partial_cover_counts(Z, k)
    mp, np_ = Z.rows, Z.cols
    coeffs = {}
    for i in range(k):
        for j in range(k - i):
            total = 0
            for r in range(i + j, k):
                rr = k - 1 - r
                for s in range(mp + 1):
                    for t in range(np_ + 1):
                        d = cc.d(s, t, rr)
                        if not d:
                            continue
                        inner = 0
                        for x in range(max(i, s), r - max(j, t) + 1):
                            inner += (
                                _C(x, i)
                                * _C(r - x, j)
                                * _C(mp - i + x - s - 1, mp - i - 1)
                                * _C(np_ - j + r - x - t - 1, np_ - j - 1)
                            )
                        total += (-1) ** (s + t) * d * inner
            coeffs[(i, j)] = Fraction(1 - (-1) ** (i + j) * total)
    return BTriangle(k, coeffs, [])


def diagonal_F(k: int) -> RatFunc:
    if k < 1:
        raise ValueError("k must be positive")
    coeff = {}
    for i in range(k):
        for j in range(k - i):
            l = k - 1 - i - j
            coeff[(i, j)] = factorial(k - 1) // (factorial(i) * factorial(j) * factorial(l)) * (-1) ** l
    return _triangle_sum(coeff)


def olin_probability(k: int) -> RatFunc:
    if k < 1:
        raise ValueError("k must be positive")
    return ONE - RatFunc(Poly2.const(comb(k, 2)), M * N)


def zero_use_probability(Z: ZeroPattern, cell, k: int, via: str = "conjecture") -> RatFunc:
    """``F_Z - F_{Z + cell}`` for a 0-based non-zero ``cell``."""
    if cell in Z.zeros:
        raise ValueError("cell already a zero")
    Z2 = Z.add(cell)
    Z1 = ZeroPattern(Z2.rows, Z2.cols, Z.zeros)
    if via == "conjecture":
        return main_conjecture_F(Z1, k) - main_conjecture_F(Z2, k)
    if via == "engine":
        from .engine import compute_F

        return compute_F(Z1, k) - compute_F(Z2, k)
    raise ValueError(f"unknown evaluator {via!r}")


def b00_acyclic_check(Z: ZeroPattern, k: int) -> bool:
    if not is_acyclic(Z):
        raise PreconditionError("pattern is not acyclic")
    b = b_formula(Z, k)
    return b.coeffs[(0, 0)] == (-1) ** len(Z.zeros) * comb(k - 1, len(Z.zeros))


def lambda_invariance_check(Z1: ZeroPattern, Z2: ZeroPattern, k: int) -> bool:
    if lambda_row(Z1) != lambda_row(Z2):
        raise PreconditionError("row partitions differ")
    b1 = b_formula(Z1, k).coeffs
    b2 = b_formula(Z2, k).coeffs
    return all(b1[(i, 0)] == b2[(i, 0)] for i in range(k))


# ---------------------------------------------------------------------------
# Moebius form at concrete dimensions


def _lines(m0: int, n0: int):
    return [("r", i) for i in range(m0)] + [("c", j) for j in range(n0)]


def covering_poset(Z: ZeroPattern, k: int, m0: int, n0: int) -> dict:
    """Intersections of all (k-1)-coverings, mapped to their Moebius values.

    The artificial bottom element is not included in the returned map.
    """
    if m0 + n0 > 14:
        raise BoundsError("m0 + n0 exceeds 14")
    if k > min(m0, n0):
        raise ValueError("need k <= m0, n0")
    if Z.rows > m0 or Z.cols > n0:
        raise ValueError("pattern does not fit the dimensions")
    lines = _lines(m0, n0)
    covers = []
    for combo in combinations(range(len(lines)), k - 1):
        mask = 0
        for x in combo:
            mask |= 1 << x
        if all((mask >> r) & 1 or (mask >> (m0 + c)) & 1 for r, c in Z.zeros):
            covers.append(mask)
    elems = set(covers)
    frontier = set(covers)
    while frontier:
        new = set()
        for a in frontier:
            for b in covers:
                x = a & b
                if x not in elems:
                    new.add(x)
        elems |= new
        frontier = new
    # order by reverse inclusion: beta <= alpha iff beta contains alpha
    mu = {}
    for a in sorted(elems, key=lambda x: -bin(x).count("1")):
        s = 1  # the bottom element
        for b in elems:
            if b != a and (b & a) == a:
                s += mu[b]
        mu[a] = -s
    return mu


def mobius_F(Z: ZeroPattern, k: int, m0: int, n0: int) -> Fraction:
    mu = covering_poset(Z, k, m0, n0)
    rmask = (1 << m0) - 1
    out = Fraction(0)
    for a, v in mu.items():
        i = bin(a & rmask).count("1")
        j = bin(a >> m0).count("1")
        out += Fraction(-v, (m0 - i) * (n0 - j))
    return out


def report(Z: ZeroPattern, k: int, F: RatFunc, prov: str) -> dict:
    try:
        tri = to_btriangle(F, k)
        b = [[str(c) for c in row] for row in tri.rows()]
        residual = [str(r) for r in tri.residual]
    except ArithmeticError:
        b, residual = None, [str(F)]
    return {
        "pattern": Z.to_text(),
        "k": k,
        "F": str(F),
        "b": b,
        "residual": residual,
        "provenance": prov,
    }
