"""Large-n limits for zero regions bounded by x^p + y^p = 1.

This is the only floating-point module.  The quarter circle is the p = 2
member of the p-norm family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import integrate
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching


@dataclass(frozen=True)
class RegionSpec:
    kind: str = "quarter_circle"
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in ("quarter_circle", "pnorm"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.kind == "pnorm" and not self.p > 1:
            raise ValueError("p must exceed 1")

    @property
    def exponent(self) -> float:
        return 2.0 if self.kind == "quarter_circle" else float(self.p)

    @property
    def u(self) -> float:
        """Dual exponent p/(p-1)."""
        p = self.exponent
        return p / (p - 1)


QUARTER = RegionSpec("quarter_circle")


def pnorm(p: float) -> RegionSpec:
    return RegionSpec("pnorm", p)


def m_ab(region: RegionSpec, a: float, b: float) -> float:
    """Cheapest weighted strip cover of the region: a + b - ||(a, b)||_u."""
    if a < 0 or b < 0 or (a == 0 and b == 0):
        raise ValueError("need a, b >= 0, not both zero")
    if region.kind == "quarter_circle":
        return a + b - math.hypot(a, b)
    u = region.u
    return a + b - (a**u + b**u) ** (1 / u)


def in_region_D(region: RegionSpec, x: float, y: float) -> bool:
    """True iff M_{1-x,1-y} < 1 - x - y, i.e. ||(1-x, 1-y)||_u > 1."""
    a, b = 1.0 - x, 1.0 - y
    if a == 0 and b == 0:
        return False
    return m_ab(region, a, b) < a + b - 1.0


def limit_integral(region: RegionSpec, tol: float = 1e-6) -> float:
    """Integral of 1/((1-x)(1-y)) over D, via -(1/u) int_0^1 log(1 - t^u)/t dt."""
    if tol < 1e-10:
        raise ValueError("tol must be at least 1e-10")
    u = region.u

    def f(t):
        return -math.log1p(-(t**u)) / t if 0 < t < 1 else (0.0 if t == 0 and u > 1 else math.inf)

    val, err = integrate.quad(f, 0.0, 1.0, epsabs=tol / 10, epsrel=1e-12, limit=200)
    if not err <= tol:
        raise ArithmeticError(f"quadrature error estimate {err} exceeds {tol}")
    return val / u


def closed_form_limit(p: float) -> float:
    if not p > 1:
        raise ValueError("p must exceed 1")
    return (1 - 1 / p) ** 2 * math.pi**2 / 6


def zero_cells(region: RegionSpec, n: int) -> np.ndarray:
    """Boolean n x n grid: cell (i, j) meets the region iff its far corner does."""
    p = region.exponent
    idx = np.arange(1, n + 1) / n
    return idx[:, None] ** p + idx[None, :] ** p >= 1.0 - 1e-12


def _nu(grid: np.ndarray) -> int:
    if not grid.any():
        return 0
    match = maximum_bipartite_matching(csr_matrix(grid.astype(np.int8)), perm_type="column")
    return int((match >= 0).sum())


def estimate_Fn(region: RegionSpec, n: int, subset_samples: int, rng: np.random.Generator) -> float:
    """Main-conjecture sum at k = m = n with the probabilities p_ij estimated.

    When C(n,i) C(n,j) does not exceed ``subset_samples`` every subset is
    enumerated, so small n are exact.
    """
    if not 1 <= n <= 40:
        raise ValueError("n must be in 1..40")
    Z = zero_cells(region, n)
    if _nu(Z) >= n:
        return 0.0
    total = 0.0
    for i in range(n):
        for j in range(n - i):
            budget = n - 1 - i - j
            count = math.comb(n, i) * math.comb(n, j)
            if count <= subset_samples:
                hits = 0
                for rs in combinations(range(n), i):
                    sub = np.delete(Z, list(rs), axis=0)
                    for cs in combinations(range(n), j):
                        hits += _nu(np.delete(sub, list(cs), axis=1)) <= budget
                p = hits / count
            else:
                hits = 0
                for _ in range(subset_samples):
                    rs = rng.choice(n, size=i, replace=False)
                    cs = rng.choice(n, size=j, replace=False)
                    sub = np.delete(np.delete(Z, rs, axis=0), cs, axis=1)
                    hits += _nu(sub) <= budget
                p = hits / subset_samples
            total += p / ((n - i) * (n - j))
    return total


def convergence_table(region: RegionSpec, n_list, subset_samples: int = 200, seed: int = 0) -> list[tuple]:
    rng = np.random.Generator(np.random.PCG64(seed))
    lim = closed_form_limit(region.exponent)
    return [(n, estimate_Fn(region, n, subset_samples, rng), lim) for n in n_list]


def table_csv(rows) -> str:
    out = ["n,F_hat,limit"]
    for n, f, lim in rows:
        out.append(f"{n},{f:.10g},{lim:.10g}")
    return "\n".join(out) + "\n"
