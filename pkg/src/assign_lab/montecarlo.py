"""Monte Carlo estimates of optimal k-assignment costs.

Samples are drawn in fixed-size blocks; block ``b`` always uses the
generator seeded by ``SeedSequence(seed, spawn_key=(b,))``, so the numbers
do not depend on how many worker processes share the blocks.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from itertools import combinations, permutations
from multiprocessing import get_context
from typing import Iterable, Optional

import numpy as np

from .pattern import ZeroPattern

BLOCK = 4096
ENUM_LIMIT = 2000  # largest number of k-assignments handled by the vectorized path


@dataclass
class SampleConfig:
    m0: int
    n0: int
    k: int
    Z: ZeroPattern = field(default_factory=ZeroPattern.empty)
    samples: int = 10_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.k < 1 or self.k > min(self.m0, self.n0):
            raise ValueError("need 1 <= k <= min(m0, n0)")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.Z.rows > self.m0 or self.Z.cols > self.n0:
            raise ValueError("zero pattern does not fit the matrix")


@dataclass
class Estimate:
    mean: float
    stderr: float
    samples: int

    def z(self, target: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == target else math.copysign(math.inf, self.mean - target)
        return (self.mean - target) / self.stderr


# ---------------------------------------------------------------------------
# exact solver


def min_cost_k_assignment(costs, k: int) -> tuple[float, set]:
    """Successive shortest augmenting paths with Johnson potentials."""
    C = np.asarray(costs, dtype=float)
    m0, n0 = C.shape
    if not 0 <= k <= min(m0, n0):
        raise ValueError("need k <= min(rows, cols)")
    row_match = [-1] * m0
    col_match = [-1] * n0
    pot_r = [0.0] * m0
    pot_c = [0.0] * n0
    for _ in range(k):
        # Dijkstra from a virtual source joined to every free row, on reduced costs
        INF = math.inf
        dist_r = [0.0 if row_match[i] < 0 else INF for i in range(m0)]
        dist_c = [INF] * n0
        prev_c = [-1] * n0
        done_r = [False] * m0
        done_c = [False] * n0
        while True:
            best, bi, is_row = INF, -1, True
            for i in range(m0):
                if not done_r[i] and dist_r[i] < best:
                    best, bi, is_row = dist_r[i], i, True
            for j in range(n0):
                if not done_c[j] and dist_c[j] < best:
                    best, bi, is_row = dist_c[j], j, False
            if bi < 0:
                break
            if is_row:
                done_r[bi] = True
                row = C[bi]
                for j in range(n0):
                    if col_match[j] == bi or done_c[j]:
                        continue
                    d = best + row[j] + pot_r[bi] - pot_c[j]
                    if d < dist_c[j]:
                        dist_c[j] = d
                        prev_c[j] = bi
            else:
                done_c[bi] = True
                i = col_match[bi]
                if i < 0:
                    continue
                # matched edge traversed backwards with reduced cost zero
                d = best - C[i, bi] - pot_r[i] + pot_c[bi]
                if d < dist_r[i]:
                    dist_r[i] = d
        # cheapest free column by true distance (reduced distance plus its potential)
        target, bestd = -1, math.inf
        for j in range(n0):
            if col_match[j] < 0 and dist_c[j] + pot_c[j] < bestd:
                bestd, target = dist_c[j] + pot_c[j], j
        if target < 0:
            raise RuntimeError("no augmenting path")
        for i in range(m0):
            if dist_r[i] < math.inf:
                pot_r[i] += dist_r[i]
        for j in range(n0):
            if dist_c[j] < math.inf:
                pot_c[j] += dist_c[j]
        j = target
        while j >= 0:
            i = prev_c[j]
            nxt = row_match[i]
            row_match[i] = j
            col_match[j] = i
            j = nxt
    cells = {(i, row_match[i]) for i in range(m0) if row_match[i] >= 0}
    total = float(sum(C[i, j] for i, j in cells))
    return total, cells


def brute_force_k_assignment(costs, k: int) -> float:
    C = np.asarray(costs, dtype=float)
    m0, n0 = C.shape
    best = math.inf
    for rows in combinations(range(m0), k):
        for cols in permutations(range(n0), k):
            s = sum(C[r, c] for r, c in zip(rows, cols))
            if s < best:
                best = s
    return best


def _assignment_table(m0: int, n0: int, k: int):
    rows, cols = [], []
    for rs in combinations(range(m0), k):
        for cs in permutations(range(n0), k):
            rows.append(rs)
            cols.append(cs)
    return np.array(rows, dtype=np.intp), np.array(cols, dtype=np.intp)


def _count_assignments(m0: int, n0: int, k: int) -> int:
    return math.comb(m0, k) * math.perm(n0, k)


def batch_min_cost(costs: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Vectorized exhaustive optimum over a batch of small matrices.

    Returns (costs, index of the optimal assignment, assignment table).
    """
    _, m0, n0 = costs.shape
    rows, cols = _assignment_table(m0, n0, k)
    vals = costs[:, rows, cols].sum(axis=2)
    idx = vals.argmin(axis=1)
    return vals[np.arange(len(idx)), idx], idx, (rows, cols)


# ---------------------------------------------------------------------------
# sampling


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _draw(rng: np.random.Generator, count: int, m0: int, n0: int, Z: ZeroPattern) -> np.ndarray:
    u = 1.0 - rng.random((count, m0, n0))  # uniform on (0, 1]
    a = -np.log(u)
    for r, c in Z.zeros:
        a[:, r, c] = 0.0
    return a


def _block_values(args) -> np.ndarray:
    cfg, block, count, cell = args
    rng = _block_rng(cfg.seed, block)
    a = _draw(rng, count, cfg.m0, cfg.n0, cfg.Z)
    if _count_assignments(cfg.m0, cfg.n0, cfg.k) <= ENUM_LIMIT:
        vals, idx, (rows, cols) = batch_min_cost(a, cfg.k)
        if cell is None:
            return vals
        r, c = cell
        hit = ((rows == r) & (cols == c)).any(axis=1)
        return hit[idx].astype(float)
    out = np.empty(count)
    for s in range(count):
        v, cells = min_cost_k_assignment(a[s], cfg.k)
        out[s] = v if cell is None else float(tuple(cell) in cells)
    return out


def _moments(x: np.ndarray) -> tuple[int, float, float]:
    n = len(x)
    mu = float(x.mean())
    return n, mu, float(((x - mu) ** 2).sum())


def _combine(parts: Iterable[tuple[int, float, float]]) -> tuple[int, float, float]:
    # pairwise update in block order, so the result is independent of scheduling
    n, mu, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        if nb == 0:
            continue
        tot = n + nb
        delta = mb - mu
        mu = mu + delta * nb / tot
        m2 = m2 + m2b + delta * delta * n * nb / tot
        n = tot
    return n, mu, m2


def _run(cfg: SampleConfig, cell=None) -> Estimate:
    nblocks = (cfg.samples + BLOCK - 1) // BLOCK
    jobs = [(cfg, b, min(BLOCK, cfg.samples - b * BLOCK), cell) for b in range(nblocks)]
    workers = resolve_workers(cfg.workers)
    if workers > 1 and nblocks > 1:
        with get_context().Pool(min(workers, nblocks)) as pool:
            vals = pool.map(_block_values, jobs)
    else:
        vals = [_block_values(j) for j in jobs]
    n, mu, m2 = _combine(_moments(v) for v in vals)
    sd = math.sqrt(m2 / (n - 1)) if n > 1 else 0.0
    return Estimate(mu, sd / math.sqrt(n), n)


def resolve_workers(workers: int) -> int:
    env = os.environ.get("ASSIGN_LAB_THREADS")
    if env:
        try:
            workers = int(env)
        except ValueError:
            pass
    return max(1, workers)


def estimate_F(cfg: SampleConfig) -> Estimate:
    return _run(cfg)


def estimate_use_probability(cfg: SampleConfig, cell) -> Estimate:
    """Fraction of samples whose optimal assignment uses ``cell`` (0-based).

    Zeros can produce tied optima; the solver's deterministic choice is
    reported in that case.
    """
    r, c = cell
    if not (0 <= r < cfg.m0 and 0 <= c < cfg.n0):
        raise ValueError("cell outside the matrix")
    return _run(cfg, (r, c))


@dataclass
class EBResult:
    lhs: Estimate
    rhs: Estimate
    z: float


def check_eb_identity(a, b, samples: int, seed: int = 0) -> EBResult:
    """Compare E(b_I) with E(a_I + b_I X) - min a over one stream of X."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or len(a) == 0 or a.shape != b.shape:
        raise ValueError("a and b must be nonempty and of equal length")
    rng = _block_rng(seed, 0)
    x = -np.log(1.0 - rng.random(samples))
    vals = a[None, :] + b[None, :] * x[:, None]
    idx = vals.argmin(axis=1)
    lhs = b[idx]
    rhs = vals[np.arange(samples), idx] - a.min()

    def est(v):
        sd = float(v.std(ddof=1)) if samples > 1 else 0.0
        return Estimate(float(v.mean()), sd / math.sqrt(samples), samples)

    diff = est(lhs - rhs)
    z = diff.z(0.0)
    return EBResult(est(lhs), est(rhs), z)
