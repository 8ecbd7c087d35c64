import math

import numpy as np
import pytest

from assign_lab.corpus import load_appendix
from assign_lab.engine import Engine, compute_F
from assign_lab.exact import eval_at
from assign_lab.montecarlo import (
    Estimate,
    SampleConfig,
    batch_min_cost,
    brute_force_k_assignment,
    check_eb_identity,
    estimate_F,
    estimate_use_probability,
    min_cost_k_assignment,
    resolve_workers,
)
from assign_lab.pattern import ZeroPattern


def test_solver_examples():
    assert min_cost_k_assignment([[1, 2], [3, 4]], 2)[0] == 5
    assert min_cost_k_assignment([[1, 2], [3, 4]], 1)[0] == 1
    assert min_cost_k_assignment([[1, 2], [3, 4]], 0) == (0.0, set())


def test_solver_matches_bruteforce():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        m0, n0 = rng.integers(1, 6, 2)
        k = int(rng.integers(1, min(m0, n0) + 1))
        C = rng.exponential(size=(m0, n0))
        C[rng.random((m0, n0)) < 0.25] = 0.0
        v, cells = min_cost_k_assignment(C, k)
        assert len(cells) == k
        assert len({r for r, _ in cells}) == k and len({c for _, c in cells}) == k
        assert math.isclose(v, sum(C[r, c] for r, c in cells), abs_tol=1e-12)
        assert math.isclose(v, brute_force_k_assignment(C, k), rel_tol=1e-12, abs_tol=1e-12)


def test_batch_matches_bruteforce():
    rng = np.random.default_rng(2)
    A = rng.exponential(size=(50, 3, 4))
    vals, _, _ = batch_min_cost(A, 2)
    for a, v in zip(A, vals):
        assert math.isclose(v, brute_force_k_assignment(a, 2))


def test_config_validation():
    with pytest.raises(ValueError):
        SampleConfig(2, 2, 3)
    with pytest.raises(ValueError):
        SampleConfig(2, 2, 2, samples=0)
    with pytest.raises(ValueError):
        SampleConfig(2, 2, 1, Z=ZeroPattern.of([(3, 1)]))


@pytest.mark.parametrize(
    "k,m0,Z,target",
    [
        (2, 2, ZeroPattern.empty(), 5 / 4),
        (3, 3, ZeroPattern.empty(), 49 / 36),
        (3, 3, ZeroPattern.of([(1, 1), (2, 2)]), 11 / 18),
    ],
)
def test_estimates_cover_exact_values(k, m0, Z, target):
    est = estimate_F(SampleConfig(m0, m0, k, Z, samples=100_000, seed=3))
    assert abs(est.z(target)) <= 4


def test_usage_probabilities():
    one = ZeroPattern.of([(1, 1)])
    e = estimate_use_probability(SampleConfig(2, 2, 2, one, samples=100_000), (0, 0))
    assert abs(e.z(3 / 4)) <= 3
    e = estimate_use_probability(SampleConfig(3, 3, 3, one, samples=100_000), (0, 0))
    assert abs(e.z(2 / 3)) <= 3
    e = estimate_use_probability(SampleConfig(2, 2, 1, samples=100_000), (0, 0))
    assert abs(e.z(1 / 4)) <= 4
    with pytest.raises(ValueError):
        estimate_use_probability(SampleConfig(2, 2, 1), (2, 0))


def test_sparse_solver_path():
    # 6x6 with k=5 is past the enumeration limit
    est = estimate_F(SampleConfig(6, 6, 5, samples=3000, seed=1))
    target = float(eval_at(compute_F(ZeroPattern.empty(), 5), 6, 6))
    assert abs(est.z(target)) <= 4


def test_determinism_across_workers():
    cfg = SampleConfig(3, 3, 3, samples=3 * 4096 + 11, seed=9)
    a = estimate_F(cfg)
    cfg.workers = 3
    b = estimate_F(cfg)
    assert a == b
    assert estimate_F(cfg) == b


def test_stderr_shrinks_with_samples():
    a = estimate_F(SampleConfig(3, 3, 2, samples=20_000, seed=4))
    b = estimate_F(SampleConfig(3, 3, 2, samples=40_000, seed=5))
    ratio = b.stderr / a.stderr
    assert abs(ratio - 1 / math.sqrt(2)) <= 0.2 / math.sqrt(2)


def test_env_overrides_workers(monkeypatch):
    monkeypatch.setenv("ASSIGN_LAB_THREADS", "4")
    assert resolve_workers(1) == 4
    monkeypatch.setenv("ASSIGN_LAB_THREADS", "junk")
    assert resolve_workers(2) == 2


def test_estimate_z():
    assert Estimate(1.0, 0.5, 10).z(0.0) == 2.0
    assert Estimate(1.0, 0.0, 10).z(1.0) == 0.0


def test_eb_single_line():
    r = check_eb_identity([0.0], [1.0], 10_000, seed=1)
    assert r.lhs.mean == 1.0 and r.lhs.stderr == 0.0
    assert abs(r.rhs.mean - 1.0) <= 4 * r.rhs.stderr


def test_eb_two_lines():
    # min(2x, 1 + x) switches lines at x = 1, so E(b_I) = 2(1 - 1/e) + 1/e
    r = check_eb_identity([0.0, 1.0], [2.0, 1.0], 1_000_000, seed=2)
    assert abs(r.z) <= 3
    assert abs(r.lhs.mean - (2 - math.exp(-1))) <= 4 * r.lhs.stderr


def test_eb_crossing_lines():
    # min(3 + x, 5x) switches at x = 3/4
    r = check_eb_identity([3.0, 0.0], [1.0, 5.0], 200_000, seed=3)
    assert abs(r.z) <= 3
    assert abs(r.lhs.mean - (5 - 4 * math.exp(-0.75))) <= 4 * r.lhs.stderr


def test_eb_validation():
    with pytest.raises(ValueError):
        check_eb_identity([], [], 10)
    with pytest.raises(ValueError):
        check_eb_identity([1.0], [1.0, 2.0], 10)


def test_appendix_values_at_concrete_size():
    eng = Engine()
    checked = 0
    for c in load_appendix():
        if c.specials or not 1 <= c.k <= 4:
            continue
        Z, _ = c.pattern()
        m0 = c.k + 1
        if Z.rows > m0 or Z.cols > m0:
            continue
        target = float(eval_at(compute_F(Z, c.k, engine=eng), m0, m0))
        est = estimate_F(SampleConfig(m0, m0, c.k, Z, samples=100_000, seed=c.id))
        assert abs(est.z(target)) <= 4, (c.id, est, target)
        checked += 1
    assert checked >= 10
