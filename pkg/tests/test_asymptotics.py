import math
from itertools import combinations

import numpy as np
import pytest

from assign_lab.asymptotics import (
    QUARTER,
    RegionSpec,
    closed_form_limit,
    convergence_table,
    estimate_Fn,
    in_region_D,
    limit_integral,
    m_ab,
    pnorm,
    table_csv,
    zero_cells,
)
from assign_lab.conjecture import main_conjecture_F
from assign_lab.exact import eval_at
from assign_lab.pattern import ZeroPattern


def test_m_ab_examples():
    assert math.isclose(m_ab(QUARTER, 1, 1), 2 - math.sqrt(2))
    assert m_ab(QUARTER, 1, 0) == 0
    assert math.isclose(m_ab(pnorm(2), 3, 4), 2.0)


def test_m_ab_domain():
    with pytest.raises(ValueError):
        m_ab(QUARTER, 0, 0)
    with pytest.raises(ValueError):
        m_ab(QUARTER, -1, 1)


def test_quarter_equals_p2_on_grid():
    for a in np.linspace(0, 3, 32):
        for b in np.linspace(0.01, 3, 32):
            assert abs(m_ab(QUARTER, a, b) - m_ab(pnorm(2), a, b)) <= 1e-12


def test_region_D_examples():
    assert in_region_D(QUARTER, 0, 0)
    assert not in_region_D(QUARTER, 1, 1)
    printed = (0.9**1.5 + 0.9**1.5) ** (2 / 3) > 1
    assert in_region_D(pnorm(3), 0.1, 0.1) == printed


def test_region_D_boundary_consistency():
    p = 3.0
    u = p / (p - 1)
    for x in np.linspace(0.05, 0.95, 19):
        a = 1 - x
        if a >= 1:
            continue
        b = (1 - a**u) ** (1 / u)  # boundary point (1-x)^u + (1-y)^u = 1
        y = 1 - b
        assert in_region_D(pnorm(p), x, y - 1e-9)
        assert not in_region_D(pnorm(p), x, y + 1e-9)


def test_limit_integral_examples():
    assert abs(limit_integral(QUARTER, 1e-6) - math.pi**2 / 24) <= 1e-6
    assert abs(limit_integral(pnorm(2), 1e-6) - limit_integral(QUARTER, 1e-6)) <= 1e-12
    assert abs(limit_integral(pnorm(4), 1e-6) - (3 / 4) ** 2 * math.pi**2 / 6) <= 1e-6


@pytest.mark.parametrize("p", [1.5, 2, 3, 4, 8])
def test_limit_integral_matches_closed_form(p):
    assert abs(limit_integral(pnorm(p), 1e-6) - closed_form_limit(p)) <= 1e-5


def test_limit_integral_matches_2d_quadrature():
    # independent route: integrate 1/((1-x)(1-y)) over D directly in (a, b) = (1-x, 1-y)
    from scipy import integrate

    u = pnorm(3).u
    val, _ = integrate.dblquad(
        lambda b, a: 1 / (a * b), 0, 1, lambda a: (1 - a**u) ** (1 / u), lambda a: 1.0, epsabs=1e-10
    )
    assert abs(val - limit_integral(pnorm(3), 1e-8)) <= 1e-6


def test_limit_integral_tol_bound():
    with pytest.raises(ValueError):
        limit_integral(QUARTER, 1e-12)


def test_closed_form_examples():
    assert math.isclose(closed_form_limit(2), math.pi**2 / 24)
    assert abs(closed_form_limit(1e6) - math.pi**2 / 6) < 1e-5
    assert math.isclose(closed_form_limit(3), 2 * math.pi**2 / 27)
    with pytest.raises(ValueError):
        closed_form_limit(1)


def test_region_validation():
    with pytest.raises(ValueError):
        pnorm(1)
    with pytest.raises(ValueError):
        RegionSpec("square")


def test_zero_cells_small():
    assert zero_cells(QUARTER, 1).tolist() == [[True]]
    g = zero_cells(QUARTER, 2)
    # far corners (1/2,1/2) misses the arc; all others reach it
    assert g.tolist() == [[False, True], [True, True]]


def test_Fn_small_n():
    rng = np.random.default_rng(0)
    assert estimate_Fn(QUARTER, 1, 10, rng) == 0.0
    # n = 2 the subsets are enumerated, so it must equal the exact formula
    g = zero_cells(QUARTER, 2)
    Z = ZeroPattern(2, 2, frozenset((i, j) for i in range(2) for j in range(2) if g[i, j]))
    exact = float(eval_at(main_conjecture_F(Z, 2), 2, 2))
    assert estimate_Fn(QUARTER, 2, 100, rng) == exact
    g = zero_cells(QUARTER, 3)
    Z = ZeroPattern(3, 3, frozenset((i, j) for i in range(3) for j in range(3) if g[i, j]))
    exact = float(eval_at(main_conjecture_F(Z, 3), 3, 3))
    assert math.isclose(estimate_Fn(QUARTER, 3, 100, rng), exact)


def test_Fn_bounds():
    with pytest.raises(ValueError):
        estimate_Fn(QUARTER, 41, 10, np.random.default_rng(0))


def test_table_csv():
    rows = convergence_table(QUARTER, [2, 4], subset_samples=50, seed=1)
    text = table_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == "n,F_hat,limit"
    assert len(lines) == 3
    assert rows == convergence_table(QUARTER, [2, 4], subset_samples=50, seed=1)
