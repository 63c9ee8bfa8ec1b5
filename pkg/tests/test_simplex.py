from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from specprop.errors import LPError
from specprop.simplex import solve_equality_lp


def test_exact_small_transport():
    # 2x2 transport: supplies (1/2, 1/2), demands (1, 0), unit off-diagonal cost
    c = [0, 1, 1, 0]
    A = [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]]
    b = [Fraction(1, 2), Fraction(1, 2), 1, 0]
    res = solve_equality_lp(c, A, b, exact=True)
    assert res.value == Fraction(1, 2)
    assert isinstance(res.value, Fraction)


def test_matches_reference_solver_on_random_instances():
    rng = np.random.default_rng(3)
    for _ in range(25):
        m, n = 3, 6
        A = rng.integers(-3, 4, size=(m, n)).astype(float)
        x0 = rng.uniform(0, 2, size=n)
        b = A @ x0
        c = rng.uniform(0, 5, size=n)
        ours = solve_equality_lp(c, A, b)
        ref = linprog(c, A_eq=A, b_eq=b, bounds=[(0, None)] * n, method="highs")
        assert ours.value == pytest.approx(ref.fun, abs=1e-8)
        # dual feasibility at optimum
        assert np.all(c - A.T @ ours.duals >= -1e-8)
        assert ours.duals @ b == pytest.approx(ours.value, abs=1e-8)


def test_redundant_rows_are_dropped():
    A = [[1, 1], [2, 2]]
    res = solve_equality_lp([1, 2], A, [1, 2])
    assert res.value == pytest.approx(1.0)


def test_infeasible_and_unbounded():
    with pytest.raises(LPError):
        solve_equality_lp([1, 1], [[1, 1]], [-1])
    with pytest.raises(LPError):
        solve_equality_lp([-1, 0], [[1, -1]], [0])


def test_deterministic_pivots():
    c = [1, 2, 0, 0]
    A = [[1, 1, 1, 0], [1, -1, 0, 1]]
    r1 = solve_equality_lp(c, A, [2, 1])
    r2 = solve_equality_lp(c, A, [2, 1])
    assert r1.basis == r2.basis and r1.pivots == r2.pivots
