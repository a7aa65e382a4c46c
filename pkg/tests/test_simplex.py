"""LP core checked against scipy's HiGHS on randomized instances."""

import numpy as np
import pytest
from scipy.optimize import linprog

from leximax.simplex import LpResult, SimplexFailure, solve_lp


def scipy_reference(a, senses, b, c, lo, hi):
    """Independent solve of the same LP via scipy (minimizes, so negate)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    rows_ub, rhs_ub, rows_eq, rhs_eq = [], [], [], []
    for row, sense, rhs in zip(a, senses, b):
        if sense == "<=":
            rows_ub.append(row)
            rhs_ub.append(rhs)
        elif sense == ">=":
            rows_ub.append(-row)
            rhs_ub.append(-rhs)
        else:
            rows_eq.append(row)
            rhs_eq.append(rhs)
    res = linprog(
        -np.asarray(c, dtype=float),
        A_ub=np.array(rows_ub) if rows_ub else None,
        b_ub=np.array(rhs_ub) if rhs_ub else None,
        A_eq=np.array(rows_eq) if rows_eq else None,
        b_eq=np.array(rhs_eq) if rhs_eq else None,
        bounds=list(zip(lo, hi)),
        method="highs",
    )
    if res.status == 0:
        return "optimal", -res.fun
    if res.status == 2:
        return "infeasible", None
    if res.status == 3:
        return "unbounded", None
    raise RuntimeError(f"scipy status {res.status}")


def random_lp(rng):
    m = rng.integers(1, 9)
    n = rng.integers(1, 9)
    a = np.round(rng.uniform(-4, 4, size=(m, n)), 2)
    a[rng.random(size=a.shape) < 0.35] = 0.0
    b = np.round(rng.uniform(-6, 10, size=m), 2)
    c = np.round(rng.uniform(-5, 5, size=n), 2)
    senses = rng.choice(["<=", ">=", "=="], size=m, p=[0.7, 0.2, 0.1]).tolist()
    lo = np.where(rng.random(n) < 0.9, 0.0, -3.0)
    hi = np.where(rng.random(n) < 0.85, rng.uniform(1, 12, size=n).round(2), np.inf)
    # Occasionally make a variable fully free.
    free = rng.random(n) < 0.05
    lo[free], hi[free] = -np.inf, np.inf
    return a, senses, b, c, lo, hi


def test_simple_box():
    res = solve_lp([[1.0]], ["<="], [3.0], [1.0], [0.0], [np.inf])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(3.0, abs=1e-9)


def test_equality_and_free_variable():
    # max x + y s.t. x + y == 4, x - y <= 1, y free
    res = solve_lp(
        [[1.0, 1.0], [1.0, -1.0]],
        ["==", "<="],
        [4.0, 1.0],
        [1.0, 1.0],
        [0.0, -np.inf],
        [np.inf, np.inf],
    )
    assert res.status == "optimal"
    assert res.objective == pytest.approx(4.0, abs=1e-8)


def test_infeasible():
    res = solve_lp(
        [[1.0], [1.0]], ["<=", ">="], [1.0, 2.0], [1.0], [0.0], [np.inf]
    )
    assert res.status == "infeasible"


def test_unbounded():
    res = solve_lp([[1.0, -1.0]], ["<="], [1.0], [1.0, 0.0], [0.0, 0.0], [np.inf, np.inf])
    assert res.status == "unbounded"


def test_negative_lower_bounds():
    # max -x with x in [-5, -2]
    res = solve_lp(np.zeros((0, 1)), [], [], [-1.0], [-5.0], [-2.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(5.0, abs=1e-9)


def test_degenerate_rows_terminate():
    # Many redundant rows through the same vertex; must not cycle.
    a = np.array([[1.0, 1.0], [2.0, 2.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    res = solve_lp(a, ["<="] * 5, [2.0, 4.0, 2.0, 2.0, 2.0], [1.0, 1.0],
                   [0.0, 0.0], [np.inf, np.inf])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(2.0, abs=1e-8)


def test_matches_scipy_on_random_instances():
    rng = np.random.default_rng(20240517)
    checked = 0
    for _ in range(300):
        a, senses, b, c, lo, hi = random_lp(rng)
        mine = solve_lp(a, senses, b, c, lo, hi)
        ref_status, ref_obj = scipy_reference(a, senses, b, c, lo, hi)
        assert mine.status == ref_status, (a, senses, b, c, lo, hi)
        if ref_status == "optimal":
            assert mine.objective == pytest.approx(ref_obj, abs=1e-6, rel=1e-7)
            # The returned point must actually be feasible.
            x = mine.x
            assert np.all(x >= lo - 1e-7) and np.all(x <= hi + 1e-7)
            prod = a @ x
            for val, sense, rhs in zip(prod, senses, b):
                if sense == "<=":
                    assert val <= rhs + 1e-6
                elif sense == ">=":
                    assert val >= rhs - 1e-6
                else:
                    assert val == pytest.approx(rhs, abs=1e-6)
            checked += 1
    assert checked > 100  # plenty of feasible-bounded cases exercised
