import numpy as np
import pytest
from scipy.optimize import linprog

from pseudocone.errors import LPInfeasible, LPUnbounded
from pseudocone.simplex import feasible_eq, lp_maximize, solve_standard


def test_standard_form_basic():
    # min -x1 - 2 x2 s.t. x1 + x2 + s = 4, x1 + 3 x2 + s2 = 6;
    # optimum at the vertex (3, 1)
    c = np.array([-1.0, -2.0, 0.0, 0.0])
    A = np.array([[1.0, 1.0, 1.0, 0.0], [1.0, 3.0, 0.0, 1.0]])
    b = np.array([4.0, 6.0])
    x, obj = solve_standard(c, A, b)
    assert obj == pytest.approx(-5.0)
    assert x[:2] == pytest.approx([3.0, 1.0])


def test_infeasible():
    # x1 = -1 with x1 >= 0
    with pytest.raises(LPInfeasible):
        solve_standard(np.zeros(1), np.array([[1.0]]), np.array([-1.0]))


def test_unbounded():
    # max x over x <= anything from below only
    with pytest.raises(LPUnbounded):
        lp_maximize(np.array([1.0]), np.array([[-1.0]]), np.array([0.0]))


def test_maximize_free_variables():
    # max x + y s.t. x + y <= 2, x - y <= 0, -x <= 3
    obj = np.array([1.0, 1.0])
    A = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 0.0]])
    b = np.array([2.0, 0.0, 3.0])
    x, val = lp_maximize(obj, A, b)
    assert val == pytest.approx(2.0)
    assert np.all(A @ x <= b + 1e-9)


def test_degenerate_vertex_terminates():
    # redundant constraints through one vertex; Bland's rule must not cycle
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
    b = np.array([1.0, 1.0, 2.0, 4.0])
    x, val = lp_maximize(np.array([1.0, 1.0]), A, b)
    assert val == pytest.approx(2.0)


def test_against_scipy_on_random_problems():
    rng = np.random.default_rng(0)
    for _ in range(60):
        n, m = rng.integers(2, 5), rng.integers(3, 9)
        # box rows keep the problem bounded; origin keeps it feasible
        A = np.vstack([rng.normal(size=(m, n)), np.eye(n), -np.eye(n)])
        b = np.concatenate([rng.uniform(0.2, 2.0, size=m),
                            np.full(2 * n, 3.0)])
        c = rng.normal(size=n)
        ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * n,
                      method="highs")
        x, val = lp_maximize(c, A, b)
        assert ref.status == 0
        assert val == pytest.approx(-ref.fun, abs=1e-7)
        assert np.all(A @ x <= b + 1e-7)


def test_feasible_eq():
    # x1 + x2 = 1 with x >= 0 is feasible; x1 + x2 = -1 is not
    assert feasible_eq(np.array([[1.0, 1.0]]), np.array([1.0]))
    assert not feasible_eq(np.array([[1.0, 1.0]]), np.array([-1.0]))
