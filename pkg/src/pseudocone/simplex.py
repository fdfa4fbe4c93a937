"""Dense two-phase simplex solver.

Sized for the tiny LPs behind support-function queries (a handful of
variables and constraints).  Bland's rule is used for both the entering
and the leaving variable, so cycling cannot occur.
"""

import numpy as np

from .errors import LPInfeasible, LPUnbounded

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _iterate(T, basis, allowed):
    m = T.shape[0] - 1
    while True:
        z = T[-1, :-1]
        enter = -1
        for j in allowed:  # Bland: smallest improving index
            if z[j] < -PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        best = np.inf
        for i in range(m):
            if T[i, enter] > PIVOT_TOL:
                ratio = T[i, -1] / T[i, enter]
                if ratio < best - 1e-12 or (
                    ratio < best + 1e-12 and (leave < 0 or basis[i] < basis[leave])
                ):
                    leave = i
                    best = ratio
        if leave < 0:
            raise LPUnbounded("simplex: improving direction with no blocking row")
        _pivot(T, basis, leave, enter)


def _set_cost_row(T, basis, cost):
    T[-1, :] = 0.0
    T[-1, : cost.size] = cost
    for r, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[r]


def solve_standard(c, A, b):
    """Minimize c.x subject to A x = b, x >= 0.

    Returns (x, objective).  Raises LPInfeasible / LPUnbounded.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, nv = A.shape
    flip = b < 0.0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # phase 1 with one artificial per row
    T = np.zeros((m + 1, nv + m + 1))
    T[:m, :nv] = A
    T[:m, nv : nv + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(nv, nv + m))
    cost1 = np.zeros(nv + m)
    cost1[nv:] = 1.0
    _set_cost_row(T, basis, cost1)
    _iterate(T, basis, range(nv + m))
    if -T[-1, -1] > FEAS_TOL:
        raise LPInfeasible("simplex: phase-1 objective positive")

    # drive leftover artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= nv:
            for j in range(nv):
                if abs(T[i, j]) > PIVOT_TOL:
                    _pivot(T, basis, i, j)
                    break

    cost2 = np.zeros(nv + m)
    cost2[:nv] = c
    _set_cost_row(T, basis, cost2)
    _iterate(T, basis, range(nv))

    x = np.zeros(nv)
    for i, j in enumerate(basis):
        if j < nv:
            x[j] = T[i, -1]
    return x, float(-T[-1, -1])


def lp_maximize(objective, A_ub, b_ub):
    """Maximize objective.x over {x free : A_ub x <= b_ub}.

    Free variables are split into positive parts and slacks are appended
    before handing off to the standard-form solver.
    """
    A_ub = np.asarray(A_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    obj = np.asarray(objective, dtype=float)
    m, n = A_ub.shape
    A = np.hstack([A_ub, -A_ub, np.eye(m)])
    c = np.concatenate([-obj, obj, np.zeros(m)])
    y, val = solve_standard(c, A, b_ub)
    x = y[:n] - y[n : 2 * n]
    return x, float(-val)


def feasible_eq(A_eq, b_eq):
    """True iff {x >= 0 : A_eq x = b_eq} is nonempty."""
    A_eq = np.asarray(A_eq, dtype=float)
    try:
        solve_standard(np.zeros(A_eq.shape[1]), A_eq, b_eq)
    except LPInfeasible:
        return False
    return True
