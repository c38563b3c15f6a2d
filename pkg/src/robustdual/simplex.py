"""Dense two-phase simplex for the small LPs used by the martingale cone.

Problems here have at most a few dozen variables, so a dense tableau
with Bland's anti-cycling rule is simpler to audit than a revised
implementation and is exactly deterministic, which the solvers rely on
for reproducible runs.  Reduced costs are recomputed from the tableau
each iteration; at these sizes that is cheaper than carrying an
objective row correctly through degenerate pivots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

__all__ = ["LPProblem", "LPSolution", "lp_solve", "LPError"]

FEAS_TOL = 1e-9


class LPError(RuntimeError):
    """Internal simplex failure (iteration cap); not a model status."""


@dataclass(frozen=True)
class LPProblem:
    """min c @ x  s.t.  a_eq x = b_eq, a_ub x <= b_ub, x >= 0."""

    c: np.ndarray
    a_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    a_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None


@dataclass(frozen=True)
class LPSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]
    objective: Optional[float]


def _pivot(T: np.ndarray, b: np.ndarray, basis: List[int], row: int, col: int) -> None:
    piv = T[row, col]
    T[row] /= piv
    b[row] /= piv
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            factor = T[r, col]
            T[r] -= factor * T[row]
            b[r] -= factor * b[row]
    basis[row] = col


def _phase(
    T: np.ndarray,
    b: np.ndarray,
    basis: List[int],
    c: np.ndarray,
    allowed: np.ndarray,
    tol: float,
) -> str:
    m, n = T.shape
    max_iter = 200 + 40 * (m + n)
    for _ in range(max_iter):
        reduced = c - c[basis] @ T
        enter = -1
        for j in range(n):
            # Bland: first admissible column with negative reduced cost
            if allowed[j] and j not in basis and reduced[j] < -tol:
                enter = j
                break
        if enter < 0:
            return "optimal"
        col = T[:, enter]
        best_row = -1
        best_ratio = math.inf
        for i in range(m):
            if col[i] > tol:
                ratio = b[i] / col[i]
                if best_row < 0 or ratio < best_ratio - 1e-12 * (1.0 + abs(ratio)):
                    best_row, best_ratio = i, ratio
                elif ratio <= best_ratio + 1e-12 * (1.0 + abs(ratio)) and (
                    basis[i] < basis[best_row]
                ):
                    # Bland tie-break: leave the lowest-index basic variable
                    best_row, best_ratio = i, min(best_ratio, ratio)
        if best_row < 0:
            return "unbounded"
        _pivot(T, b, basis, best_row, enter)
    raise LPError("simplex iteration cap exceeded")


def lp_solve(problem: LPProblem, tol: float = FEAS_TOL) -> LPSolution:
    """Two-phase dense simplex with Bland's rule.

    Returns an optimal vertex, or status "infeasible"/"unbounded".
    Feasibility of the returned point holds within tol on every row.
    """
    c = np.asarray(problem.c, dtype=float).copy()
    n = c.size
    rows: List[np.ndarray] = []
    rhs: List[float] = []
    n_slack = 0 if problem.a_ub is None else np.atleast_2d(problem.a_ub).shape[0]

    if problem.a_eq is not None:
        a_eq = np.atleast_2d(np.asarray(problem.a_eq, dtype=float))
        b_eq = np.atleast_1d(np.asarray(problem.b_eq, dtype=float))
        for r, bv in zip(a_eq, b_eq):
            rows.append(np.concatenate([r, np.zeros(n_slack)]))
            rhs.append(float(bv))
    if problem.a_ub is not None:
        a_ub = np.atleast_2d(np.asarray(problem.a_ub, dtype=float))
        b_ub = np.atleast_1d(np.asarray(problem.b_ub, dtype=float))
        for k, (r, bv) in enumerate(zip(a_ub, b_ub)):
            slack = np.zeros(n_slack)
            slack[k] = 1.0
            rows.append(np.concatenate([r, slack]))
            rhs.append(float(bv))

    n_total = n + n_slack
    if not rows:
        # no constraints: optimum at 0 unless some cost is negative
        if np.any(c < -tol):
            return LPSolution("unbounded", None, None)
        return LPSolution("optimal", np.zeros(n), 0.0)

    A = np.vstack(rows)
    b = np.array(rhs, dtype=float)
    neg = b < 0.0
    A[neg] *= -1.0
    b[neg] *= -1.0
    m = A.shape[0]

    # phase 1: artificial basis
    T = np.hstack([A, np.eye(m)])
    bb = b.copy()
    basis = list(range(n_total, n_total + m))
    c1 = np.concatenate([np.zeros(n_total), np.ones(m)])
    allowed = np.ones(n_total + m, dtype=bool)
    status = _phase(T, bb, basis, c1, allowed, tol)
    if status != "optimal":
        raise LPError("phase 1 cannot be unbounded")
    if float(c1[basis] @ bb) > tol:
        return LPSolution("infeasible", None, None)

    # drive remaining artificials out of the basis (degenerate rows)
    drop: List[int] = []
    for i in range(m):
        if basis[i] >= n_total:
            piv = -1
            for j in range(n_total):
                if abs(T[i, j]) > tol and j not in basis:
                    piv = j
                    break
            if piv >= 0:
                _pivot(T, bb, basis, i, piv)
            else:
                drop.append(i)
    if drop:
        keep = [i for i in range(m) if i not in drop]
        T = T[keep]
        bb = bb[keep]
        basis = [basis[i] for i in keep]
        m = len(keep)

    # phase 2 on structural plus slack columns only
    allowed = np.concatenate([np.ones(n_total, dtype=bool), np.zeros(len(T[0]) - n_total, dtype=bool)])
    c2 = np.concatenate([c, np.zeros(n_slack), np.zeros(T.shape[1] - n_total)])
    status = _phase(T, bb, basis, c2, allowed, tol)
    if status == "unbounded":
        return LPSolution("unbounded", None, None)

    x = np.zeros(T.shape[1])
    for i, j in enumerate(basis):
        x[j] = bb[i]
    sol = np.maximum(x[:n], 0.0)  # clip -0.0 and sub-tol noise
    return LPSolution("optimal", sol, float(c @ sol))
