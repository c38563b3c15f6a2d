"""Martingale measures of a finite market as a polytope with LP oracles.

A nonnegative vector q is a martingale measure for the market when
every one-period price increment has zero q-mean on every tree node,
which is the linear system A q = 0 with one row per (non-terminal
node, asset).  A is exactly the transpose of the market's gain matrix,
so <X, q> = 0 for every attainable gain X and every q in the cone by
construction.

Only LP oracles over the polytope {A q = 0, sum q = 1, q >= lower} are
exposed; the polytope's vertices are never enumerated.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from .market import Market, PriorSet
from .simplex import LPProblem, LPSolution, lp_solve
from .utility import UtilitySpec

__all__ = [
    "build_constraints",
    "is_member",
    "find_equivalent_measure",
    "linear_minimize",
    "in_dual_domain",
]

MEMBER_TOL = 1e-9
EQUIV_TOL = 1e-10
SUPPORT_TOL = 1e-12


def build_constraints(market: Market) -> np.ndarray:
    """Constraint matrix A with A q = 0 characterizing martingale measures."""
    a = market.gain_matrix.T.copy()
    a.flags.writeable = False
    return a


def is_member(constraints: np.ndarray, q: np.ndarray, tol: float = MEMBER_TOL) -> bool:
    """Cone membership: q >= 0 and all constraint residuals within tol."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.size != constraints.shape[1]:
        raise ValueError("measure length does not match the constraint matrix")
    if np.any(q < -tol):
        return False
    if constraints.size == 0:
        return True
    return float(np.max(np.abs(constraints @ q))) <= tol


def find_equivalent_measure(constraints: np.ndarray) -> Optional[np.ndarray]:
    """Martingale probability with maximal minimum coordinate, if positive.

    Solves max s s.t. A q = 0, sum q = 1, q_w >= s, q >= 0.  A strictly
    positive optimum certifies an equivalent martingale measure; the
    returned measure is the max-min one, which keeps later support
    checks well conditioned.  Returns None when no strictly positive
    measure exists (including when the polytope itself is empty).
    """
    n = constraints.shape[1]
    n_rows = constraints.shape[0]
    # variables: (q_1..q_n, s)
    c = np.zeros(n + 1)
    c[n] = -1.0
    a_eq = np.zeros((n_rows + 1, n + 1))
    if n_rows:
        a_eq[:n_rows, :n] = constraints
    a_eq[n_rows, :n] = 1.0
    b_eq = np.zeros(n_rows + 1)
    b_eq[n_rows] = 1.0
    a_ub = np.zeros((n, n + 1))
    for w in range(n):
        a_ub[w, w] = -1.0
        a_ub[w, n] = 1.0
    b_ub = np.zeros(n)
    sol = lp_solve(LPProblem(c, a_eq, b_eq, a_ub, b_ub))
    if sol.status != "optimal":
        return None
    if -sol.objective <= EQUIV_TOL:
        return None
    q = sol.x[:n]
    return q / q.sum()


def linear_minimize(
    constraints: np.ndarray,
    costs: np.ndarray,
    lower: Optional[np.ndarray] = None,
) -> Tuple[Optional[np.ndarray], str]:
    """LP oracle: argmin <costs, q> over {A q = 0, sum q = 1, q >= lower}.

    The lower bound defaults to 0; shifting q = lower + r reduces the
    problem to the standard nonnegative form.
    """
    costs = np.asarray(costs, dtype=float)
    n = constraints.shape[1]
    if lower is None:
        lower = np.zeros(n)
    lower = np.asarray(lower, dtype=float)
    n_rows = constraints.shape[0]
    a_eq = np.zeros((n_rows + 1, n))
    b_eq = np.zeros(n_rows + 1)
    if n_rows:
        a_eq[:n_rows] = constraints
        b_eq[:n_rows] = -constraints @ lower
    a_eq[n_rows] = 1.0
    b_eq[n_rows] = 1.0 - float(lower.sum())
    if b_eq[n_rows] < 0.0:
        return None, "infeasible"
    sol = lp_solve(LPProblem(costs, a_eq, b_eq))
    if sol.status != "optimal":
        return None, sol.status
    return sol.x + lower, "optimal"


def in_dual_domain(utility: UtilitySpec, priors: PriorSet, q: np.ndarray) -> bool:
    """Whether the divergence of some positive multiple of q is finite.

    The divergence against a prior P is finite iff q << P, and when
    V(0) = +inf additionally P << q.  For V(0) finite the uniform
    vertex average realizes the maximal support, so the check is
    supp(q) within supp of that average.  For V(0) = +inf a mixture
    with support exactly supp(q) must exist, which holds iff the
    vertices whose support fits inside supp(q) jointly cover it.
    """
    q = np.asarray(q, dtype=float)
    if np.any(q < -SUPPORT_TOL):
        return False
    q_supp = q > SUPPORT_TOL
    if np.isfinite(utility.v_at_zero):
        avg_supp = priors.vertex_average() > SUPPORT_TOL
        return bool(np.all(avg_supp | ~q_supp))
    eligible = [
        v for v in priors.vertices if np.all(q_supp | ~(v > SUPPORT_TOL))
    ]
    if not eligible:
        return False
    covered = np.zeros(q.size, dtype=bool)
    for v in eligible:
        covered |= v > SUPPORT_TOL
    return bool(np.all(covered == q_supp))
