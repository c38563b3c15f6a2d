"""Maximin primal and divergence dual solvers.

Primal: maximize over strategies the worst-case expected utility of
terminal wealth (gain plus claim) across a polytope of priors, by
supergradient ascent with Polyak steps targeted at the dual value,
iterate averaging, and a smooth epigraph polish.

Dual: minimize V(lam * Q | priors) + lam * E_Q[claim] over scalings
lam > 0, martingale probabilities Q and prior mixtures.  The search
runs Frank-Wolfe style over the compact product (martingale polytope x
prior simplex) with an LP oracle for the Q step and an exact 1-d
minimization over lam inside every evaluation; a joint local polish in
the unnormalized measure nu = lam * Q finishes to tolerance.  Every
outer iterate is a feasible dual point evaluated exactly, so each
recorded dual value is a true upper bound on the primal optimum and
the weak-duality hook can compare entire iterate histories.

Both solvers record their iterate values and never divide by vanishing
gain or gradient norms; degenerate markets (all price increments zero)
are legal and short-circuit to the no-trading value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize

from .divergence import divergence, robust_divergence
from .errors import AssumptionError, SolverError
from .market import (
    PriorSet,
    ScenarioModel,
    model_vertex_utilities,
    utility_values,
    worst_case_expected_utility,
)
from .martingale import (
    build_constraints,
    find_equivalent_measure,
    in_dual_domain,
    is_member,
    linear_minimize,
)
from .utility import UtilitySpec

__all__ = [
    "SolverOptions",
    "PrimalResult",
    "DualResult",
    "GapReport",
    "solve_primal",
    "solve_dual",
    "duality_gap",
    "check_variational_bound",
    "dual_value_at_lambda",
    "epsilon_mixing_diagnostic",
    "EpsilonMixingRecord",
]

LAMBDA_BRACKET = (1e-8, 1e8)
GRAD_CLAMP = 1e12
RATIO_FLOOR = 1e-18
WEAK_DUALITY_SLACK = 1e-8


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and caps shared by both solvers."""

    tol: float = 1e-6
    max_iter_primal: int = 10_000
    max_iter_dual: int = 2_000
    seed: int = 0

    def scaled(self, max_iter: int) -> "SolverOptions":
        """Derive caps from a single CLI-style max-iter knob."""
        return replace(
            self,
            max_iter_primal=max_iter,
            max_iter_dual=max(200, max_iter // 5),
        )


@dataclass(frozen=True)
class PrimalResult:
    value: float
    strategy: np.ndarray
    active_vertex: int
    iterations: int
    converged: bool
    gap_vs_dual: float
    iterate_values: np.ndarray


@dataclass(frozen=True)
class DualResult:
    value: float
    lam: float
    measure: np.ndarray
    prior_weights: np.ndarray
    prior: np.ndarray
    iterations: int
    converged: bool
    fw_gap: float
    iterate_values: np.ndarray


@dataclass(frozen=True)
class GapReport:
    primal: PrimalResult
    dual: DualResult
    gap: float
    weak_duality_ok: bool
    worst_pair_violation: float


@dataclass(frozen=True)
class EpsilonMixingRecord:
    epsilon: float
    value: float
    delta: float


# ---------------------------------------------------------------------------
# shared dual machinery
# ---------------------------------------------------------------------------


def _dual_feasible_start(
    utility: UtilitySpec, priors: PriorSet, constraints: np.ndarray,
    lower: Optional[np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    """Equivalent martingale measure and a covering prior mixture.

    Raises AssumptionError("A3") when no equivalent martingale measure
    exists or every positive scaling has infinite divergence.
    """
    q0 = find_equivalent_measure(constraints)
    if q0 is None:
        raise AssumptionError(
            "A3", "the market admits no equivalent martingale measure"
        )
    if not in_dual_domain(utility, priors, q0):
        raise AssumptionError(
            "A3",
            "no equivalent martingale measure has finite divergence "
            "against the prior set",
        )
    if lower is not None:
        if np.any(lower < -1e-15) or float(lower.sum()) > 1.0 + 1e-12:
            raise ValueError("lower bounds must be nonnegative with mass <= 1")
    m = priors.n_vertices
    if math.isfinite(utility.v_at_zero):
        w0 = np.full(m, 1.0 / m)
    else:
        q_supp = q0 > 1e-12
        eligible = np.array(
            [bool(np.all(q_supp | ~(v > 1e-12))) for v in priors.vertices]
        )
        w0 = np.where(eligible, 1.0, 0.0)
        w0 /= w0.sum()
    return q0, w0


def _lambda_minimize(
    utility: UtilitySpec,
    q: np.ndarray,
    p: np.ndarray,
    payoff: np.ndarray,
) -> Tuple[float, float]:
    """Exact inner minimization over lam of the dual objective.

    phi(lam) = sum_w persp(lam q_w, p_w) + lam E_q[payoff] is strictly
    convex with phi'(lam) = E_q[V'(lam dq/dp) + payoff], increasing
    from -inf (Inada) to +inf, so the unique root is bracketed on
    [1e-8, 1e8] after geometric expansion and solved by Brent.
    Returns (lam, phi(lam)); (nan, +inf) when the pair (q, p) already
    has infinite divergence for every scaling.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(q[p <= 0.0] > 1e-15):
        return math.nan, math.inf
    if not math.isfinite(utility.v_at_zero) and np.any((p > 1e-15) & (q <= 1e-15)):
        return math.nan, math.inf
    active = q > 0.0
    if not np.any(active):
        return math.nan, math.inf
    qa = q[active]
    ratios = qa / p[active]
    b_mean = float(q @ payoff)

    def dphi(lam: float) -> float:
        return float(qa @ np.array([utility.v_prime(lam * r) for r in ratios])) + b_mean

    lo, hi = LAMBDA_BRACKET
    a, b = 1.0, 1.0
    while a > lo and dphi(a) > 0.0:
        a = max(lo, a / 8.0)
    while b < hi and dphi(b) < 0.0:
        b = min(hi, b * 8.0)
    if dphi(a) >= 0.0:
        lam = a
    elif dphi(b) <= 0.0:
        lam = b
    else:
        lam = float(brentq(dphi, a, b, xtol=1e-14, rtol=8.9e-16))
    return lam, _dual_value_exact(utility, lam, q, p, payoff)


def _dual_value_exact(
    utility: UtilitySpec, lam: float, q: np.ndarray, p: np.ndarray, payoff: np.ndarray
) -> float:
    """Objective at a feasible triple via the unclamped perspective sum."""
    return divergence(utility, lam * np.asarray(q), p) + lam * float(q @ payoff)


def _measure_slope(
    utility: UtilitySpec, lam: float, q: np.ndarray, p: np.ndarray, payoff: np.ndarray
) -> np.ndarray:
    """Clamped envelope gradient of the dual objective in the measure q."""
    g = np.empty(q.size)
    for w in range(q.size):
        if p[w] > 0.0:
            r = max(lam * q[w] / p[w], RATIO_FLOOR)
            g[w] = lam * (utility.v_prime(r) + payoff[w])
        else:
            g[w] = GRAD_CLAMP
    return np.clip(g, -GRAD_CLAMP, GRAD_CLAMP)


def _prior_slope(
    utility: UtilitySpec, lam: float, q: np.ndarray, p: np.ndarray
) -> np.ndarray:
    """Clamped gradient of the dual objective in the prior coordinates."""
    v0 = utility.v_at_zero if math.isfinite(utility.v_at_zero) else GRAD_CLAMP
    c = np.empty(q.size)
    for w in range(q.size):
        nu_w = lam * q[w]
        if p[w] > 0.0:
            if nu_w > 0.0:
                r = max(nu_w / p[w], RATIO_FLOOR)
                c[w] = utility.v(r) - r * utility.v_prime(r)
            else:
                c[w] = v0
        else:
            c[w] = -GRAD_CLAMP if nu_w > 0.0 else v0
    return np.clip(c, -GRAD_CLAMP, GRAD_CLAMP)


def _line_search_gammas() -> np.ndarray:
    coarse = np.array(
        [0.0, 1e-4, 1e-3, 0.01, 0.03, 0.06, 0.1, 0.18, 0.3, 0.45, 0.6, 0.8, 1.0]
    )
    return coarse


def _golden(f: Callable[[float], float], a: float, b: float, iters: int = 48) -> Tuple[float, float]:
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _independent_rows(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis for the row space; same solution set for A x = 0.

    Zero or dependent rows make the least-squares subproblem inside
    SLSQP singular (degenerate markets produce all-zero gain rows), so
    the equality constraints are rebuilt from the significant right
    singular vectors before any polish.
    """
    if a.shape[0] == 0:
        return a
    _, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros((0, a.shape[1]))
    return vt[s > 1e-12 * s[0]]


def _slsqp_polish(
    utility: UtilitySpec,
    priors: PriorSet,
    constraints: np.ndarray,
    payoff: np.ndarray,
    nu0: np.ndarray,
    w0: np.ndarray,
    lower: Optional[np.ndarray],
    fixed_total: Optional[float] = None,
) -> Optional[Tuple[float, float, np.ndarray, np.ndarray]]:
    """Joint local refinement in (nu, w) with nu = lam * q unnormalized.

    The objective sum_w persp(nu_w, P(w)_w) + <nu, payoff> is jointly
    convex and the constraints are linear, so a local method started at
    a feasible point lands on the global optimum; clamped gradients
    keep the Inada singularities at the boundary from breaking line
    searches.  Returns None when the refined point is worse or leaves
    the cone beyond tolerance.
    """
    verts = priors.vertices
    n = nu0.size
    m = verts.shape[0]
    big = 1e8

    def objective(x: np.ndarray):
        nu = np.maximum(x[:n], 0.0)
        w = x[n:]
        p = w @ verts
        val = float(nu @ payoff)
        g_nu = np.asarray(payoff, dtype=float).copy()
        g_p = np.zeros(n)
        v0 = utility.v_at_zero if math.isfinite(utility.v_at_zero) else big
        for i in range(n):
            if p[i] > 1e-300:
                r = max(nu[i] / p[i], RATIO_FLOOR)
                val += p[i] * min(utility.v(r), big)
                g_nu[i] += float(np.clip(utility.v_prime(r), -GRAD_CLAMP, GRAD_CLAMP))
                g_p[i] = float(
                    np.clip(utility.v(r) - r * utility.v_prime(r), -GRAD_CLAMP, GRAD_CLAMP)
                )
            else:
                if nu[i] > 0.0:
                    val += big * nu[i]
                    g_nu[i] += big
                    g_p[i] = -big
                else:
                    g_p[i] = min(v0, big)
        grad = np.concatenate([g_nu, verts @ g_p])
        return val, grad

    cons = []
    a_rows = _independent_rows(constraints)
    if a_rows.shape[0] > 0:
        cons.append(
            {
                "type": "eq",
                "fun": lambda x: a_rows @ x[:n],
                "jac": lambda x: np.hstack([a_rows, np.zeros((a_rows.shape[0], m))]),
            }
        )
    cons.append(
        {
            "type": "eq",
            "fun": lambda x: np.array([x[n:].sum() - 1.0]),
            "jac": lambda x: np.hstack([np.zeros((1, n)), np.ones((1, m))]),
        }
    )
    if fixed_total is not None:
        cons.append(
            {
                "type": "eq",
                "fun": lambda x: np.array([x[:n].sum() - fixed_total]),
                "jac": lambda x: np.hstack([np.ones((1, n)), np.zeros((1, m))]),
            }
        )
    if lower is not None and np.any(lower > 0.0):
        low = lower

        def lb_fun(x):
            return x[:n] - low * x[:n].sum()

        def lb_jac(x):
            return np.hstack([np.eye(n) - np.outer(low, np.ones(n)), np.zeros((n, m))])

        cons.append({"type": "ineq", "fun": lb_fun, "jac": lb_jac})

    x0 = np.concatenate([nu0, w0])
    bounds = [(0.0, None)] * n + [(0.0, 1.0)] * m
    try:
        res = minimize(
            objective,
            x0,
            jac=True,
            method="SLSQP",
            bounds=bounds,
            constraints=cons,
            options={"maxiter": 300, "ftol": 1e-14},
        )
    except (ValueError, FloatingPointError):
        return None
    x = res.x
    nu = np.maximum(x[:n], 0.0)
    w = np.maximum(x[n:], 0.0)
    if w.sum() <= 0.0:
        return None
    w = w / w.sum()
    total = float(nu.sum())
    if not math.isfinite(total) or total <= 1e-12:
        return None
    q = nu / total
    if not is_member(constraints, q, tol=1e-8):
        return None
    if lower is not None and np.any(q < lower - 1e-9):
        return None
    p = w @ verts
    if fixed_total is not None:
        lam, val = float(total), _dual_value_exact(utility, total, q, p, payoff)
        return val, lam, q, w
    lam, val = _lambda_minimize(utility, q, p, payoff)
    if not math.isfinite(val):
        return None
    return val, lam, q, w


def solve_dual(
    model: ScenarioModel,
    priors: PriorSet,
    utility: UtilitySpec,
    opts: SolverOptions = SolverOptions(),
    lower: Optional[np.ndarray] = None,
) -> DualResult:
    """Minimize V(lam Q | priors) + lam E_Q[claim] over the dual domain.

    Rounds of a short Frank-Wolfe warm start over (Q, prior weights)
    with the LP oracle and exact inner lam solves, each finished by the
    joint convex polish; after every round the Frank-Wolfe gap is
    recomputed at the current point and serves as the stopping
    certificate.  The reported value is recomputed from the returned
    triple with the exact perspective sum, so it is a certified upper
    bound for the primal problem.
    """
    constraints = build_constraints(model.market)
    payoff = model.claim.payoff
    verts = priors.vertices
    q0, w0 = _dual_feasible_start(utility, priors, constraints, lower)
    q, w = q0.copy(), w0.copy()
    lam, val = _lambda_minimize(utility, q, w @ verts, payoff)
    if not math.isfinite(val):
        raise AssumptionError(
            "A3", "the equivalent martingale measure has infinite divergence"
        )

    def certificate(lam_, q_, w_):
        p_ = w_ @ verts
        gq = _measure_slope(utility, lam_, q_, p_, payoff)
        gw = verts @ _prior_slope(utility, lam_, q_, p_)
        s_q, status = linear_minimize(constraints, gq, lower=lower)
        if status != "optimal" or s_q is None:
            raise SolverError(f"martingale LP oracle returned {status}")
        s_w = np.zeros(w_.size)
        s_w[int(np.argmin(gw))] = 1.0
        gap = float(gq @ (q_ - s_q) + gw @ (w_ - s_w))
        return gap, s_q, s_w

    iterates: List[float] = [val]
    fw_gap = math.inf
    total_iter = 0
    for budget in (60, 200, 200):
        budget = min(budget, max(1, opts.max_iter_dual - total_iter))
        stall = 0
        window: List[float] = []
        for _ in range(budget):
            total_iter += 1
            fw_gap, s_q, s_w = certificate(lam, q, w)
            if fw_gap <= 0.1 * opts.tol:
                break

            def along(g: float) -> float:
                qg = (1.0 - g) * q + g * s_q
                wg = (1.0 - g) * w + g * s_w
                _, v = _lambda_minimize(utility, qg, wg @ verts, payoff)
                return v

            gammas = _line_search_gammas()
            vals = np.array([along(g) for g in gammas])
            k = int(np.argmin(vals))
            g_lo = gammas[max(0, k - 1)]
            g_hi = gammas[min(len(gammas) - 1, k + 1)]
            g_star, v_star = _golden(along, g_lo, g_hi)
            if vals[k] < v_star:
                g_star, v_star = gammas[k], vals[k]
            if v_star < val - 1e-15:
                q = (1.0 - g_star) * q + g_star * s_q
                w = (1.0 - g_star) * w + g_star * s_w
                lam, val = _lambda_minimize(utility, q, w @ verts, payoff)
                iterates.append(val)
                stall = 0
            else:
                stall += 1
            window.append(val)
            # sublinear Frank-Wolfe tails are the polish's job
            if stall >= 3 or (len(window) >= 6 and window[-6] - val < 0.05 * opts.tol):
                break

        polished = _slsqp_polish(
            utility, priors, constraints, payoff, lam * q, w, lower
        )
        if polished is not None and polished[0] < val:
            val, lam, q, w = polished
            iterates.append(val)
        fw_gap, _, _ = certificate(lam, q, w)
        if fw_gap <= opts.tol or total_iter >= opts.max_iter_dual:
            break

    p = w @ verts
    value = _dual_value_exact(utility, lam, q, p, payoff)
    return DualResult(
        value=value,
        lam=float(lam),
        measure=q,
        prior_weights=w,
        prior=p,
        iterations=total_iter,
        converged=bool(fw_gap <= opts.tol),
        fw_gap=float(fw_gap),
        iterate_values=np.array(iterates),
    )


def dual_value_at_lambda(
    model: ScenarioModel,
    priors: PriorSet,
    utility: UtilitySpec,
    lam: float,
    opts: SolverOptions = SolverOptions(),
    lower: Optional[np.ndarray] = None,
) -> float:
    """Dual objective minimized over (Q, priors) at a pinned scaling.

    The slice nu with fixed total mass lam is convex jointly with the
    prior weights, so the same Frank-Wolfe plus polish machinery
    applies with the scaling frozen.  Used by shift-identity checks
    and pricing oracles.
    """
    constraints = build_constraints(model.market)
    payoff = model.claim.payoff
    verts = priors.vertices
    q0, w0 = _dual_feasible_start(utility, priors, constraints, lower)
    q, w = q0.copy(), w0.copy()

    def value_at(qq: np.ndarray, ww: np.ndarray) -> float:
        return _dual_value_exact(utility, lam, qq, ww @ verts, payoff)

    val = value_at(q, w)
    for _ in range(60):
        p = w @ verts
        gq = _measure_slope(utility, lam, q, p, payoff) * 1.0
        gw = verts @ _prior_slope(utility, lam, q, p)
        s_q, status = linear_minimize(constraints, gq, lower=lower)
        if status != "optimal":
            raise SolverError(f"martingale LP oracle returned {status}")
        s_w = np.zeros(w.size)
        s_w[int(np.argmin(gw))] = 1.0

        def along(g: float) -> float:
            return value_at((1.0 - g) * q + g * s_q, (1.0 - g) * w + g * s_w)

        g_star, v_star = _golden(along, 0.0, 1.0)
        if v_star < val - 1e-15:
            q = (1.0 - g_star) * q + g_star * s_q
            w = (1.0 - g_star) * w + g_star * s_w
            val = v_star
        else:
            break
    polished = _slsqp_polish(
        utility, priors, constraints, payoff, lam * q, w, lower, fixed_total=lam
    )
    if polished is not None and polished[0] < val:
        val = polished[0]
    return val


# ---------------------------------------------------------------------------
# primal
# ---------------------------------------------------------------------------


def _worst_case_and_gradient(
    model: ScenarioModel, priors: PriorSet, utility: UtilitySpec, theta: np.ndarray
) -> Tuple[float, int, np.ndarray]:
    gain_matrix = model.market.gain_matrix
    wealth = gain_matrix @ theta + model.claim.payoff
    uvals = utility_values(utility, wealth)
    per_vertex = model_vertex_utilities(priors, uvals)
    active = int(np.argmin(per_vertex))
    marginals = np.array(
        [min(utility.u_prime(float(x)), GRAD_CLAMP) for x in wealth]
    )
    grad = gain_matrix.T @ (priors.vertices[active] * marginals)
    return float(per_vertex[active]), active, grad


def solve_primal(
    model: ScenarioModel,
    priors: PriorSet,
    utility: UtilitySpec,
    opts: SolverOptions = SolverOptions(),
    dual_value: Optional[float] = None,
) -> PrimalResult:
    """Supergradient ascent with Polyak steps on the worst-case utility.

    The Polyak target is the dual optimum (computed on demand when not
    supplied), which upper-bounds the primal value, so the step size
    (target - F) / |g|^2 is well defined; a backoff factor handles the
    overshoot from the target's slack, the running average and the best
    iterate are both tracked, and a smooth epigraph polish (max t
    subject to every vertex expectation >= t) finishes locally.
    """
    if dual_value is None:
        dual_value = solve_dual(model, priors, utility, opts).value
    n_pos = model.market.n_positions
    theta = np.zeros(n_pos)
    val, active, grad = _worst_case_and_gradient(model, priors, utility, theta)
    best_val, best_theta = val, theta.copy()
    theta_sum = theta.copy()
    iterates: List[float] = [val]
    beta = 1.0
    n_iter = 0
    for n_iter in range(1, opts.max_iter_primal + 1):
        if dual_value - best_val <= opts.tol:
            break
        gnorm2 = float(grad @ grad)
        if gnorm2 < 1e-28:
            break  # flat direction: degenerate market or saturated utility
        step = beta * max(dual_value - val, 0.0) / gnorm2
        if step <= 0.0:
            break
        new_theta = theta + step * grad
        new_val, new_active, new_grad = _worst_case_and_gradient(
            model, priors, utility, new_theta
        )
        if new_val > val or beta <= 1e-6:
            theta, val, active, grad = new_theta, new_val, new_active, new_grad
            theta_sum += theta
            iterates.append(val)
            if new_val > best_val:
                best_val, best_theta = val, theta.copy()
            beta = min(1.0, beta * 1.5)
        else:
            beta *= 0.5

    # averaged iterate, occasionally better on kinked instances
    avg_theta = theta_sum / max(1, len(iterates))
    avg_val, _, _ = _worst_case_and_gradient(model, priors, utility, avg_theta)
    if avg_val > best_val:
        best_val, best_theta = avg_val, avg_theta
        iterates.append(avg_val)

    polished = _epigraph_polish(model, priors, utility, best_theta, best_val)
    if polished is not None:
        pol_theta, pol_val = polished
        if pol_val > best_val:
            best_val, best_theta = pol_val, pol_theta
            iterates.append(pol_val)

    value, active = worst_case_expected_utility(model, priors, utility, best_theta)
    gap = dual_value - value
    return PrimalResult(
        value=value,
        strategy=best_theta,
        active_vertex=active,
        iterations=n_iter,
        converged=bool(gap <= opts.tol),
        gap_vs_dual=float(gap),
        iterate_values=np.array(iterates),
    )


def _epigraph_polish(
    model: ScenarioModel,
    priors: PriorSet,
    utility: UtilitySpec,
    theta0: np.ndarray,
    val0: float,
) -> Optional[Tuple[np.ndarray, float]]:
    """max t s.t. E_P[U(wealth)] >= t per vertex, solved smoothly."""
    gain_matrix = model.market.gain_matrix
    payoff = model.claim.payoff
    verts = priors.vertices
    n_pos = gain_matrix.shape[1]
    if n_pos == 0:
        return None

    def vertex_values_and_jac(theta: np.ndarray):
        wealth = gain_matrix @ theta + payoff
        uvals = utility_values(utility, wealth)
        marg = np.array([min(utility.u_prime(float(x)), GRAD_CLAMP) for x in wealth])
        vals = verts @ np.where(np.isfinite(uvals), uvals, -1e30)
        jacs = verts * marg[None, :] @ gain_matrix
        return vals, jacs

    def cons_fun(z):
        vals, _ = vertex_values_and_jac(z[:-1])
        return vals - z[-1]

    def cons_jac(z):
        _, jacs = vertex_values_and_jac(z[:-1])
        return np.hstack([jacs, -np.ones((verts.shape[0], 1))])

    z0 = np.concatenate([theta0, [val0 - 1e-9]])
    try:
        res = minimize(
            lambda z: (-z[-1], np.concatenate([np.zeros(n_pos), [-1.0]])),
            z0,
            jac=True,
            method="SLSQP",
            constraints=[{"type": "ineq", "fun": cons_fun, "jac": cons_jac}],
            options={"maxiter": 200, "ftol": 1e-14},
        )
    except (ValueError, FloatingPointError):
        return None
    theta = res.x[:-1]
    vals, _ = vertex_values_and_jac(theta)
    return theta, float(np.min(vals))


# ---------------------------------------------------------------------------
# reports and diagnostics
# ---------------------------------------------------------------------------


def duality_gap(
    model: ScenarioModel,
    priors: PriorSet,
    utility: UtilitySpec,
    opts: SolverOptions = SolverOptions(),
) -> GapReport:
    """Solve both sides and compare every recorded iterate pair.

    Weak duality requires min over dual iterates minus max over primal
    iterates to stay above -1e-8; both histories contain only exactly
    evaluated feasible points, so a violation would expose a solver
    bug rather than numerical slack.
    """
    dual = solve_dual(model, priors, utility, opts)
    primal = solve_primal(model, priors, utility, opts, dual_value=dual.value)
    worst = float(np.min(dual.iterate_values) - np.max(primal.iterate_values))
    return GapReport(
        primal=primal,
        dual=dual,
        gap=float(dual.value - primal.value),
        weak_duality_ok=bool(worst >= -WEAK_DUALITY_SLACK),
        worst_pair_violation=worst,
    )


def check_variational_bound(utility: UtilitySpec, dual_value: float) -> Tuple[bool, float]:
    """Strict bound: any finite dual value sits below V(0) = sup U.

    Returns (holds, margin).  Vacuously true when V(0) = +inf.
    """
    v0 = utility.v_at_zero
    if not math.isfinite(v0):
        return True, math.inf
    return bool(dual_value < v0), float(v0 - dual_value)


def epsilon_mixing_diagnostic(
    model: ScenarioModel,
    priors: PriorSet,
    utility: UtilitySpec,
    opts: SolverOptions = SolverOptions(),
    epsilons: Sequence[float] = (1e-2, 1e-4, 1e-6),
    base_value: Optional[float] = None,
) -> List[EpsilonMixingRecord]:
    """Re-solve the dual restricted to measures mixed with the max-min one.

    Restricting Q to (1 - eps) * polytope + eps * Q_equiv keeps every
    candidate equivalent to the reference measure; when the optimizer
    already sits strictly inside, the restricted value matches the
    unrestricted one up to solver noise, which is the diagnostic for
    the dual attaining on equivalent measures.
    """
    constraints = build_constraints(model.market)
    q_equiv = find_equivalent_measure(constraints)
    if q_equiv is None:
        raise AssumptionError("A3", "the market admits no equivalent martingale measure")
    if base_value is None:
        base_value = solve_dual(model, priors, utility, opts).value
    out = []
    for eps in epsilons:
        restricted = solve_dual(
            model, priors, utility, opts, lower=float(eps) * q_equiv
        )
        out.append(
            EpsilonMixingRecord(
                epsilon=float(eps),
                value=restricted.value,
                delta=float(restricted.value - base_value),
            )
        )
    return out
