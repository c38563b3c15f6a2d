"""Utility indifference bounds for a claim under the robust dual.

The buyer price of a payoff B is the largest cash amount p such that
buying B for p does not lower the optimal robust utility.  It solves

    p_b(B) = inf over martingale measures Q of  E_Q[B] + gamma(Q),
    gamma(Q) = inf over lam > 0 of (R(lam Q) - v0) / lam,

where R is the robust divergence (minimized over prior mixtures) and
v0 the claimless optimal value.  R(nu) >= v0 for every feasible nu, so
gamma >= 0, and gamma vanishes exactly on measures attaining the
claimless dual; on a complete market the infimum collapses to the
unique measure and the price is a plain expectation.  The seller price
is the reflection p_s(B) = -p_b(-B), and p_b <= p_s always.

The search shifts the claim by ||B||_inf + 1 first (prices translate
with constants), which makes the numerator of the ratio objective
positive, hence the objective pseudoconvex over the martingale cone:
stationary points of the joint polish are global minima.

A second, independent route bisects the defining indifference relation
value(B - p) >= value(0) on the dual optimum directly; agreement of
the two routes is one of the package's acceptance checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from .divergence import divergence, robust_divergence
from .errors import SolverError
from .market import Claim, PriorSet, ScenarioModel
from .martingale import build_constraints, is_member, linear_minimize
from .solve import (
    GRAD_CLAMP,
    RATIO_FLOOR,
    SolverOptions,
    _dual_feasible_start,
    _golden,
    _independent_rows,
    _measure_slope,
    _prior_slope,
    solve_dual,
)
from .utility import UtilitySpec

__all__ = [
    "PriceReport",
    "claimless_value",
    "penalty_gamma",
    "indifference_price",
    "price_by_bisection",
]

GAMMA_SLACK = 1e-7  # numeric gamma may undershoot zero by solver noise
LOG_LAMBDA_RANGE = (math.log(1e-8), math.log(1e8))


@dataclass(frozen=True)
class PriceReport:
    buyer: float
    seller: float
    claimless: float
    measure_buy: np.ndarray
    measure_sell: np.ndarray


def _stripped(model: ScenarioModel) -> ScenarioModel:
    return ScenarioModel(
        model.space, model.market, Claim(np.zeros(model.claim.payoff.size))
    )


def claimless_value(
    model: ScenarioModel,
    priors: PriorSet,
    utility: UtilitySpec,
    opts: SolverOptions = SolverOptions(),
) -> float:
    """Optimal dual value with the claim stripped from the model."""
    return solve_dual(_stripped(model), priors, utility, opts).value


def _ratio_profile(
    utility: UtilitySpec, priors: PriorSet, q: np.ndarray, v0: float
):
    """gamma evaluation: grid plus golden over log lam of the ratio.

    The ratio (R(lam q) - v0) / lam is unimodal: its derivative carries
    the sign of lam R'(lam) - R(lam) + v0, nondecreasing in lam by the
    convexity of lam -> R(lam q).
    """

    def rho(log_lam: float) -> float:
        lam = math.exp(log_lam)
        div, _ = robust_divergence(utility, lam * q, priors)
        if not math.isfinite(div):
            return math.inf
        return (div - v0) / lam

    lo, hi = LOG_LAMBDA_RANGE
    grid = np.linspace(lo, hi, 33)
    vals = [rho(t) for t in grid]
    k = int(np.argmin(vals))
    if not math.isfinite(vals[k]):
        return math.inf, math.nan
    t_lo = grid[max(0, k - 1)]
    t_hi = grid[min(len(grid) - 1, k + 1)]
    t, v = _golden(rho, t_lo, t_hi)
    if vals[k] < v:
        t, v = grid[k], vals[k]
    return v, math.exp(t)


def penalty_gamma(
    utility: UtilitySpec,
    priors: PriorSet,
    q: np.ndarray,
    v0: float,
) -> float:
    """gamma(Q) >= 0, zero exactly on claimless dual optimizers.

    Values within solver noise below zero clamp to zero so downstream
    prices never violate the expectation bound E_Q[B] <= price.
    """
    val, _ = _ratio_profile(utility, priors, np.asarray(q, dtype=float), v0)
    if val < -GAMMA_SLACK:
        raise SolverError(
            f"penalty gamma fell below -{GAMMA_SLACK}: claimless value too high"
        )
    return max(0.0, float(val))


def _price_polish(
    utility: UtilitySpec,
    priors: PriorSet,
    constraints: np.ndarray,
    payoff: np.ndarray,
    v0: float,
    nu0: np.ndarray,
    w0: np.ndarray,
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Joint refinement of the ratio objective over (nu, w).

    T(nu, w) = (nu . payoff + sum_i p_i V(nu_i / p_i) - v0) / sum(nu)
    with payoff > 0 pointwise has a positive convex numerator and an
    affine positive denominator, so T is pseudoconvex and any KKT point
    a local method finds is the global minimum over the cone.
    """
    verts = priors.vertices
    n = nu0.size
    m = verts.shape[0]
    big = 1e8

    def objective(x: np.ndarray):
        nu = np.maximum(x[:n], 0.0)
        w = x[n:]
        total = float(nu.sum())
        if total < 1e-12:
            return big, np.zeros(n + m)
        p = w @ verts
        num = float(nu @ payoff)
        g_num = np.asarray(payoff, dtype=float).copy()
        g_p = np.zeros(n)
        for i in range(n):
            if p[i] > 1e-300:
                r = max(nu[i] / p[i], RATIO_FLOOR)
                num += p[i] * min(utility.v(r), big)
                g_num[i] += float(
                    np.clip(utility.v_prime(r), -GRAD_CLAMP, GRAD_CLAMP)
                )
                g_p[i] = float(
                    np.clip(
                        utility.v(r) - r * utility.v_prime(r),
                        -GRAD_CLAMP,
                        GRAD_CLAMP,
                    )
                )
            else:
                if nu[i] > 0.0:
                    num += big * nu[i]
                    g_num[i] += big
                    g_p[i] = -big
                else:
                    v0_util = utility.v_at_zero
                    g_p[i] = min(v0_util, big) if math.isfinite(v0_util) else big
        num -= v0
        t_val = num / total
        grad = np.concatenate(
            [(g_num - t_val) / total, (verts @ g_p) / total]
        )
        return t_val, grad

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
    nu = np.maximum(res.x[:n], 0.0)
    w = np.maximum(res.x[n:], 0.0)
    total = float(nu.sum())
    if total <= 1e-12 or w.sum() <= 0.0:
        return None
    q = nu / total
    if not is_member(constraints, q, tol=1e-8):
        return None
    return q, w / w.sum()


def _buyer_price(
    model: ScenarioModel,
    priors: PriorSet,
    utility: UtilitySpec,
    v0: float,
    opts: SolverOptions,
    start: Tuple[np.ndarray, np.ndarray],
) -> Tuple[float, np.ndarray]:
    """inf over Q of E_Q[shifted claim] + gamma(Q), minus the shift.

    Started at the claimless dual optimizer, where the penalty term
    vanishes; rounds of a short Frank-Wolfe warm start finished by the
    pseudoconvex polish, with the linearization gap as certificate.
    """
    payoff = model.claim.payoff
    shift = float(np.max(np.abs(payoff))) + 1.0
    b = payoff + shift
    constraints = build_constraints(model.market)
    verts = priors.vertices
    q, w = start[0].copy(), start[1].copy()

    def ratio_min(qq: np.ndarray, ww: np.ndarray) -> Tuple[float, float]:
        p = ww @ verts
        mean = float(qq @ b)

        def rho(log_lam: float) -> float:
            lam = math.exp(log_lam)
            div = divergence(utility, lam * qq, p)
            if not math.isfinite(div):
                return math.inf
            return mean + (div - v0) / lam

        lo, hi = LOG_LAMBDA_RANGE
        grid = np.linspace(lo, hi, 21)
        vals = [rho(t) for t in grid]
        k = int(np.argmin(vals))
        if not math.isfinite(vals[k]):
            return math.inf, math.nan
        t, v = _golden(
            rho, grid[max(0, k - 1)], grid[min(len(grid) - 1, k + 1)], iters=40
        )
        if vals[k] < v:
            t, v = grid[k], vals[k]
        return v, math.exp(t)

    val, lam = ratio_min(q, w)
    if not math.isfinite(val):
        q, w = _dual_feasible_start(utility, priors, constraints, None)
        val, lam = ratio_min(q, w)
    if not math.isfinite(val):
        raise SolverError("no finite starting point for the price search")

    def certificate(lam_, q_, w_):
        p_ = w_ @ verts
        # envelope slopes of the ratio objective: the dual solver's
        # slopes divided by the active scaling
        gq = _measure_slope(utility, lam_, q_, p_, b) / lam_
        gw = verts @ _prior_slope(utility, lam_, q_, p_) / lam_
        s_q, status = linear_minimize(constraints, gq)
        if status != "optimal" or s_q is None:
            raise SolverError(f"martingale LP oracle returned {status}")
        s_w = np.zeros(w_.size)
        s_w[int(np.argmin(gw))] = 1.0
        gap = float(gq @ (q_ - s_q) + gw @ (w_ - s_w))
        return gap, s_q, s_w

    for budget in (20, 40, 40):
        stall = 0
        window = []
        for _ in range(budget):
            gap, s_q, s_w = certificate(lam, q, w)
            if gap <= 0.1 * opts.tol:
                break

            def along(g: float) -> float:
                v, _ = ratio_min((1.0 - g) * q + g * s_q, (1.0 - g) * w + g * s_w)
                return v

            g_star, v_star = _golden(along, 0.0, 1.0, iters=40)
            if v_star < val - 1e-15:
                q = (1.0 - g_star) * q + g_star * s_q
                w = (1.0 - g_star) * w + g_star * s_w
                val, lam = ratio_min(q, w)
                stall = 0
            else:
                stall += 1
            window.append(val)
            if stall >= 2 or (len(window) >= 5 and window[-5] - val < 0.05 * opts.tol):
                break

        polished = _price_polish(utility, priors, constraints, b, v0, lam * q, w)
        if polished is not None:
            q_pol, w_pol = polished
            val_pol, lam_pol = ratio_min(q_pol, w_pol)
            if val_pol < val:
                val, lam, q, w = val_pol, lam_pol, q_pol, w_pol
        gap, _, _ = certificate(lam, q, w)
        if gap <= opts.tol:
            break
    return float(val - shift), q


def indifference_price(
    model: ScenarioModel,
    priors: PriorSet,
    utility: UtilitySpec,
    opts: SolverOptions = SolverOptions(),
    v0: Optional[float] = None,
) -> PriceReport:
    """Buyer and seller indifference bounds via the penalty route."""
    base = solve_dual(_stripped(model), priors, utility, opts)
    if v0 is None:
        v0 = base.value
    start = (base.measure, base.prior_weights)
    buyer, q_buy = _buyer_price(model, priors, utility, v0, opts, start)
    neg = ScenarioModel(model.space, model.market, -model.claim)
    sell_neg, q_sell = _buyer_price(neg, priors, utility, v0, opts, start)
    seller = -sell_neg
    if buyer > seller + 1e-7:
        raise SolverError(
            f"buyer price {buyer} exceeded seller price {seller}"
        )
    return PriceReport(
        buyer=float(buyer),
        seller=float(seller),
        claimless=float(v0),
        measure_buy=q_buy,
        measure_sell=q_sell,
    )


def price_by_bisection(
    model: ScenarioModel,
    priors: PriorSet,
    utility: UtilitySpec,
    side: str = "buyer",
    opts: SolverOptions = SolverOptions(),
    v0: Optional[float] = None,
    price_tol: float = 1e-6,
) -> float:
    """Independent route: bisect value(B - p) >= value(0) on the dual.

    The optimal value is strictly decreasing and continuous in the cash
    amount p, so the indifference point is the unique crossing; the
    bracket [-(||B||+1), ||B||+1] always straddles it.  The seller side
    reflects the claim and negates, matching -p_b(-B).
    """
    if side not in ("buyer", "seller"):
        raise ValueError("side must be 'buyer' or 'seller'")
    payoff = model.claim.payoff if side == "buyer" else -model.claim.payoff
    if v0 is None:
        v0 = claimless_value(model, priors, utility, opts)

    def value_at(p: float) -> float:
        shifted = ScenarioModel(
            model.space, model.market, Claim(payoff - p)
        )
        return solve_dual(shifted, priors, utility, opts).value

    lo = -float(np.max(np.abs(payoff))) - 1.0
    hi = -lo
    if value_at(lo) < v0 or value_at(hi) > v0:
        raise SolverError("indifference bracket failed to straddle the crossing")
    while hi - lo > price_tol:
        mid = 0.5 * (lo + hi)
        if value_at(mid) >= v0:
            lo = mid
        else:
            hi = mid
    p = 0.5 * (lo + hi)
    return float(p) if side == "buyer" else float(-p)
