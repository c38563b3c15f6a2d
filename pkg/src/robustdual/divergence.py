"""Divergence functionals paired with robust integrals.

For a utility with conjugate V, the divergence of a nonnegative mass
vector nu against a probability P is sum_w P_w V(nu_w / P_w), written
through the perspective function so that the absolute-continuity
conventions (0 * V(0/0) = 0, mass escaping the support costs +inf) are
encoded rather than special-cased.  The robust divergence minimizes
over a polytope of priors; since the divergence is convex in P with a
closed-form slope, a Frank-Wolfe sweep over the vertices converges
with a computable optimality gap.

The module also exposes the sup-side robust integral, the measure-side
objective (robust divergence plus the claim pairing), a brute-force
grid check of the conjugacy between the two, and the uniform
integrability modulus used by the countable-space family.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .market import Claim, PriorSet, utility_values
from .utility import UtilitySpec

__all__ = [
    "divergence",
    "robust_divergence",
    "robust_integral",
    "claim_integrand",
    "dual_objective",
    "ConjugateIdentityReport",
    "conjugate_identity_check",
    "ui_modulus",
]

FW_TOL = 1e-9
FW_MAX_ITER = 200
SUPPORT_TOL = 1e-12
SLOPE_CLAMP = 1e12


def _as_mass(mass: np.ndarray) -> np.ndarray:
    nu = np.asarray(mass, dtype=float)
    if nu.ndim != 1:
        raise ValueError("mass must be a vector")
    if not np.all(np.isfinite(nu)):
        raise ValueError("mass must be finite")
    if np.any(nu < 0.0):
        raise ValueError("mass must be nonnegative")
    return nu


def _v_vec(utility: UtilitySpec, ratios: np.ndarray) -> np.ndarray:
    return np.array([utility.v(float(r)) for r in ratios])


def _v_prime_vec(utility: UtilitySpec, ratios: np.ndarray) -> np.ndarray:
    return np.array([utility.v_prime(float(r)) for r in ratios])


def divergence(utility: UtilitySpec, mass: np.ndarray, prob: np.ndarray) -> float:
    """sum_w P_w V(nu_w / P_w) with perspective boundary conventions.

    Returns +inf when mass escapes the support of prob, and, for
    utilities with V(0) = +inf, when prob charges a scenario that mass
    does not.
    """
    nu = _as_mass(mass)
    p = np.asarray(prob, dtype=float)
    if p.shape != nu.shape:
        raise ValueError("mass and probability must have equal length")
    if np.any(nu[p <= 0.0] > 0.0):
        return math.inf
    pos = (p > 0.0) & (nu > 0.0)
    zero_mass = (p > 0.0) & (nu == 0.0)
    total = 0.0
    if np.any(zero_mass):
        if not math.isfinite(utility.v_at_zero):
            return math.inf
        total += utility.v_at_zero * float(p[zero_mass].sum())
    if np.any(pos):
        total += float(p[pos] @ _v_vec(utility, nu[pos] / p[pos]))
    return total


def _divergence_slope(
    utility: UtilitySpec, nu: np.ndarray, p: np.ndarray
) -> np.ndarray:
    """d/dP_w of the divergence: V(r) - r V'(r) at r = nu_w / P_w.

    At r = 0 the slope is V(0); as r -> inf it tends to -inf, so the
    slope where prob vanishes under positive mass is clamped large
    negative (pulling prior mass toward uncovered scenarios), and V(0)
    = +inf clamps large positive.
    """
    out = np.empty(nu.size)
    v0 = utility.v_at_zero if math.isfinite(utility.v_at_zero) else SLOPE_CLAMP
    for w in range(nu.size):
        if p[w] > 0.0:
            if nu[w] > 0.0:
                r = nu[w] / p[w]
                out[w] = utility.v(r) - r * utility.v_prime(r)
            else:
                out[w] = v0
        else:
            out[w] = -SLOPE_CLAMP if nu[w] > 0.0 else v0
    return np.clip(out, -SLOPE_CLAMP, SLOPE_CLAMP)


def _golden_min(f: Callable[[float], float], lo: float, hi: float, iters: int = 90):
    """Golden-section minimum of a unimodal f on [lo, hi]."""
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
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
    xm = 0.5 * (a + b)
    return xm, f(xm)


def robust_divergence(
    utility: UtilitySpec,
    mass: np.ndarray,
    priors: PriorSet,
    tol: float = FW_TOL,
    max_iter: int = FW_MAX_ITER,
) -> Tuple[float, Optional[np.ndarray]]:
    """inf over the prior polytope of divergence(mass, P).

    Returns (value, mixture weights over vertices); weights are None
    when the value is +inf, i.e. no mixture has finite divergence.
    Frank-Wolfe over the weights with exact vertex oracle and golden
    line search; stops when the linearization gap drops below tol.
    """
    nu = _as_mass(mass)
    verts = priors.vertices
    m = verts.shape[0]
    nu_supp = nu > SUPPORT_TOL

    if math.isfinite(utility.v_at_zero):
        avg_supp = priors.vertex_average() > SUPPORT_TOL
        if np.any(nu_supp & ~avg_supp):
            return math.inf, None
        w = np.full(m, 1.0 / m)
        selectable = np.ones(m, dtype=bool)
    else:
        eligible = np.array(
            [bool(np.all(nu_supp | ~(v > SUPPORT_TOL))) for v in verts]
        )
        if not np.any(eligible):
            return math.inf, None
        covered = (verts[eligible] > SUPPORT_TOL).any(axis=0)
        if not np.all(covered == nu_supp):
            return math.inf, None
        w = np.where(eligible, 1.0, 0.0)
        w /= w.sum()
        selectable = eligible

    def value_at(weights: np.ndarray) -> float:
        return divergence(utility, nu, weights @ verts)

    if m == 1:
        return value_at(w), w

    val = value_at(w)
    for _ in range(max_iter):
        p = w @ verts
        slope = _divergence_slope(utility, nu, p)
        gw = verts @ slope
        gw = np.where(selectable, gw, math.inf)
        best = int(np.argmin(gw))
        # w vanishes on non-selectable vertices, so drop their inf slopes
        fw_gap = float(np.where(np.isfinite(gw), gw, 0.0) @ w - gw[best])
        if fw_gap <= tol:
            break
        direction = np.zeros(m)
        direction[best] = 1.0

        def along(g: float) -> float:
            return value_at((1.0 - g) * w + g * direction)

        g_star, g_val = _golden_min(along, 0.0, 1.0)
        if g_val < val:
            w = (1.0 - g_star) * w + g_star * direction
            val = g_val
        else:
            break
    return val, w


def claim_integrand(utility: UtilitySpec, claim: Claim) -> Callable:
    """Integrand f(w, x) = -U(-x + B_w) as a vectorized closure."""
    b = claim.payoff

    def f(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -utility_values(utility, b - x)

    return f


def robust_integral(
    f: Callable[[np.ndarray], np.ndarray], priors: PriorSet, x: np.ndarray
) -> Tuple[float, int]:
    """sup over prior vertices of E_P[f(., x)] and the attaining index.

    The sup over the polytope of a P-linear expression sits at a
    vertex, so the scan is exact.
    """
    vals = np.asarray(f(np.asarray(x, dtype=float)), dtype=float)
    if vals.shape != (priors.n_scenarios,):
        raise ValueError("integrand must return one value per scenario")
    per_vertex = priors.vertices @ vals
    best = int(np.argmax(per_vertex))
    return float(per_vertex[best]), best


def dual_objective(
    utility: UtilitySpec,
    priors: PriorSet,
    mass: np.ndarray,
    payoff: np.ndarray,
    tol: float = FW_TOL,
) -> Tuple[float, Optional[np.ndarray]]:
    """Robust divergence of the mass plus its pairing with the payoff."""
    nu = _as_mass(mass)
    b = np.asarray(payoff, dtype=float)
    if b.shape != nu.shape:
        raise ValueError("payoff length must match the mass")
    val, weights = robust_divergence(utility, nu, priors, tol=tol)
    if not math.isfinite(val):
        return math.inf, None
    return val + float(nu @ b), weights


@dataclass(frozen=True)
class ConjugateIdentityReport:
    grid_sup: float
    dual_value: float
    gap: float
    young_max_violation: float
    n_evaluations: int
    x_max: float
    diverged: bool


def conjugate_identity_check(
    utility: UtilitySpec,
    claim: Claim,
    priors: PriorSet,
    mass: np.ndarray,
    x_max: float = 10.0,
    points_per_axis: int = 7,
    levels: int = 16,
) -> ConjugateIdentityReport:
    """Brute-force conjugate of the robust integral against the dual value.

    Maximizes <X, mass> - sup_P E_P[-U(-X + B)] over a uniform grid on
    [-x_max, x_max]^n, halving the window around the incumbent at each
    refinement level.  The objective is concave in X, so window zoom
    converges to the global supremum.  Every evaluated point also
    certifies the Fenchel-Young side: pairing - integral <= dual value.

    Only meant for tiny spaces; refuses n > 6.
    """
    nu = _as_mass(mass)
    n = nu.size
    if n > 6:
        raise ValueError("grid conjugate check supports at most 6 scenarios")
    f = claim_integrand(utility, claim)
    verts = priors.vertices
    j_value, _ = dual_objective(utility, priors, nu, claim.payoff)

    lo = np.full(n, -float(x_max))
    hi = np.full(n, float(x_max))
    best_val = -math.inf
    best_x = np.zeros(n)
    young_violation = -math.inf
    n_evals = 0
    for _ in range(levels):
        axes = [np.linspace(lo[i], hi[i], points_per_axis) for i in range(n)]
        for point in itertools.product(*axes):
            x = np.array(point)
            integral = float(np.max(verts @ f(x)))
            val = float(x @ nu) - integral
            n_evals += 1
            if math.isfinite(j_value):
                young_violation = max(young_violation, val - j_value)
            if val > best_val:
                best_val = val
                best_x = x
        half = (hi - lo) / 4.0
        lo = np.maximum(best_x - half, -x_max)
        hi = np.minimum(best_x + half, x_max)

    on_boundary = bool(np.any(np.abs(np.abs(best_x) - x_max) < 1e-9))
    diverged = (not math.isfinite(j_value)) and on_boundary
    gap = (j_value - best_val) if math.isfinite(j_value) else math.inf
    return ConjugateIdentityReport(
        grid_sup=best_val,
        dual_value=j_value,
        gap=gap,
        young_max_violation=young_violation,
        n_evaluations=n_evals,
        x_max=float(x_max),
        diverged=diverged,
    )


def ui_modulus(
    weights: np.ndarray,
    values: np.ndarray,
    densities: Optional[np.ndarray] = None,
    threshold: float = 1.0,
) -> float:
    """Uniform integrability modulus of values across a density family.

    Computes max over density rows of E[|values| * density ; |values|
    >= threshold] under the reference weights.  With densities omitted
    this is the plain tail expectation under the reference measure.
    """
    w = np.asarray(weights, dtype=float)
    x = np.asarray(values, dtype=float)
    if x.shape != w.shape:
        raise ValueError("values and weights must have equal length")
    if densities is None:
        dens = np.ones((1, w.size))
    else:
        dens = np.atleast_2d(np.asarray(densities, dtype=float))
        if dens.shape[1] != w.size:
            raise ValueError("density rows must match the weights length")
    tail = np.abs(x) >= float(threshold)
    contrib = w * np.abs(x) * tail
    return float(np.max(dens @ contrib))
