"""Utility functions and their convex conjugates.

Everything downstream (divergences, dual solvers, pricing) consumes a
utility U on the real line through its conjugate

    V(y) = sup_x (U(x) - x * y),    y >= 0,

its derivative V', and the perspective map (y, z) -> z * V(y / z).

Two utilities are built in.  ``exponential_utility`` is U(x) = -exp(-x)
with V(y) = y log y - y and V(0) = 0.  ``glued_utility`` joins an
exponential branch for x <= 0 to a square-root branch for x >= 0; its
supremum is infinite, so V(0) = +inf and the conjugate is finite only on
the open half line.  Both carry closed-form conjugates; a numeric mode
computes V by inverting U' with a bracketed root find, which is the
route used for table-driven custom utilities.

All utilities are assumed strictly increasing, strictly concave, C1,
and to satisfy the Inada conditions U'(-inf) = +inf, U'(+inf) = 0.
Equivalently V is strictly convex on its domain with V'(0+) = -inf and
V'(+inf) = +inf, and V is bounded below by U(0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "UtilitySpec",
    "exponential_utility",
    "glued_utility",
    "table_utility",
    "conjugate",
    "conjugate_derivative",
    "young_gap",
    "perspective",
]


@dataclass(frozen=True)
class UtilitySpec:
    """A utility function bundled with its convex conjugate.

    Attributes:
        name: identifier echoed in reports ("EXP", "GLUED", ...).
        u, u_prime: the utility and its (strictly positive) marginal.
        v, v_prime: the conjugate V(y) = sup_x (U(x) - x y) and V'.
        v_at_zero: V(0) = sup U, possibly +inf.
        mode: "analytic" if v/v_prime are closed forms, "numeric" if
            they invert u_prime with a bracketed root find.
        bracket: (lo, hi) bounds for that root find, chosen so u_prime
            stays finite in floating point on [lo, hi].
    """

    name: str
    u: Callable[[float], float]
    u_prime: Callable[[float], float]
    v: Callable[[float], float]
    v_prime: Callable[[float], float]
    v_at_zero: float
    mode: str = "analytic"
    bracket: Tuple[float, float] = (-700.0, 700.0)

    def __repr__(self) -> str:
        return f"UtilitySpec({self.name}, mode={self.mode})"


# ---------------------------------------------------------------------------
# numeric conjugate: invert the marginal utility
# ---------------------------------------------------------------------------


def _invert_marginal(
    u_prime: Callable[[float], float], y: float, lo: float, hi: float
) -> float:
    """Solve u_prime(x) = y for x by bracket expansion plus Brent.

    u_prime is strictly decreasing, so the bracket grows geometrically
    downward while u_prime < y and upward while u_prime > y.  The
    expansion is capped at [lo, hi]; a cap hit without a sign change is
    a domain error (y outside the range u_prime attains on the cap).
    """
    if y <= 0.0:
        raise ValueError("marginal utility inversion needs y > 0")
    a, b = -1.0, 1.0
    a, b = max(a, lo), min(b, hi)
    while b < hi and u_prime(b) > y:
        b = min(hi, 2.0 * b)
    while a > lo and u_prime(a) < y:
        a = max(lo, 2.0 * a)
    fa = u_prime(a) - y
    fb = u_prime(b) - y
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa < 0.0 or fb > 0.0:
        raise ValueError(
            f"bracket [{lo}, {hi}] exhausted inverting marginal utility at y={y}"
        )
    return float(brentq(lambda x: u_prime(x) - y, a, b, xtol=1e-13, rtol=8.9e-16))


def _numeric_conjugate_pair(
    u: Callable[[float], float],
    u_prime: Callable[[float], float],
    v_at_zero: float,
    bracket: Tuple[float, float],
):
    lo, hi = bracket

    def v(y: float) -> float:
        y = float(y)
        if y < 0.0:
            raise ValueError("conjugate domain is y >= 0")
        if y == 0.0:
            return v_at_zero
        x = _invert_marginal(u_prime, y, lo, hi)
        return float(u(x)) - x * y

    def v_prime(y: float) -> float:
        y = float(y)
        if y <= 0.0:
            raise ValueError("conjugate derivative needs y > 0")
        # V'(y) = -argsup_x (U(x) - x y) = -(U')^{-1}(y)
        return -_invert_marginal(u_prime, y, lo, hi)

    return v, v_prime


# ---------------------------------------------------------------------------
# built-in utilities
# ---------------------------------------------------------------------------


def exponential_utility(mode: str = "analytic") -> UtilitySpec:
    """U(x) = -exp(-x), V(y) = y log y - y, V(0) = 0."""

    def u(x: float) -> float:
        return -math.exp(-x) if x > -745.0 else -math.inf

    def u_prime(x: float) -> float:
        return math.exp(-x) if x > -745.0 else math.inf

    def v(y: float) -> float:
        y = float(y)
        if y < 0.0:
            raise ValueError("conjugate domain is y >= 0")
        if y == 0.0:
            return 0.0
        return y * math.log(y) - y

    def v_prime(y: float) -> float:
        y = float(y)
        if y <= 0.0:
            raise ValueError("conjugate derivative needs y > 0")
        return math.log(y)

    spec = UtilitySpec("EXP", u, u_prime, v, v_prime, 0.0, "analytic", (-700.0, 700.0))
    if mode == "numeric":
        nv, nvp = _numeric_conjugate_pair(u, u_prime, 0.0, spec.bracket)
        spec = replace(spec, v=nv, v_prime=nvp, mode="numeric")
    elif mode != "analytic":
        raise ValueError(f"unknown conjugate mode {mode!r}")
    return spec


def glued_utility(mode: str = "analytic") -> UtilitySpec:
    """Exponential branch glued C1 to a square-root branch at x = 0.

    U(x) = 1 - exp(-x) for x <= 0 and U(x) = 2 sqrt(x + 1) - 2 for
    x >= 0; both value and marginal match at the seam.  sup U = +inf,
    so V(0) = +inf.  Inverting U' branchwise gives the closed form

        V(y) = 1/y + y - 2          for 0 < y <= 1  (sqrt branch),
        V(y) = y log y - y + 1      for y >= 1      (exp branch),

    which is C1 at y = 1 with V(1) = 0 and V'(1) = 0.  The numeric mode
    reproduces this to root-find accuracy; the square-root branch needs
    x near 1/y^2, so the upper bracket cap sits far beyond the 700 that
    exponential overflow would otherwise dictate.
    """

    def u(x: float) -> float:
        if x <= 0.0:
            return 1.0 - math.exp(-x) if x > -745.0 else -math.inf
        return 2.0 * math.sqrt(x + 1.0) - 2.0

    def u_prime(x: float) -> float:
        if x <= 0.0:
            return math.exp(-x) if x > -745.0 else math.inf
        return 1.0 / math.sqrt(x + 1.0)

    def v(y: float) -> float:
        y = float(y)
        if y < 0.0:
            raise ValueError("conjugate domain is y >= 0")
        if y == 0.0:
            return math.inf
        if y <= 1.0:
            return 1.0 / y + y - 2.0
        return y * math.log(y) - y + 1.0

    def v_prime(y: float) -> float:
        y = float(y)
        if y <= 0.0:
            raise ValueError("conjugate derivative needs y > 0")
        if y <= 1.0:
            return 1.0 - 1.0 / (y * y)
        return math.log(y)

    spec = UtilitySpec(
        "GLUED", u, u_prime, v, v_prime, math.inf, "analytic", (-700.0, 1e18)
    )
    if mode == "numeric":
        nv, nvp = _numeric_conjugate_pair(u, u_prime, math.inf, spec.bracket)
        spec = replace(spec, v=nv, v_prime=nvp, mode="numeric")
    elif mode != "analytic":
        raise ValueError(f"unknown conjugate mode {mode!r}")
    return spec


def table_utility(
    points: list, u_at_zero: float = 0.0, name: str = "custom-table"
) -> UtilitySpec:
    """Utility from a table of (x, U'(x)) samples, conjugate computed numerically.

    The marginal is interpolated log-linearly between samples (piecewise
    exponential, hence continuous, strictly positive, strictly
    decreasing) and extended beyond the table with the boundary decay
    rates, so the Inada conditions hold.  U integrates the marginal in
    closed form per segment with U(0) = u_at_zero.
    """
    pts = sorted((float(x), float(m)) for x, m in points)
    xs = [p[0] for p in pts]
    ms = [p[1] for p in pts]
    if len(pts) < 1:
        raise ValueError("table utility needs at least one (x, marginal) point")
    if any(m <= 0.0 for m in ms):
        raise ValueError("marginal utility samples must be positive")
    if any(xs[i] >= xs[i + 1] for i in range(len(xs) - 1)):
        raise ValueError("table x values must be strictly increasing")
    if any(ms[i] <= ms[i + 1] for i in range(len(ms) - 1)):
        raise ValueError("marginal samples must be strictly decreasing in x")

    # decay rates k_i > 0 with m(x) = m_i exp(-k_i (x - x_i)) on segment i
    rates = []
    for i in range(len(pts) - 1):
        rates.append(math.log(ms[i] / ms[i + 1]) / (xs[i + 1] - xs[i]))
    k_left = rates[0] if rates else 1.0
    k_right = rates[-1] if rates else 1.0

    def u_prime(x: float) -> float:
        if x <= xs[0]:
            e = -k_left * (x - xs[0])
            return ms[0] * math.exp(e) if e < 700.0 else math.inf
        if x >= xs[-1]:
            return ms[-1] * math.exp(-k_right * (x - xs[-1]))
        i = 0
        while xs[i + 1] < x:
            i += 1
        return ms[i] * math.exp(-rates[i] * (x - xs[i]))

    def _segment_integral(m0: float, k: float, width: float) -> float:
        # integral of m0 exp(-k t) over [0, width]
        if abs(k) < 1e-300:
            return m0 * width
        return m0 * (1.0 - math.exp(-k * width)) / k

    # antiderivative M with M(xs[0]) = 0, tabulated at the knots
    knots_M = [0.0]
    for i in range(len(pts) - 1):
        knots_M.append(knots_M[-1] + _segment_integral(ms[i], rates[i], xs[i + 1] - xs[i]))

    def _antideriv(x: float) -> float:
        if x <= xs[0]:
            # integral from xs[0] down to x of the left tail
            return -_segment_integral(ms[0], k_left, 0.0) + (
                -(ms[0] / k_left) * (math.exp(-k_left * (x - xs[0])) - 1.0)
                if -k_left * (x - xs[0]) < 700.0
                else -math.inf
            )
        if x >= xs[-1]:
            return knots_M[-1] + _segment_integral(ms[-1], k_right, x - xs[-1])
        i = 0
        while xs[i + 1] < x:
            i += 1
        return knots_M[i] + _segment_integral(ms[i], rates[i], x - xs[i])

    m_at_zero = _antideriv(0.0)

    def u(x: float) -> float:
        return u_at_zero + _antideriv(x) - m_at_zero

    # sup U = u_at_zero + total integral to +inf: right tail integrates to
    # m_K / k_right, finite, so V(0) is finite for table utilities
    sup_u = u_at_zero + (knots_M[-1] - m_at_zero) + ms[-1] / k_right

    lo = xs[0] - 700.0 / k_left
    hi = xs[-1] + 700.0 / k_right
    nv, nvp = _numeric_conjugate_pair(u, u_prime, sup_u, (lo, hi))
    return UtilitySpec(name, u, u_prime, nv, nvp, sup_u, "numeric", (lo, hi))


# ---------------------------------------------------------------------------
# conjugate calculus
# ---------------------------------------------------------------------------


def conjugate(spec: UtilitySpec, y: float) -> float:
    """V(y) for y >= 0; raises on y < 0."""
    y = float(y)
    if y < 0.0:
        raise ValueError("conjugate domain is y >= 0")
    if y == 0.0:
        return spec.v_at_zero
    return float(spec.v(y))


def conjugate_derivative(spec: UtilitySpec, y: float) -> float:
    """V'(y) for y > 0."""
    y = float(y)
    if y <= 0.0:
        raise ValueError("conjugate derivative needs y > 0")
    return float(spec.v_prime(y))


def young_gap(spec: UtilitySpec, x: float, y: float) -> float:
    """V(y) + x y - U(x); nonnegative, zero exactly at y = U'(x)."""
    return conjugate(spec, y) + float(x) * float(y) - float(spec.u(float(x)))


def perspective(spec: UtilitySpec, y: float, z: float) -> float:
    """The perspective z V(y / z) extended to the boundary.

    Cases: 0 at (0, 0); +inf for y != 0, z = 0; z V(y/z) for z > 0 with
    V(+inf at y < 0) understood as +inf.  Positively homogeneous of
    degree one and jointly convex on y >= 0, z >= 0.
    """
    y = float(y)
    z = float(z)
    if z < 0.0:
        raise ValueError("perspective needs z >= 0")
    if z == 0.0:
        return 0.0 if y == 0.0 else math.inf
    if y < 0.0:
        return math.inf
    if y == 0.0:
        # z * V(0); 0 * inf does not arise because z > 0 here
        return z * spec.v_at_zero if math.isfinite(spec.v_at_zero) else math.inf
    return z * float(spec.v(y / z))
