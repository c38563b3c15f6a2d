"""A truncated countable family separating integrability from uniformity.

The reference measure on {1, ..., n_max} weights scenario n by 2^{-n},
renormalized by Z = 1 - 2^{-n_max}.  The prior family puts

    P_n({1}) = 1 - 1/n,    P_n({n}) = 1/n,

so the linear payoff W(n) = n has E_{P_n}[W] = 2 - 1/n: every prior
integrates W, the supremum of the means is finite (2 - 1/n_max at
truncation, 2 in the limit, never attained), yet the tail expectations
E_{P_n}[W 1{W >= N}] equal 1 for every n >= N.  The family's tail
modulus is therefore constant in the threshold: W is integrable under
every prior but not uniformly so, and no truncation level changes that.

By contrast the densities dP_n/dP themselves are uniformly integrable
(their modulus decays like 1/n at the first n with Z 2^n / n above the
threshold), and the powers W^g for 0 < g < 1 are too.  The three
moduli side by side exhibit a worst-case expectation functional whose
effective domain is strictly larger than the set where the worst case
is uniformly controlled.

All quantities are exact `fractions.Fraction` computations; n_max is
capped where exactness stays cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np

from .market import PriorSet, ScenarioSpace

__all__ = [
    "TruncatedGeometricFamily",
    "PowerContrastReport",
    "build_truncated_family",
    "prior_mean",
    "supremum_mean",
    "tail_expectation_modulus",
    "reference_densities",
    "density_tail_modulus",
    "power_tail_moduli",
    "power_integrand_contrast",
]

MAX_EXACT_N = 30


@dataclass(frozen=True)
class TruncatedGeometricFamily:
    """Exact-rational reference weights, prior vertices, linear payoff."""

    n_max: int
    weights: Tuple[Fraction, ...]  # reference measure, scenario n = index + 1
    priors: Tuple[Tuple[Fraction, ...], ...]  # row n-1 is P_n

    @property
    def payoff(self) -> Tuple[int, ...]:
        return tuple(range(1, self.n_max + 1))

    def to_floats(self) -> Tuple[ScenarioSpace, PriorSet, np.ndarray]:
        """Float view for interop with the numeric functionals."""
        space = ScenarioSpace(np.array([float(x) for x in self.weights]))
        priors = PriorSet(
            np.array([[float(x) for x in row] for row in self.priors])
        )
        return space, priors, np.array(self.payoff, dtype=float)


def build_truncated_family(n_max: int) -> TruncatedGeometricFamily:
    if not 3 <= n_max <= MAX_EXACT_N:
        raise ValueError(f"n_max must lie in [3, {MAX_EXACT_N}]")
    z = 1 - Fraction(1, 2**n_max)
    weights = tuple(Fraction(1, 2**n) / z for n in range(1, n_max + 1))
    priors: List[Tuple[Fraction, ...]] = []
    for n in range(1, n_max + 1):
        row = [Fraction(0)] * n_max
        row[0] += 1 - Fraction(1, n)
        row[n - 1] += Fraction(1, n)  # n = 1 collapses to the point mass at 1
        priors.append(tuple(row))
    return TruncatedGeometricFamily(n_max, weights, tuple(priors))


def prior_mean(family: TruncatedGeometricFamily, n: int) -> Fraction:
    """E_{P_n}[W]; equals 2 - 1/n identically."""
    row = family.priors[n - 1]
    return sum((p * w for p, w in zip(row, family.payoff)), Fraction(0))


def supremum_mean(family: TruncatedGeometricFamily) -> Fraction:
    """max_n E_{P_n}[W] = 2 - 1/n_max; grows toward the unattained 2."""
    return max(prior_mean(family, n) for n in range(1, family.n_max + 1))


def tail_expectation_modulus(family: TruncatedGeometricFamily, threshold) -> Fraction:
    """sup_n E_{P_n}[W 1{W >= threshold}].

    Exactly 1 for every threshold in [2, n_max]: the tail above N keeps
    the single atom at n with mass 1/n and value n.  Zero beyond n_max,
    the full mean at thresholds <= 1.
    """
    best = Fraction(0)
    for row in family.priors:
        acc = Fraction(0)
        for w, p in zip(family.payoff, row):
            if w >= threshold:
                acc += p * w
        best = max(best, acc)
    return best


def reference_densities(family: TruncatedGeometricFamily) -> Tuple[Tuple[Fraction, ...], ...]:
    """Rows dP_n/dP against the renormalized reference weights."""
    return tuple(
        tuple(p / w for p, w in zip(row, family.weights))
        for row in family.priors
    )


def density_tail_modulus(family: TruncatedGeometricFamily, threshold) -> Fraction:
    """sup_n E[(dP_n/dP) 1{dP_n/dP >= threshold}] by direct summation.

    For thresholds >= 2 this equals max_n (1/n) 1{Z 2^n / n >= threshold}:
    the density at the shared atom 1 stays below 2 Z < 2 and never
    enters the event, so only the moving atom contributes, and the
    modulus is nonincreasing with a 1/log decay in the threshold.
    """
    best = Fraction(0)
    for row, dens in zip(family.priors, reference_densities(family)):
        acc = Fraction(0)
        for p, d in zip(row, dens):
            if p > 0 and d >= threshold:
                acc += p
        best = max(best, acc)
    return best


def power_tail_moduli(
    family: TruncatedGeometricFamily, gamma: float, thresholds: Sequence[float]
) -> List[float]:
    """sup_n E_{P_n}[W^gamma 1{W^gamma >= N}] for each threshold N.

    Floating point: the exponent makes exact arithmetic unavailable.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("the power must lie in [0, 1]")
    values = np.array(family.payoff, dtype=float) ** gamma
    out = []
    for thr in thresholds:
        best = 0.0
        for row in family.priors:
            acc = sum(
                float(p) * v for p, v in zip(row, values) if v >= thr
            )
            best = max(best, acc)
        out.append(best)
    return out


@dataclass(frozen=True)
class PowerContrastReport:
    """Tail moduli of W^gamma next to those of W itself.

    The gamma < 1 column decays to zero (uniform integrability via the
    strictly sublinear growth); the linear column is pinned at 1 until
    the truncation edge.  `thresholds` indexes both columns.
    """

    gamma: float
    thresholds: Tuple[float, ...]
    power_moduli: Tuple[float, ...]
    linear_moduli: Tuple[float, ...]


def power_integrand_contrast(
    family: TruncatedGeometricFamily, gamma: float, thresholds: Sequence[float]
) -> PowerContrastReport:
    if not 0.0 < gamma < 1.0:
        raise ValueError("the contrast needs a power strictly between 0 and 1")
    power = power_tail_moduli(family, gamma, thresholds)
    linear = [
        float(tail_expectation_modulus(family, thr)) for thr in thresholds
    ]
    return PowerContrastReport(
        gamma=float(gamma),
        thresholds=tuple(float(t) for t in thresholds),
        power_moduli=tuple(power),
        linear_moduli=tuple(linear),
    )
