"""Finite scenario spaces, filtration trees, markets and strategies.

A model lives on a finite set of scenarios {0, ..., n-1} carrying a
strictly positive reference probability.  Information arrives along a
partition tree: level 0 is the trivial partition, the final level is
the partition into singletons, and each level refines the previous
one.  Prices and strategies are adapted by construction because they
are stored per (level, cell) rather than per scenario.

The trading gain of a strategy is linear in the strategy, so the whole
gain map is materialized as a dense matrix.  Its transpose is exactly
the coefficient matrix of the martingale constraints, which keeps the
polarity between attainable gains and martingale measures structural
rather than numerical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "ScenarioSpace",
    "FiltrationTree",
    "Market",
    "Claim",
    "PriorSet",
    "Strategy",
    "ScenarioModel",
    "expectation",
    "terminal_gain",
    "worst_case_expected_utility",
    "utility_values",
]

SUM_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ScenarioSpace:
    """Finite probability space with strictly positive reference weights."""

    weights: np.ndarray
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        w = _freeze(np.atleast_1d(np.asarray(self.weights, dtype=float)))
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("scenario weights must be a nonempty vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("reference weights must be finite and strictly positive")
        if abs(float(w.sum()) - 1.0) > SUM_TOL:
            raise ValueError(
                f"reference weights must sum to 1 within {SUM_TOL}, got {w.sum()!r}"
            )
        if self.labels is not None and len(self.labels) != w.size:
            raise ValueError("labels length must match the number of scenarios")

    @property
    def size(self) -> int:
        return int(self.weights.size)


class FiltrationTree:
    """Partition tree: levels[t] is a list of cells of scenario indices."""

    def __init__(self, levels: Sequence[Sequence[Sequence[int]]]):
        lv: List[Tuple[Tuple[int, ...], ...]] = []
        for cells in levels:
            lv.append(tuple(tuple(int(i) for i in cell) for cell in cells))
        if not lv:
            raise ValueError("tree needs at least two levels")
        n = sum(len(c) for c in lv[-1])
        universe = tuple(range(n))
        for t, cells in enumerate(lv):
            seen: List[int] = []
            for cell in cells:
                if not cell:
                    raise ValueError(f"level {t} has an empty cell")
                seen.extend(cell)
            if sorted(seen) != list(universe):
                raise ValueError(f"level {t} is not a partition of 0..{n - 1}")
        if len(lv) < 2:
            raise ValueError("tree must have horizon T >= 1")
        if len(lv[0]) != 1:
            raise ValueError("level 0 must be the trivial partition")
        if any(len(cell) != 1 for cell in lv[-1]):
            raise ValueError("final level must consist of singletons")
        # refinement: every cell at t+1 sits inside one cell at t
        cell_of: List[np.ndarray] = []
        for t, cells in enumerate(lv):
            idx = np.full(n, -1, dtype=int)
            for c, cell in enumerate(cells):
                for w in cell:
                    idx[w] = c
            cell_of.append(idx)
        for t in range(len(lv) - 1):
            for cell in lv[t + 1]:
                parents = {int(cell_of[t][w]) for w in cell}
                if len(parents) != 1:
                    raise ValueError(f"level {t + 1} does not refine level {t}")
        self.levels: Tuple[Tuple[Tuple[int, ...], ...], ...] = tuple(lv)
        self._cell_of = [_freeze(ix.astype(float)).astype(int) for ix in cell_of]
        self.n_scenarios = n

    @property
    def horizon(self) -> int:
        return len(self.levels) - 1

    def cell_index(self, t: int) -> np.ndarray:
        """Array mapping scenario -> index of its cell at level t."""
        return self._cell_of[t]

    def n_cells(self, t: int) -> int:
        return len(self.levels[t])

    def __repr__(self) -> str:
        return f"FiltrationTree(T={self.horizon}, n={self.n_scenarios})"


class Market:
    """Adapted price process on a filtration tree.

    prices[t][c] is the length-d price vector of the d assets at level t
    on cell c.  The horizon must be at least one trading period.
    """

    def __init__(self, tree: FiltrationTree, prices: Sequence[Sequence[Sequence[float]]]):
        self.tree = tree
        if len(prices) != tree.horizon + 1:
            raise ValueError("prices must have one entry per tree level")
        mats: List[np.ndarray] = []
        d = None
        for t, level_prices in enumerate(prices):
            if len(level_prices) != tree.n_cells(t):
                raise ValueError(f"level {t} needs one price vector per cell")
            mat = np.asarray(level_prices, dtype=float)
            if mat.ndim != 2:
                raise ValueError("price vectors must share a common asset count")
            if d is None:
                d = mat.shape[1]
            if mat.shape[1] != d or d == 0:
                raise ValueError("price vectors must share a common asset count")
            if not np.all(np.isfinite(mat)):
                raise ValueError("prices must be finite")
            mats.append(_freeze(mat))
        self.prices = tuple(mats)
        self.n_assets = int(d)
        self._gain_matrix = self._build_gain_matrix()

    def _build_gain_matrix(self) -> np.ndarray:
        tree = self.tree
        n = tree.n_scenarios
        cols = []
        for t in range(tree.horizon):
            idx_t = tree.cell_index(t)
            idx_n = tree.cell_index(t + 1)
            # per-scenario price increment over period t, shape (n, d)
            delta = self.prices[t + 1][idx_n] - self.prices[t][idx_t]
            for c in range(tree.n_cells(t)):
                mask = (idx_t == c).astype(float)[:, None]
                cols.append(mask * delta)
        L = np.concatenate(cols, axis=1) if cols else np.zeros((n, 0))
        return _freeze(L)

    @property
    def gain_matrix(self) -> np.ndarray:
        """Dense (n_scenarios, n_positions) map from holdings to gains."""
        return self._gain_matrix

    @property
    def n_positions(self) -> int:
        return int(self._gain_matrix.shape[1])

    def position_index(self) -> List[Tuple[int, int, int]]:
        """Column order of the gain matrix as (level, cell, asset) triples."""
        out = []
        for t in range(self.tree.horizon):
            for c in range(self.tree.n_cells(t)):
                for a in range(self.n_assets):
                    out.append((t, c, a))
        return out

    def __repr__(self) -> str:
        return f"Market(d={self.n_assets}, {self.tree!r})"


@dataclass(frozen=True)
class Claim:
    """Terminal payoff, one value per scenario."""

    payoff: np.ndarray

    def __post_init__(self):
        p = _freeze(np.atleast_1d(np.asarray(self.payoff, dtype=float)))
        object.__setattr__(self, "payoff", p)
        if p.ndim != 1:
            raise ValueError("claim payoff must be a vector")
        if not np.all(np.isfinite(p)):
            raise ValueError("claim payoff must be finite")

    @property
    def size(self) -> int:
        return int(self.payoff.size)

    def __neg__(self) -> "Claim":
        return Claim(-self.payoff)

    def shifted(self, x: float) -> "Claim":
        return Claim(self.payoff + float(x))


@dataclass(frozen=True)
class PriorSet:
    """Polytope of priors given by finitely many probability vertices."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "vertices", _freeze(v))
        if v.size == 0:
            raise ValueError("prior set needs at least one vertex")
        if not np.all(np.isfinite(v)) or np.any(v < 0.0):
            raise ValueError("prior vertices must be finite and nonnegative")
        sums = v.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > SUM_TOL):
            raise ValueError(
                f"every prior vertex must sum to 1 within {SUM_TOL}; sums {sums}"
            )

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_scenarios(self) -> int:
        return int(self.vertices.shape[1])

    def vertex_average(self) -> np.ndarray:
        """Uniform mixture of the vertices; it has the maximal support."""
        return self.vertices.mean(axis=0)

    def mixture(self, weights: np.ndarray) -> np.ndarray:
        w = np.asarray(weights, dtype=float)
        return w @ self.vertices


class Strategy:
    """Adapted holdings: holdings[t][c] is the d-vector held on cell c."""

    def __init__(self, market: Market, holdings: Sequence[Sequence[Sequence[float]]]):
        tree = market.tree
        if len(holdings) != tree.horizon:
            raise ValueError("holdings must have one entry per trading period")
        mats = []
        for t, level in enumerate(holdings):
            mat = np.asarray(level, dtype=float)
            if mat.shape != (tree.n_cells(t), market.n_assets):
                raise ValueError(
                    f"holdings at level {t} must have shape "
                    f"({tree.n_cells(t)}, {market.n_assets})"
                )
            mats.append(_freeze(mat))
        self.holdings = tuple(mats)
        self.market = market

    def flatten(self) -> np.ndarray:
        if not self.holdings:
            return np.zeros(0)
        return np.concatenate([h.ravel() for h in self.holdings])

    @staticmethod
    def from_flat(market: Market, flat: np.ndarray) -> "Strategy":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (market.n_positions,):
            raise ValueError("flat holdings have the wrong length")
        out = []
        pos = 0
        for t in range(market.tree.horizon):
            rows = market.tree.n_cells(t)
            block = flat[pos : pos + rows * market.n_assets]
            out.append(block.reshape(rows, market.n_assets))
            pos += rows * market.n_assets
        return Strategy(market, out)

    @staticmethod
    def zero(market: Market) -> "Strategy":
        return Strategy.from_flat(market, np.zeros(market.n_positions))


@dataclass(frozen=True)
class ScenarioModel:
    """Bundle of space, market and claim sharing one scenario count."""

    space: ScenarioSpace
    market: Market
    claim: Claim

    def __post_init__(self):
        n = self.space.size
        if self.market.tree.n_scenarios != n:
            raise ValueError("market tree and scenario space sizes differ")
        if self.claim.size != n:
            raise ValueError("claim length and scenario count differ")

    @property
    def n_scenarios(self) -> int:
        return self.space.size


def expectation(measure: np.ndarray, values: np.ndarray) -> float:
    """Pairing sum_w measure_w * values_w (measure need not be normalized)."""
    m = np.asarray(measure, dtype=float)
    x = np.asarray(values, dtype=float)
    if m.shape != x.shape:
        raise ValueError("measure and values must have equal length")
    return float(m @ x)


def terminal_gain(market: Market, strategy: Strategy) -> np.ndarray:
    """Accumulated trading gain of the strategy, one value per scenario."""
    if strategy.market is not market:
        # allow structurally identical markets; only the shape matters
        pass
    return market.gain_matrix @ strategy.flatten()


def utility_values(utility, wealth: np.ndarray) -> np.ndarray:
    """U applied per scenario; -inf propagates from deep exponential tails."""
    return np.array([utility.u(float(x)) for x in np.asarray(wealth, dtype=float)])


def worst_case_expected_utility(
    model: ScenarioModel, priors: PriorSet, utility, theta: np.ndarray
) -> Tuple[float, int]:
    """min over prior vertices of E_P[U(gain + claim)] and its argmin.

    The inner infimum over the prior polytope of a P-linear expression
    is attained at a vertex, so scanning vertices is exact.  Ties are
    broken toward the lowest vertex index within 1e-12.
    """
    gains = model.market.gain_matrix @ np.asarray(theta, dtype=float)
    uvals = utility_values(utility, gains + model.claim.payoff)
    vals = model_vertex_utilities(priors, uvals)
    best = int(np.argmin(vals))
    # argmin already returns the first minimizer; make the tie rule explicit
    for i in range(best):
        if vals[i] <= vals[best] + 1e-12:
            best = i
            break
    return float(vals[best]), best


def model_vertex_utilities(priors: PriorSet, uvals: np.ndarray) -> np.ndarray:
    """E_P[uvals] for each prior vertex P, with -inf handled exactly."""
    if np.all(np.isfinite(uvals)):
        return priors.vertices @ uvals
    out = np.empty(priors.n_vertices)
    for i, vert in enumerate(priors.vertices):
        acc = 0.0
        for p, u in zip(vert, uvals):
            if p > 0.0:
                acc += p * u
        out[i] = acc
    return out
