#!/usr/bin/env python3
"""Solve a battery of random instances and tabulate the duality gaps.

Prints one row per instance: tree kind, scenario count, prior vertex
count, utility, primal and dual values, the signed gap, the dual
certificate gap, and wall time.  A nonzero exit means some instance
missed the tolerance.
"""

import argparse
import sys
import time

import numpy as np

from robustdual import (
    Claim,
    FiltrationTree,
    Market,
    PriorSet,
    ScenarioModel,
    ScenarioSpace,
    SolverOptions,
    duality_gap,
    exponential_utility,
    glued_utility,
)

EXP = exponential_utility()
GLUED = glued_utility()


def one_period_model(n, seed, claim_scale):
    rng = np.random.default_rng(seed)
    prices = np.sort(rng.uniform(0.3, 2.2, size=n))[::-1].copy()
    prices[0] = max(prices[0], 1.25)  # straddle par so an EMM exists
    prices[-1] = min(prices[-1], 0.75)
    tree = FiltrationTree([[list(range(n))], [[i] for i in range(n)]])
    market = Market(tree, [[[1.0]], [[float(p)] for p in prices]])
    w = rng.dirichlet(np.ones(n)) * 0.9 + 0.1 / n
    claim = rng.uniform(-claim_scale, claim_scale, size=n)
    return ScenarioModel(ScenarioSpace(w / w.sum()), market, Claim(claim))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--claim-scale", type=float, default=2.0)
    args = ap.parse_args()

    opts = SolverOptions(tol=args.tol)
    rng = np.random.default_rng(args.seed)
    header = (
        f"{'instance':<22} {'n':>2} {'k':>2} {'utility':<7} "
        f"{'primal':>14} {'dual':>14} {'gap':>10} {'cert':>9} {'sec':>6}"
    )
    print(header)
    print("-" * len(header))

    worst = 0.0
    for i in range(args.instances):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, 5))
        utility, uname = (EXP, "exp") if rng.integers(2) == 0 else (GLUED, "glued")
        seed = int(rng.integers(1, 10**6))
        model = one_period_model(n, seed, args.claim_scale)
        verts = np.random.default_rng(seed + 1).dirichlet(np.ones(n), size=k)
        priors = PriorSet(0.9 * verts + 0.1 / n)
        start = time.perf_counter()
        rep = duality_gap(model, priors, utility, opts)
        sec = time.perf_counter() - start
        worst = max(worst, abs(rep.gap))
        print(
            f"{f'one-period-{seed}':<22} {n:>2} {k:>2} {uname:<7} "
            f"{rep.primal.value:>14.9f} {rep.dual.value:>14.9f} "
            f"{rep.gap:>10.2e} {rep.dual.fw_gap:>9.2e} {sec:>6.2f}"
        )

    print("-" * len(header))
    print(f"worst |gap| = {worst:.3e} over {args.instances} instances")
    return 0 if worst <= 1e-5 else 1


if __name__ == "__main__":
    sys.exit(main())
