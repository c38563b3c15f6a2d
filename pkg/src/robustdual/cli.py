"""Command line front end: solve, price, verify, examples.

Exit codes: 0 success, 2 input validation failure, 3 tolerance or
invariant failure (the report still prints), 4 internal error.

Option precedence for tol / max_iter / seed: command-line flag, then
ROBUSTDUAL_* environment variable, then the scenario's [solver]
section, then built-in defaults.  Reports never carry timestamps, so
identical inputs and seed reproduce them byte for byte.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .divergence import conjugate_identity_check, divergence
from .errors import AssumptionError, SolverError
from .market import expectation
from .pricing import indifference_price, price_by_bisection
from .report import RunReport
from .scenario_io import ScenarioBundle, ScenarioError, _options_from, parse_scenario
from .solve import (
    SolverOptions,
    check_variational_bound,
    duality_gap,
    epsilon_mixing_diagnostic,
)
from .tail_family import (
    build_truncated_family,
    density_tail_modulus,
    power_tail_moduli,
    prior_mean,
    tail_expectation_modulus,
)
from .utility import young_gap

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TOLERANCE = 3
EXIT_INTERNAL = 4

ENV_PREFIX = "ROBUSTDUAL_"
DEFAULT_EPSILONS = (1e-2, 1e-4, 1e-6)


def _env(name: str) -> Optional[str]:
    return os.environ.get(ENV_PREFIX + name)


def _env_float(name: str) -> Optional[float]:
    raw = _env(name)
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        raise ScenarioError(f"environment variable {ENV_PREFIX}{name} is not a number: {raw!r}")


def _env_int(name: str) -> Optional[int]:
    raw = _env(name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ScenarioError(f"environment variable {ENV_PREFIX}{name} is not an integer: {raw!r}")


def _pick(*values):
    for v in values:
        if v is not None:
            return v
    return None


def _resolve_options(args, bundle: Optional[ScenarioBundle]) -> SolverOptions:
    base = bundle.options if bundle is not None else SolverOptions()
    tol = _pick(args.tol, _env_float("TOL"), base.tol)
    max_iter = _pick(args.max_iter, _env_int("MAX_ITER"), base.max_iter_dual)
    seed = _pick(args.seed, _env_int("SEED"), base.seed)
    if not 0.0 < tol < 1.0:
        raise ScenarioError(f"tol must lie in (0, 1), got {tol!r}")
    if max_iter < 1:
        raise ScenarioError(f"max_iter must be positive, got {max_iter!r}")
    return _options_from(float(tol), int(max_iter), int(seed))


def _resolve_epsilons(args) -> List[float]:
    raw = _pick(getattr(args, "epsilon_mixing_list", None), _env("EPSILON_MIXING_LIST"))
    if raw is None:
        return list(DEFAULT_EPSILONS)
    out: List[float] = []
    for part in str(raw).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            eps = float(part)
        except ValueError:
            raise ScenarioError(f"bad epsilon {part!r} in epsilon-mixing list")
        if not 0.0 < eps < 1.0:
            raise ScenarioError(f"epsilon {eps!r} must lie in (0, 1)")
        out.append(eps)
    if not out:
        raise ScenarioError("epsilon-mixing list is empty")
    return out


def _emit(report: RunReport, args) -> None:
    if getattr(args, "report", None) == "-":
        sys.stdout.write(report.to_json())
        return
    sys.stdout.write(report.to_text())
    if getattr(args, "report", None):
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    bundle = parse_scenario(args.scenario)
    opts = _resolve_options(args, bundle)
    epsilons = _resolve_epsilons(args)
    gap = duality_gap(bundle.model, bundle.priors, bundle.utility, opts)
    dual, primal = gap.dual, gap.primal

    # emission-time identity: the reported value must recompute from
    # the reported optimizers
    payoff = bundle.model.claim.payoff
    recomputed = divergence(bundle.utility, dual.lam * dual.measure, dual.prior)
    recomputed += dual.lam * expectation(dual.measure, payoff)
    if not math.isfinite(recomputed) or abs(recomputed - dual.value) > 1e-7:
        raise SolverError(
            f"reported dual value {dual.value!r} does not recompute from its "
            f"optimizers ({recomputed!r})"
        )

    mix = epsilon_mixing_diagnostic(
        bundle.model, bundle.priors, bundle.utility, opts,
        epsilons=epsilons, base_value=dual.value,
    )

    rep = RunReport("solve")
    rep.config = {
        "scenario": args.scenario,
        "tol": opts.tol,
        "max_iter": opts.max_iter_dual,
        "seed": opts.seed,
    }
    rep.numbers = {
        "primal_value": primal.value,
        "dual_value": dual.value,
        "duality_gap": gap.gap,
        "lambda": dual.lam,
        "dual_iterations": dual.iterations,
        "primal_iterations": primal.iterations,
        "dual_certificate_gap": dual.fw_gap,
        "active_prior_vertices": int(np.sum(dual.prior_weights > 1e-9)),
        "worst_case_vertex": primal.active_vertex,
    }
    rep.vectors = {
        "martingale_measure": [float(x) for x in dual.measure],
        "prior_weights": [float(x) for x in dual.prior_weights],
        "worst_prior": [float(x) for x in dual.prior],
        "strategy": [float(x) for x in primal.strategy],
    }
    rep.add_table(
        "epsilon_mixing",
        ("epsilon", "dual_value", "delta"),
        [[r.epsilon, r.value, r.delta] for r in mix],
    )
    gap_tol = max(10.0 * opts.tol, 1e-5)
    rep.check(
        "dual-certificate-converged",
        dual.converged,
        f"certificate gap {dual.fw_gap:.3g} vs tol {opts.tol:.3g}",
    )
    rep.check(
        "weak-duality-iterates",
        gap.weak_duality_ok,
        f"worst pair violation {gap.worst_pair_violation:.3g} >= -1e-8",
    )
    rep.check(
        "duality-gap-closed",
        abs(gap.gap) <= gap_tol,
        f"|gap| = {abs(gap.gap):.3g} vs {gap_tol:.3g}",
    )
    _emit(rep, args)
    return EXIT_OK if rep.all_checks_pass else EXIT_TOLERANCE


# ---------------------------------------------------------------------------
# price
# ---------------------------------------------------------------------------


def cmd_price(args) -> int:
    bundle = parse_scenario(args.scenario)
    opts = _resolve_options(args, bundle)
    model = bundle.with_claim(args.claim)
    pr = indifference_price(model, bundle.priors, bundle.utility, opts)

    rep = RunReport("price")
    rep.config = {
        "scenario": args.scenario,
        "claim": args.claim if args.claim else "(default)",
        "tol": opts.tol,
        "max_iter": opts.max_iter_dual,
        "seed": opts.seed,
    }
    rep.numbers = {
        "buyer_price": pr.buyer,
        "seller_price": pr.seller,
        "claimless_value": pr.claimless,
    }
    rep.vectors = {
        "buyer_measure": [float(x) for x in pr.measure_buy],
        "seller_measure": [float(x) for x in pr.measure_sell],
    }
    rep.check(
        "buyer-below-seller",
        pr.buyer <= pr.seller + 1e-7,
        f"p_b = {pr.buyer:.9g}, p_s = {pr.seller:.9g}",
    )
    bound = float(np.max(np.abs(model.claim.payoff)))
    rep.check(
        "prices-within-payoff-range",
        -bound - 1e-6 <= pr.buyer and pr.seller <= bound + 1e-6,
        f"payoff bound {bound:.3g}",
    )
    if args.check_bisection:
        pb2 = price_by_bisection(
            model, bundle.priors, bundle.utility, side="buyer",
            opts=opts, price_tol=max(opts.tol, 1e-6),
        )
        ps2 = price_by_bisection(
            model, bundle.priors, bundle.utility, side="seller",
            opts=opts, price_tol=max(opts.tol, 1e-6),
        )
        rep.numbers["buyer_price_bisection"] = pb2
        rep.numbers["seller_price_bisection"] = ps2
        rep.check(
            "bisection-agrees-buyer",
            abs(pr.buyer - pb2) <= 2e-4,
            f"|{pr.buyer:.9g} - {pb2:.9g}| <= 2e-4",
        )
        rep.check(
            "bisection-agrees-seller",
            abs(pr.seller - ps2) <= 2e-4,
            f"|{pr.seller:.9g} - {ps2:.9g}| <= 2e-4",
        )
    _emit(rep, args)
    return EXIT_OK if rep.all_checks_pass else EXIT_TOLERANCE


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    bundle = parse_scenario(args.scenario)
    opts = _resolve_options(args, bundle)
    utility = bundle.utility
    rng = np.random.default_rng(opts.seed)

    rep = RunReport("verify")
    rep.config = {
        "scenario": args.scenario,
        "utility": bundle.document["utility"]["name"],
        "tol": opts.tol,
        "max_iter": opts.max_iter_dual,
        "seed": opts.seed,
    }

    # Young's inequality: V(y) + x y - U(x) >= 0, equality at y = U'(x)
    xs = rng.uniform(-3.0, 3.0, size=200)
    ys = np.exp(rng.uniform(math.log(1e-3), math.log(1e2), size=200))
    worst = min(young_gap(utility, x, y) for x, y in zip(xs, ys))
    eq_worst = max(
        abs(young_gap(utility, x, float(utility.u_prime(x))))
        for x in rng.uniform(-2.0, 2.0, size=20)
    )
    rep.numbers["young_worst_gap"] = worst
    rep.numbers["young_equality_residual"] = eq_worst
    rep.check("young-inequality", worst >= -1e-12, f"min gap {worst:.3g}")
    rep.check("young-equality-at-marginal", eq_worst <= 1e-7, f"residual {eq_worst:.3g}")

    # weak duality along recorded iterates plus the final gap
    gap = duality_gap(bundle.model, bundle.priors, bundle.utility, opts)
    gap_tol = max(10.0 * opts.tol, 1e-5)
    rep.numbers["primal_value"] = gap.primal.value
    rep.numbers["dual_value"] = gap.dual.value
    rep.numbers["duality_gap"] = gap.gap
    rep.check(
        "weak-duality-iterates",
        gap.weak_duality_ok,
        f"worst pair violation {gap.worst_pair_violation:.3g} >= -1e-8",
    )
    rep.check(
        "strong-duality-at-tolerance",
        abs(gap.gap) <= gap_tol,
        f"|gap| = {abs(gap.gap):.3g} vs {gap_tol:.3g}",
    )

    # conjugate identity: grid conjugate of the robust integral vs the
    # dual functional (exponential-size grid, so only at micro scale)
    n = bundle.model.n_scenarios
    if n <= 4:
        mass = gap.dual.lam * gap.dual.measure
        conj = conjugate_identity_check(
            utility, bundle.model.claim, bundle.priors, mass
        )
        rep.numbers["conjugate_grid_sup"] = conj.grid_sup
        rep.numbers["conjugate_dual_value"] = conj.dual_value
        rep.check(
            "conjugate-identity-young-side",
            conj.young_max_violation <= 1e-8,
            f"grid exceeds dual by at most {conj.young_max_violation:.3g}",
        )
        rep.check(
            "conjugate-identity-grid-match",
            conj.gap <= 1e-3 and not conj.diverged,
            f"dual - grid sup = {conj.gap:.3g} <= 1e-3",
        )
    else:
        rep.notes.append(
            f"conjugate grid check skipped: {n} scenarios exceed the "
            "4-scenario grid budget"
        )

    # variational bound: finite V(0) caps every dual value strictly
    holds, margin = check_variational_bound(utility, gap.dual.value)
    if math.isfinite(utility.v_at_zero):
        rep.numbers["variational_margin"] = margin
        rep.check(
            "variational-bound-strict",
            holds and margin > 1e-9,
            f"V(0) - dual = {margin:.3g} > 1e-9",
        )
    else:
        rep.notes.append("variational bound vacuous: V(0) is infinite")

    _emit(rep, args)
    return EXIT_OK if rep.all_checks_pass else EXIT_TOLERANCE


# ---------------------------------------------------------------------------
# examples
# ---------------------------------------------------------------------------


def cmd_examples(args) -> int:
    n_max = _pick(args.n_max, _env_int("N_MAX"), 12)
    gamma = args.gamma
    if not 3 <= n_max <= 30:
        raise ScenarioError(f"--n-max must lie in [3, 30], got {n_max}")
    if not 0.0 < gamma < 1.0:
        raise ScenarioError(f"--gamma must lie in (0, 1), got {gamma}")
    family = build_truncated_family(n_max)

    rep = RunReport("examples")
    rep.config = {"n_max": n_max, "gamma": gamma}

    means_ok = True
    mean_rows = []
    for n in range(1, n_max + 1):
        mean = prior_mean(family, n)
        want = 2 - Fraction(1, n)
        means_ok = means_ok and mean == want
        mean_rows.append([n, str(mean), str(want), float(mean)])
    rep.add_table(
        "prior_means", ("n", "E_n[W]", "2 - 1/n", "float"), mean_rows
    )
    rep.check("mean-identity-exact", means_ok, "E_n[W] = 2 - 1/n as rationals")

    tail_rows = []
    tail_ok = True
    for thr in range(1, n_max + 2):
        val = tail_expectation_modulus(family, thr)
        if 2 <= thr <= n_max:
            tail_ok = tail_ok and val == 1
        tail_rows.append([thr, str(val), float(val)])
    rep.add_table("tail_modulus", ("N", "exact", "float"), tail_rows)
    rep.check(
        "tail-modulus-constant-one",
        tail_ok,
        f"sup_n E_n[W; W >= N] = 1 for N in [2, {n_max}]",
    )

    z = 1 - Fraction(1, 2**n_max)
    cutoff = z * Fraction(2**n_max, n_max)
    ladder: List[int] = []
    thr = 2
    while thr <= cutoff:
        ladder.append(thr)
        thr *= 2
    ladder.append(int(cutoff) + 1)
    dens_vals = [density_tail_modulus(family, t) for t in ladder]
    rep.add_table(
        "prior_density_modulus",
        ("N", "exact", "float"),
        [[t, str(v), float(v)] for t, v in zip(ladder, dens_vals)],
    )
    rep.check(
        "density-modulus-nonincreasing",
        all(a >= b for a, b in zip(dens_vals, dens_vals[1:])),
        "uniform integrability of the prior densities",
    )
    rep.check(
        "density-modulus-vanishes",
        dens_vals[-1] == 0,
        f"zero above N = {float(cutoff):.6g}",
    )

    thresholds = [float(t) for t in range(2, n_max + 2)]
    power = power_tail_moduli(family, gamma, thresholds)
    linear = power_tail_moduli(family, 1.0, thresholds)
    rep.add_table(
        "power_contrast",
        ("N", f"gamma={gamma:g}", "gamma=1"),
        [[int(t), p, l] for t, p, l in zip(thresholds, power, linear)],
    )
    rep.check(
        "sublinear-power-uniformly-integrable",
        all(p <= l + 1e-15 for p, l in zip(power, linear))
        and power[-2] < linear[-2] - 1e-9,
        "W^gamma tails decay while W tails stay at 1",
    )

    _emit(rep, args)
    return EXIT_OK if rep.all_checks_pass else EXIT_TOLERANCE


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustdual",
        description=(
            "Robust utility maximization on finite market trees: solve the "
            "primal/dual pair, compute indifference prices, verify the "
            "duality invariants, or run the built-in truncated tail family."
        ),
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p: argparse.ArgumentParser, scenario: bool = True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario TOML file")
        p.add_argument("--tol", type=float, default=None, help="solver tolerance")
        p.add_argument("--max-iter", type=int, default=None, help="dual iteration cap")
        p.add_argument("--seed", type=int, default=None, help="RNG seed")
        p.add_argument(
            "--report", default=None, metavar="PATH",
            help="write the JSON report here ('-' prints JSON instead of text)",
        )

    p = sub.add_parser("solve", help="solve the primal and dual problems")
    common(p)
    p.add_argument(
        "--epsilon-mixing-list", default=None, metavar="E1,E2,...",
        help="epsilons for the equivalent-measure stability table",
    )
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("price", help="buyer/seller indifference prices")
    common(p)
    p.add_argument("--claim", default=None, help="named claim from the [claims] table")
    p.add_argument(
        "--check-bisection", action="store_true",
        help="cross-check prices against the bisection route",
    )
    p.set_defaults(fn=cmd_price)

    p = sub.add_parser("verify", help="run the duality invariant suites")
    common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("examples", help="truncated heavy-tail family tables")
    p.add_argument("--n-max", type=int, default=None, help="truncation level (3..30)")
    p.add_argument("--gamma", type=float, default=0.5, help="sublinear power in (0, 1)")
    p.add_argument(
        "--report", default=None, metavar="PATH",
        help="write the JSON report here ('-' prints JSON instead of text)",
    )
    p.set_defaults(fn=cmd_examples)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, AssumptionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
