"""Acceptance gate: the ten headline guarantees at their stated tolerances.

Each test prints one pass/fail line (visible under pytest -s or on
failure) and asserts the same condition.  The shared instance suite
spans binomial, trinomial, two-period, degenerate, and wide one-period
markets with 2 to 8 scenarios, singleton and multi-vertex strictly
positive priors, both built-in utilities, and claims bounded by 3 in
sup norm.
"""

import time
from dataclasses import dataclass

import numpy as np
import pytest

from robustdual import (
    Claim,
    FiltrationTree,
    Market,
    PriorSet,
    ScenarioModel,
    ScenarioSpace,
    SolverOptions,
    build_truncated_family,
    conjugate,
    conjugate_identity_check,
    density_tail_modulus,
    duality_gap,
    epsilon_mixing_diagnostic,
    exponential_utility,
    glued_utility,
    indifference_price,
    perspective,
    price_by_bisection,
    prior_mean,
    tail_expectation_modulus,
)
from fractions import Fraction

from test_solve import (
    EXP,
    GLUED,
    binomial_model,
    deterministic_model,
    random_instance,
    trinomial_model,
)

OPTS = SolverOptions(tol=1e-6)


def acceptance_line(num: int, desc: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    tail = f"  ({detail})" if detail else ""
    print(f"[acceptance {num:02d}] {desc}: {status}{tail}", flush=True)


# ---------------------------------------------------------------------------
# the shared instance suite
# ---------------------------------------------------------------------------


@dataclass
class Instance:
    name: str
    model: ScenarioModel
    priors: PriorSet
    utility: object


def wide_model(n: int, seed: int) -> ScenarioModel:
    """One-period market with n terminal scenarios straddling par."""
    rng = np.random.default_rng(seed)
    prices = np.sort(rng.uniform(0.3, 2.2, size=n))[::-1].copy()
    prices[0] = max(prices[0], 1.25)
    prices[-1] = min(prices[-1], 0.75)
    tree = FiltrationTree([[list(range(n))], [[i] for i in range(n)]])
    market = Market(tree, [[[1.0]], [[float(p)] for p in prices]])
    w = rng.dirichlet(np.ones(n)) * 0.9 + 0.1 / n
    claim = rng.uniform(-2.5, 2.5, size=n)
    return ScenarioModel(ScenarioSpace(w / w.sum()), market, Claim(claim))


def positive_priors(n: int, k: int, seed: int) -> PriorSet:
    rng = np.random.default_rng(seed)
    verts = rng.dirichlet(np.ones(n), size=k)
    return PriorSet(0.9 * verts + 0.1 / n)


def build_suite():
    suite = []
    seed = 100
    for kind in ("binomial", "trinomial", "two_period"):
        for n_vertices in (1, 2, 4):
            for utility, uname in ((EXP, "exp"), (GLUED, "glued")):
                seed += 1
                model, priors = random_instance(kind, n_vertices, seed)
                suite.append(
                    Instance(f"{kind}-{uname}-v{n_vertices}-s{seed}", model, priors, utility)
                )
    for n in (5, 6, 7, 8):
        for utility, uname in ((EXP, "exp"), (GLUED, "glued")):
            seed += 1
            model = wide_model(n, seed)
            priors = positive_priors(n, 2 + (n % 3), seed + 7)
            suite.append(Instance(f"wide{n}-{uname}-s{seed}", model, priors, utility))
    rng = np.random.default_rng(9)
    for utility, uname in ((EXP, "exp"), (GLUED, "glued")):
        model = deterministic_model(rng.uniform(-2.0, 2.0, size=3))
        suite.append(
            Instance(f"degenerate-{uname}", model, positive_priors(3, 3, 17), utility)
        )
    return suite


SUITE = build_suite()
assert len(SUITE) >= 20


@pytest.fixture(scope="module")
def solved():
    """One primal/dual solve per suite instance, timed, reused below."""
    out = {}
    for inst in SUITE:
        start = time.perf_counter()
        report = duality_gap(inst.model, inst.priors, inst.utility, OPTS)
        out[inst.name] = (inst, report, time.perf_counter() - start)
    return out


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def test_criterion_01_strong_duality(solved):
    worst_gap = max(abs(rec[1].gap) for rec in solved.values())
    slowest = max(rec[2] for rec in solved.values())
    ok = worst_gap <= 1e-5 and slowest < 10.0
    acceptance_line(
        1,
        f"strong duality on {len(solved)} instances",
        ok,
        f"max |dual - primal| = {worst_gap:.3g}, slowest solve {slowest:.2f}s",
    )
    assert worst_gap <= 1e-5
    assert slowest < 10.0


def test_criterion_02_weak_duality_iterates(solved):
    worst = min(rec[1].worst_pair_violation for rec in solved.values())
    violations = sum(0 if rec[1].weak_duality_ok else 1 for rec in solved.values())
    ok = worst >= -1e-8 and violations == 0
    acceptance_line(
        2,
        "weak duality at every recorded iterate pair",
        ok,
        f"worst pairwise dual - primal = {worst:.3g}, violations {violations}",
    )
    assert violations == 0
    assert worst >= -1e-8


def test_criterion_03_conjugate_identity_micro(solved):
    small = [rec for rec in solved.values() if rec[0].model.n_scenarios <= 4]
    small = small[:12]
    assert len(small) >= 10
    worst_gap = -np.inf
    worst_young = -np.inf
    for idx, (inst, report, _) in enumerate(small):
        rng = np.random.default_rng(300 + idx)
        mass = rng.uniform(0.1, 1.5, size=inst.model.n_scenarios)
        rep = conjugate_identity_check(
            inst.utility, inst.model.claim, inst.priors, mass
        )
        worst_gap = max(worst_gap, rep.gap)
        worst_young = max(worst_young, rep.young_max_violation)
    ok = worst_gap <= 1e-3 and worst_young <= 1e-8
    acceptance_line(
        3,
        f"grid conjugate matches dual functional on {len(small)} micro instances",
        ok,
        f"max dual - grid sup = {worst_gap:.3g} <= 1e-3, "
        f"max Young-side excess = {worst_young:.3g} <= 1e-8",
    )
    assert worst_gap <= 1e-3
    assert worst_young <= 1e-8


def test_criterion_04_conjugate_closed_forms():
    ys = np.logspace(-4, 3, 100)
    exp_numeric = exponential_utility(mode="numeric")
    exp_err = max(
        abs(conjugate(exp_numeric, y) - (y * np.log(y) - y)) for y in ys
    )
    glued_numeric = glued_utility(mode="numeric")
    glued_closed = glued_utility()
    glued_err = max(
        abs(conjugate(glued_numeric, y) - glued_closed.v(y)) for y in ys
    )
    ok = exp_err <= 1e-8 and glued_err <= 1e-8
    acceptance_line(
        4,
        "numeric conjugates match closed forms on 100 log-spaced points",
        ok,
        f"exp err {exp_err:.3g}, glued err {glued_err:.3g}",
    )
    assert exp_err <= 1e-8
    assert glued_err <= 1e-8


def test_criterion_05_perspective_cases_and_convexity():
    rng = np.random.default_rng(5)
    exact_ok = True
    for spec in (EXP, GLUED):
        exact_ok = exact_ok and perspective(spec, 0.0, 0.0) == 0.0
        exact_ok = exact_ok and perspective(spec, 0.7, 0.0) == np.inf
        exact_ok = exact_ok and perspective(spec, -0.3, 0.0) == np.inf
    homogeneity_err = 0.0
    convexity_violation = 0.0
    for _ in range(1000):
        spec = EXP if rng.integers(2) == 0 else GLUED
        y1, y2 = rng.uniform(0.01, 5.0, size=2)
        z1, z2 = rng.uniform(0.01, 5.0, size=2)
        t = rng.uniform(0.1, 4.0)
        p1 = perspective(spec, y1, z1)
        homogeneity_err = max(
            homogeneity_err,
            abs(perspective(spec, t * y1, t * z1) - t * p1) / max(1.0, abs(t * p1)),
        )
        lam = rng.uniform(0.0, 1.0)
        mixed = perspective(spec, lam * y1 + (1 - lam) * y2, lam * z1 + (1 - lam) * z2)
        bound = lam * p1 + (1 - lam) * perspective(spec, y2, z2)
        convexity_violation = max(convexity_violation, mixed - bound)
    ok = exact_ok and homogeneity_err <= 1e-9 and convexity_violation <= 1e-9
    acceptance_line(
        5,
        "perspective boundary cases exact; homogeneity and convexity on 1000 points",
        ok,
        f"homogeneity err {homogeneity_err:.3g}, convexity excess {convexity_violation:.3g}",
    )
    assert exact_ok
    assert homogeneity_err <= 1e-9
    assert convexity_violation <= 1e-9


def test_criterion_06_variational_bound_strict(solved):
    exp_records = [rec for rec in solved.values() if rec[0].utility is EXP]
    assert exp_records
    worst = max(rec[1].dual.value for rec in exp_records)
    ok = worst < -1e-9
    acceptance_line(
        6,
        f"dual values sit strictly below V(0) = 0 on {len(exp_records)} entropic runs",
        ok,
        f"max dual value {worst:.3g} < -1e-9",
    )
    assert worst < -1e-9


def test_criterion_07_indifference_pricing():
    up = binomial_model(claim=np.array([1.0, 0.0]))
    priors = PriorSet(np.array([[0.5, 0.5]]))
    pr = indifference_price(up, priors, EXP, OPTS)
    pb_bisect = price_by_bisection(up, priors, EXP, side="buyer", opts=OPTS)
    ps_bisect = price_by_bisection(up, priors, EXP, side="seller", opts=OPTS)
    replication_ok = (
        abs(pr.buyer - 1 / 3) <= 1e-4
        and abs(pr.seller - 1 / 3) <= 1e-4
        and abs(pb_bisect - 1 / 3) <= 1e-4
        and abs(ps_bisect - 1 / 3) <= 1e-4
    )

    rng = np.random.default_rng(77)
    priors3 = positive_priors(3, 2, 31)
    translation_err = 0.0
    monotonicity_violation = 0.0
    for _ in range(10):
        payoff = rng.uniform(-2.0, 2.0, size=3)
        shift = rng.uniform(-1.0, 1.0)
        bump = rng.uniform(0.0, 1.0, size=3)
        base = indifference_price(trinomial_model(claim=payoff), priors3, EXP, OPTS)
        shifted = indifference_price(
            trinomial_model(claim=payoff + shift), priors3, EXP, OPTS
        )
        bumped = indifference_price(
            trinomial_model(claim=payoff + bump), priors3, EXP, OPTS
        )
        translation_err = max(
            translation_err,
            abs(shifted.buyer - base.buyer - shift),
            abs(shifted.seller - base.seller - shift),
        )
        monotonicity_violation = max(
            monotonicity_violation,
            base.buyer - bumped.buyer,
            base.seller - bumped.seller,
        )
    ok = (
        replication_ok
        and translation_err <= 1e-4
        and monotonicity_violation <= 1e-6
    )
    acceptance_line(
        7,
        "replication price 1/3 via both routes; translation and monotonicity on 10 claims",
        ok,
        f"p_b = {pr.buyer:.6f}, bisection {pb_bisect:.6f}, "
        f"translation err {translation_err:.3g}, monotonicity excess {monotonicity_violation:.3g}",
    )
    assert replication_ok
    assert translation_err <= 1e-4
    assert monotonicity_violation <= 1e-6


def test_criterion_08_epsilon_mixing_stability(solved):
    worst = 0.0
    for inst, report, _ in solved.values():
        records = epsilon_mixing_diagnostic(
            inst.model, inst.priors, inst.utility, OPTS,
            epsilons=(1e-2, 1e-4, 1e-6), base_value=report.dual.value,
        )
        worst = max(worst, max(abs(r.delta) for r in records))
    ok = worst <= 5e-6
    acceptance_line(
        8,
        f"equivalent-measure mixing shifts dual values by <= 5e-6 on {len(solved)} instances",
        ok,
        f"max |delta| = {worst:.3g}",
    )
    assert worst <= 5e-6


def test_criterion_09_truncated_family_identities():
    family = build_truncated_family(12)
    means_ok = all(
        prior_mean(family, n) == 2 - Fraction(1, n) for n in range(1, 13)
    )
    tail_ok = all(
        tail_expectation_modulus(family, N) == 1 for N in range(2, 13)
    )
    ladder = [2, 3, 5, 9, 17, 33, 65, 129, 257]
    dens = [density_tail_modulus(family, N) for N in ladder]
    dens_ok = all(a >= b for a, b in zip(dens, dens[1:]))
    ok = means_ok and tail_ok and dens_ok
    acceptance_line(
        9,
        "truncated family at n_max = 12: exact means, constant tail modulus, decaying density modulus",
        ok,
        "E_n[W] = 2 - 1/n, sup_n E_n[W; W >= N] = 1 for N in [2, 12], "
        "density modulus nonincreasing",
    )
    assert means_ok
    assert tail_ok
    assert dens_ok


def test_criterion_10_determinism(solved):
    names = [SUITE[i].name for i in (0, 7, len(SUITE) - 1)]
    mismatches = []
    for name in names:
        inst, first, _ = solved[name]
        again = duality_gap(inst.model, inst.priors, inst.utility, OPTS)
        pairs = [
            (first.primal.value, again.primal.value),
            (first.dual.value, again.dual.value),
            (first.gap, again.gap),
            (first.dual.lam, again.dual.lam),
        ]
        pairs += list(zip(first.dual.measure, again.dual.measure))
        pairs += list(zip(first.dual.prior_weights, again.dual.prior_weights))
        pairs += list(zip(first.primal.strategy, again.primal.strategy))
        for a, b in pairs:
            if f"{a:.12g}" != f"{b:.12g}":
                mismatches.append((name, a, b))
    ok = not mismatches
    acceptance_line(
        10,
        f"re-solving {len(names)} instances reproduces every printed digit",
        ok,
        "all 12-significant-digit renderings identical" if ok else repr(mismatches[:3]),
    )
    assert not mismatches
