"""Indifference pricing checks: closed forms, route agreement, axioms.

On a complete market the martingale measure is unique, the penalty
term vanishes, and both indifference bounds equal the expectation under
that measure regardless of utility or prior: the binomial up-indicator
prices at exactly 1/3.  Incomplete markets are checked through the
pricing axioms (translation, monotonicity, buyer <= seller) and the
agreement of the penalty route with the independent bisection route.
"""

import math

import numpy as np
import pytest

from robustdual import (
    Claim,
    PriorSet,
    ScenarioModel,
    SolverOptions,
    build_constraints,
    claimless_value,
    exponential_utility,
    glued_utility,
    indifference_price,
    is_member,
    penalty_gamma,
    price_by_bisection,
    solve_dual,
)

from test_solve import binomial_model, trinomial_model, trinomial_measures

EXP = exponential_utility()
GLUED = glued_utility()
OPTS = SolverOptions(tol=1e-6)


def priced_model(base_model, payoff):
    return ScenarioModel(
        base_model.space, base_model.market, Claim(np.asarray(payoff, dtype=float))
    )


class TestCompleteMarket:
    @pytest.mark.parametrize("utility", [EXP, GLUED], ids=["entropic", "glued"])
    @pytest.mark.parametrize("prior", [(0.5, 0.5), (0.8, 0.2)])
    def test_up_indicator_prices_at_one_third(self, utility, prior):
        model = binomial_model(claim=np.array([1.0, 0.0]))
        priors = PriorSet(np.array([prior]))
        report = indifference_price(model, priors, utility, OPTS)
        assert report.buyer == pytest.approx(1.0 / 3.0, abs=1e-6)
        assert report.seller == pytest.approx(1.0 / 3.0, abs=1e-6)

    def test_bisection_route_agrees(self):
        model = binomial_model(claim=np.array([1.0, 0.0]))
        priors = PriorSet(np.array([[0.6, 0.4]]))
        buyer = price_by_bisection(model, priors, EXP, "buyer", OPTS, price_tol=1e-6)
        seller = price_by_bisection(model, priors, EXP, "seller", OPTS, price_tol=1e-6)
        assert buyer == pytest.approx(1.0 / 3.0, abs=1e-4)
        assert seller == pytest.approx(1.0 / 3.0, abs=1e-4)

    def test_replicable_claim_prices_at_expectation(self):
        # claim = 0.5 + 2 * gain is replicable: price is its E_Q, exactly
        q = np.array([1.0 / 3.0, 2.0 / 3.0])
        payoff = 0.5 + 2.0 * np.array([1.0, -0.5])
        model = binomial_model(claim=payoff)
        priors = PriorSet(np.array([[0.4, 0.6]]))
        report = indifference_price(model, priors, GLUED, OPTS)
        want = float(q @ payoff)
        assert report.buyer == pytest.approx(want, abs=1e-6)
        assert report.seller == pytest.approx(want, abs=1e-6)


class TestConstantsAndTranslation:
    def test_constant_claim_prices_at_itself(self):
        model = trinomial_model(claim=np.full(3, 0.7))
        priors = PriorSet(np.array([[0.4, 0.35, 0.25]]))
        report = indifference_price(model, priors, EXP, OPTS)
        assert report.buyer == pytest.approx(0.7, abs=1e-6)
        assert report.seller == pytest.approx(0.7, abs=1e-6)

    @pytest.mark.parametrize("utility", [EXP, GLUED], ids=["entropic", "glued"])
    def test_translation_shifts_both_bounds(self, utility):
        payoff = np.array([0.6, -0.2, 0.3])
        shift = 0.45
        priors = PriorSet(np.array([[0.4, 0.35, 0.25], [0.3, 0.3, 0.4]]))
        base = trinomial_model(claim=payoff)
        moved = priced_model(base, payoff + shift)
        v0 = claimless_value(base, priors, utility, OPTS)
        r0 = indifference_price(base, priors, utility, OPTS, v0=v0)
        r1 = indifference_price(moved, priors, utility, OPTS, v0=v0)
        assert r1.buyer - r0.buyer == pytest.approx(shift, abs=1e-5)
        assert r1.seller - r0.seller == pytest.approx(shift, abs=1e-5)

    def test_monotonicity_in_the_claim(self):
        lower = np.array([0.2, -0.4, 0.1])
        bump = np.array([0.3, 0.0, 0.5])
        priors = PriorSet(np.array([[0.5, 0.25, 0.25]]))
        base = trinomial_model(claim=lower)
        v0 = claimless_value(base, priors, EXP, OPTS)
        r_lo = indifference_price(base, priors, EXP, OPTS, v0=v0)
        r_hi = indifference_price(priced_model(base, lower + bump), priors, EXP, OPTS, v0=v0)
        assert r_hi.buyer >= r_lo.buyer - 1e-7
        assert r_hi.seller >= r_lo.seller - 1e-7


class TestIncompleteMarket:
    payoff = np.array([1.0, 0.0, 0.0])  # not replicable on the trinomial market

    def test_buyer_strictly_below_seller(self):
        model = trinomial_model(claim=self.payoff)
        priors = PriorSet(np.array([[0.45, 0.3, 0.25]]))
        report = indifference_price(model, priors, EXP, OPTS)
        assert report.seller - report.buyer > 1e-4
        # utility bounds sit inside the arbitrage interval (0, 1/3)
        assert report.buyer > -1e-6
        assert report.seller < 1.0 / 3.0 + 1e-6

    @pytest.mark.parametrize("utility", [EXP, GLUED], ids=["entropic", "glued"])
    def test_penalty_route_matches_bisection(self, utility):
        model = trinomial_model(claim=self.payoff)
        priors = PriorSet(np.array([[0.45, 0.3, 0.25]]))
        v0 = claimless_value(model, priors, utility, OPTS)
        report = indifference_price(model, priors, utility, OPTS, v0=v0)
        buyer_bis = price_by_bisection(
            model, priors, utility, "buyer", OPTS, v0=v0, price_tol=1e-5
        )
        seller_bis = price_by_bisection(
            model, priors, utility, "seller", OPTS, v0=v0, price_tol=1e-5
        )
        assert report.buyer == pytest.approx(buyer_bis, abs=2e-4)
        assert report.seller == pytest.approx(seller_bis, abs=2e-4)

    def test_buyer_dominates_worst_case_expectation(self):
        model = trinomial_model(claim=self.payoff)
        priors = PriorSet(np.array([[0.4, 0.4, 0.2], [0.2, 0.5, 0.3]]))
        report = indifference_price(model, priors, EXP, OPTS)
        # E_Q[B] over the martingale segment q(t) = (t, 1-3t, 2t) is t
        assert report.buyer >= 0.0 - 1e-6
        assert is_member(
            build_constraints(model.market), report.measure_buy, tol=1e-7
        )


class TestPenaltyGamma:
    def test_vanishes_on_the_claimless_optimizer(self):
        model = trinomial_model()
        priors = PriorSet(np.array([[0.4, 0.35, 0.25]]))
        res = solve_dual(model, priors, EXP, OPTS)
        gamma = penalty_gamma(EXP, priors, res.measure, res.value)
        assert 0.0 <= gamma <= 1e-6

    def test_positive_away_from_the_optimizer(self):
        model = trinomial_model()
        priors = PriorSet(np.array([[0.4, 0.35, 0.25]]))
        v0 = solve_dual(model, priors, EXP, OPTS).value
        off = trinomial_measures(0.30)  # near the polytope boundary
        gamma = penalty_gamma(EXP, priors, off, v0)
        assert gamma > 1e-4

    def test_nonnegative_on_random_measures(self):
        model = trinomial_model()
        priors = PriorSet(np.array([[0.5, 0.3, 0.2], [0.2, 0.4, 0.4]]))
        v0 = solve_dual(model, priors, GLUED, OPTS).value
        rng = np.random.default_rng(5)
        for t in rng.uniform(0.01, 0.32, size=5):
            gamma = penalty_gamma(GLUED, priors, trinomial_measures(float(t)), v0)
            assert gamma >= 0.0


class TestValidation:
    def test_bad_side_rejected(self):
        model = binomial_model(claim=np.array([1.0, 0.0]))
        priors = PriorSet(np.array([[0.5, 0.5]]))
        with pytest.raises(ValueError):
            price_by_bisection(model, priors, EXP, side="mid")

    def test_claimless_is_negative_for_entropic(self):
        model = trinomial_model(claim=np.array([1.0, 0.0, 0.0]))
        priors = PriorSet(np.array([[0.4, 0.3, 0.3]]))
        assert claimless_value(model, priors, EXP, OPTS) < -1e-9
