"""Scenario file parsing, validation diagnostics, and round-trips."""

import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustdual import (
    AssumptionError,
    ScenarioError,
    emit_scenario,
    parse_scenario,
    parse_scenario_text,
)

FIXTURES = Path(__file__).resolve().parent.parent / "scenarios"
VALID_FIXTURES = [
    "binomial.toml",
    "trinomial.toml",
    "two_period.toml",
    "deterministic.toml",
    "custom_table.toml",
]

BASE = """
[space]
weights = [0.5, 0.5]

[tree]
levels = [[[0, 1]], [[0], [1]]]

[market]
prices = [[[1.0]], [[2.0], [0.5]]]

[claim]
payoff = [0.0, 0.0]

[priors]
vertices = [[0.5, 0.5]]

[utility]
name = "EXP"
"""


def replace_section(name: str, body: str) -> str:
    """BASE with section `name` swapped for `body` (body includes header)."""
    lines = BASE.strip().splitlines()
    out = []
    skipping = False
    for line in lines:
        if line.startswith("["):
            skipping = line.strip() == f"[{name}]"
            if skipping:
                continue
        if not skipping:
            out.append(line)
    return "\n".join(out) + "\n\n" + body + "\n"


class TestFixtures:
    @pytest.mark.parametrize("name", VALID_FIXTURES)
    def test_fixture_parses(self, name):
        bundle = parse_scenario(str(FIXTURES / name))
        assert bundle.model.n_scenarios == bundle.priors.n_scenarios
        assert 0.0 < bundle.options.tol < 1.0

    @pytest.mark.parametrize("name", VALID_FIXTURES)
    def test_fixture_round_trips(self, name):
        first = parse_scenario(str(FIXTURES / name))
        again = parse_scenario_text(emit_scenario(first), "emitted")
        assert again.document == first.document
        assert np.array_equal(again.model.claim.payoff, first.model.claim.payoff)
        assert np.array_equal(again.priors.vertices, first.priors.vertices)
        assert again.options == first.options

    def test_arbitrage_fixture_fails_a3(self):
        with pytest.raises(AssumptionError, match="assumption A3 violated"):
            parse_scenario(str(FIXTURES / "arbitrage.toml"))

    def test_binomial_named_claims(self):
        bundle = parse_scenario(str(FIXTURES / "binomial.toml"))
        up = bundle.claim_named("up-indicator")
        assert np.array_equal(up.payoff, [1.0, 0.0])
        assert np.array_equal(
            bundle.claim_named(None).payoff, bundle.model.claim.payoff
        )
        with pytest.raises(ScenarioError, match="unknown claim"):
            bundle.claim_named("no-such-claim")

    def test_missing_file(self):
        with pytest.raises(ScenarioError, match="cannot read"):
            parse_scenario(str(FIXTURES / "missing.toml"))


class TestValidation:
    def test_prior_sum_violation_names_a1(self):
        text = replace_section("priors", "[priors]\nvertices = [[0.5, 0.4]]")
        with pytest.raises(AssumptionError, match="assumption A1 violated"):
            parse_scenario_text(text)

    def test_negative_prior_entry_names_a1(self):
        text = replace_section("priors", "[priors]\nvertices = [[1.2, -0.2]]")
        with pytest.raises(AssumptionError, match="assumption A1 violated"):
            parse_scenario_text(text)

    def test_arbitrage_names_a3(self):
        text = replace_section(
            "market", "[market]\nprices = [[[1.0]], [[2.0], [1.5]]]"
        )
        with pytest.raises(AssumptionError, match="assumption A3 violated"):
            parse_scenario_text(text)

    def test_decode_error_carries_line(self):
        with pytest.raises(ScenarioError, match="line"):
            parse_scenario_text("[space\nweights = [1.0]", "broken.toml")

    def test_section_errors_carry_location(self):
        text = replace_section("tree", "[tree]\nlevels = [[[0, 1]], [[0]]]")
        with pytest.raises(ScenarioError, match=r"<scenario>:\d+: \[tree\]"):
            parse_scenario_text(text)

    def test_unknown_section_rejected(self):
        with pytest.raises(ScenarioError, match=r"unknown section \[extra\]"):
            parse_scenario_text(BASE + "\n[extra]\nx = 1\n")

    def test_unknown_key_rejected(self):
        text = replace_section(
            "claim", "[claim]\npayoff = [0.0, 0.0]\nstrike = 1.0"
        )
        with pytest.raises(ScenarioError, match="unknown key 'strike'"):
            parse_scenario_text(text)

    def test_missing_section_rejected(self):
        lines = [l for l in BASE.splitlines() if l]
        cut = "\n".join(lines[: lines.index("[utility]")])
        with pytest.raises(ScenarioError, match=r"missing required section \[utility\]"):
            parse_scenario_text(cut)

    def test_claim_length_mismatch(self):
        text = replace_section("claim", "[claim]\npayoff = [0.0, 0.0, 0.0]")
        with pytest.raises(ScenarioError, match="3 entries for 2 scenarios"):
            parse_scenario_text(text)

    def test_weight_renormalization_tolerance(self):
        # total is 1 + 4e-10, inside the renormalization window
        text = (
            "[space]\nweights = [0.2, 0.3000000004, 0.5]\n"
            "[tree]\nlevels = [[[0, 1, 2]], [[0], [1], [2]]]\n"
            "[market]\nprices = [[[1.0]], [[2.0], [1.0], [0.5]]]\n"
            "[claim]\npayoff = [0.0, 0.0, 0.0]\n"
            "[priors]\nvertices = [[0.4, 0.3, 0.3]]\n"
            '[utility]\nname = "EXP"\n'
        )
        bundle = parse_scenario_text(text)
        assert math.fsum(bundle.model.space.weights) == pytest.approx(1.0, abs=1e-15)

    def test_weight_sum_violation_rejected(self):
        text = replace_section("space", "[space]\nweights = [0.6, 0.6]")
        with pytest.raises(ScenarioError, match="must total 1"):
            parse_scenario_text(text)

    def test_zero_weight_rejected(self):
        text = replace_section("space", "[space]\nweights = [1.0, 0.0]")
        with pytest.raises(ScenarioError, match="strictly positive"):
            parse_scenario_text(text)

    def test_market_d_mismatch(self):
        text = replace_section(
            "market", "[market]\nd = 2\nprices = [[[1.0]], [[2.0], [0.5]]]"
        )
        with pytest.raises(ScenarioError, match="declares d = 2"):
            parse_scenario_text(text)

    def test_unknown_utility(self):
        text = replace_section("utility", '[utility]\nname = "LOG"')
        with pytest.raises(ScenarioError, match="unknown name 'LOG'"):
            parse_scenario_text(text)

    def test_exp_rejects_table_params(self):
        text = replace_section(
            "utility", '[utility]\nname = "EXP"\nu_at_zero = 0.0'
        )
        with pytest.raises(ScenarioError, match="takes no table parameters"):
            parse_scenario_text(text)

    def test_solver_bounds(self):
        text = BASE + "\n[solver]\ntol = 2.0\n"
        with pytest.raises(ScenarioError, match="tol must lie"):
            parse_scenario_text(text)


class TestDefaults:
    def test_solver_defaults_when_absent(self):
        bundle = parse_scenario_text(BASE)
        assert bundle.options.tol == 1e-6
        assert bundle.options.max_iter_dual == 2000
        assert bundle.options.seed == 0

    def test_document_gains_canonical_sections(self):
        bundle = parse_scenario_text(BASE)
        assert bundle.document["solver"] == {
            "tol": 1e-6, "max_iter": 2000, "seed": 0
        }
        assert bundle.document["market"]["d"] == 1


@st.composite
def one_period_scenarios(draw):
    n = draw(st.integers(min_value=2, max_value=5))
    raw_w = draw(
        st.lists(
            st.floats(min_value=0.05, max_value=1.0), min_size=n, max_size=n
        )
    )
    total = math.fsum(raw_w)
    weights = [w / total for w in raw_w]
    # prices straddling the start value keep a martingale measure around
    lo = draw(st.floats(min_value=0.1, max_value=0.9))
    hi = draw(st.floats(min_value=1.1, max_value=3.0))
    mids = draw(
        st.lists(
            st.floats(min_value=0.2, max_value=2.5), min_size=n - 2, max_size=n - 2
        )
    )
    prices = [hi] + mids + [lo]
    payoff = draw(
        st.lists(
            st.floats(min_value=-3.0, max_value=3.0), min_size=n, max_size=n
        )
    )
    k = draw(st.integers(min_value=1, max_value=3))
    verts = []
    for _ in range(k):
        raw = draw(
            st.lists(
                st.floats(min_value=0.05, max_value=1.0), min_size=n, max_size=n
            )
        )
        s = math.fsum(raw)
        verts.append([v / s for v in raw])
    name = draw(st.sampled_from(["EXP", "GLUED"]))
    levels = "[[[" + ", ".join(str(i) for i in range(n)) + "]], [" + ", ".join(
        f"[{i}]" for i in range(n)
    ) + "]]"
    text = (
        f"[space]\nweights = {weights!r}\n\n"
        f"[tree]\nlevels = {levels}\n\n"
        f"[market]\nprices = [[[1.0]], [{', '.join(f'[{p!r}]' for p in prices)}]]\n\n"
        f"[claim]\npayoff = {payoff!r}\n\n"
        f"[priors]\nvertices = {verts!r}\n\n"
        f'[utility]\nname = "{name}"\n'
    )
    return text


class TestRoundTripProperty:
    @settings(max_examples=40, deadline=None)
    @given(one_period_scenarios())
    def test_emit_parse_identity(self, text):
        first = parse_scenario_text(text, "generated")
        again = parse_scenario_text(emit_scenario(first), "emitted")
        assert again.document == first.document
        assert again.options == first.options
