"""Robust utility maximization on finite market trees.

Maximin expected utility over a polytope of priors, its divergence
dual over martingale measures, and the indifference prices the duality
induces.  See the README for the scenario file format and CLI.
"""

from .market import (
    Claim,
    FiltrationTree,
    Market,
    PriorSet,
    ScenarioModel,
    ScenarioSpace,
    Strategy,
    expectation,
    terminal_gain,
    worst_case_expected_utility,
)
from .utility import (
    UtilitySpec,
    conjugate,
    conjugate_derivative,
    exponential_utility,
    glued_utility,
    perspective,
    table_utility,
    young_gap,
)
from .divergence import (
    ConjugateIdentityReport,
    claim_integrand,
    conjugate_identity_check,
    divergence,
    dual_objective,
    robust_divergence,
    robust_integral,
    ui_modulus,
)
from .martingale import (
    build_constraints,
    find_equivalent_measure,
    in_dual_domain,
    is_member,
    linear_minimize,
)
from .simplex import LPProblem, LPSolution, lp_solve
from .errors import AssumptionError, SolverError
from .pricing import (
    PriceReport,
    claimless_value,
    indifference_price,
    penalty_gamma,
    price_by_bisection,
)
from .solve import (
    DualResult,
    EpsilonMixingRecord,
    GapReport,
    PrimalResult,
    SolverOptions,
    check_variational_bound,
    dual_value_at_lambda,
    duality_gap,
    epsilon_mixing_diagnostic,
    solve_dual,
    solve_primal,
)
from .report import RunReport, round12
from .scenario_io import (
    ScenarioBundle,
    ScenarioError,
    emit_scenario,
    parse_scenario,
    parse_scenario_text,
)
from .tail_family import (
    PowerContrastReport,
    TruncatedGeometricFamily,
    build_truncated_family,
    density_tail_modulus,
    power_integrand_contrast,
    power_tail_moduli,
    prior_mean,
    reference_densities,
    supremum_mean,
    tail_expectation_modulus,
)

__version__ = "0.1.0"
