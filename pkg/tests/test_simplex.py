"""Dense simplex checks, including a sweep against scipy's LP solver."""

import numpy as np
import pytest
from scipy.optimize import linprog

from robustdual import LPProblem, lp_solve


class TestSmallProblems:
    def test_pick_cheapest_simplex_vertex(self):
        sol = lp_solve(LPProblem(np.array([-1.0, 0.0]), np.array([[1.0, 1.0]]), np.array([1.0])))
        assert sol.status == "optimal"
        np.testing.assert_allclose(sol.x, [1.0, 0.0], atol=1e-9)
        assert sol.objective == pytest.approx(-1.0)

    def test_binomial_martingale_point(self):
        # A q = 0 with A = (1, -1/2) and sum q = 1 pins q = (1/3, 2/3)
        a_eq = np.array([[1.0, -0.5], [1.0, 1.0]])
        b_eq = np.array([0.0, 1.0])
        sol = lp_solve(LPProblem(np.array([1.0, 0.0]), a_eq, b_eq))
        assert sol.status == "optimal"
        np.testing.assert_allclose(sol.x, [1.0 / 3.0, 2.0 / 3.0], atol=1e-9)

    def test_infeasible(self):
        sol = lp_solve(
            LPProblem(np.zeros(2), np.array([[1.0, 1.0]]), np.array([-1.0]))
        )
        assert sol.status == "infeasible"

    def test_unbounded(self):
        sol = lp_solve(
            LPProblem(np.array([-1.0, 0.0]), a_ub=np.array([[0.0, 1.0]]), b_ub=np.array([1.0]))
        )
        assert sol.status == "unbounded"

    def test_no_constraints(self):
        assert lp_solve(LPProblem(np.array([1.0]))).objective == 0.0
        assert lp_solve(LPProblem(np.array([-1.0]))).status == "unbounded"

    def test_duplicate_rows_are_redundant(self):
        a_eq = np.array([[1.0, 1.0], [1.0, 1.0]])
        b_eq = np.array([1.0, 1.0])
        sol = lp_solve(LPProblem(np.array([0.0, -1.0]), a_eq, b_eq))
        assert sol.status == "optimal"
        np.testing.assert_allclose(sol.x, [0.0, 1.0], atol=1e-9)

    def test_inequalities(self):
        # min -x1 - x2 s.t. x1 + 2 x2 <= 4, 3 x1 + x2 <= 6
        sol = lp_solve(
            LPProblem(
                np.array([-1.0, -1.0]),
                a_ub=np.array([[1.0, 2.0], [3.0, 1.0]]),
                b_ub=np.array([4.0, 6.0]),
            )
        )
        assert sol.status == "optimal"
        np.testing.assert_allclose(sol.x, [1.6, 1.2], atol=1e-9)

    def test_feasibility_of_solution(self):
        a_eq = np.array([[1.0, 2.0, 3.0]])
        b_eq = np.array([2.0])
        a_ub = np.array([[1.0, 0.0, -1.0]])
        b_ub = np.array([0.5])
        sol = lp_solve(LPProblem(np.array([1.0, 1.0, 1.0]), a_eq, b_eq, a_ub, b_ub))
        assert sol.status == "optimal"
        assert np.all(sol.x >= -1e-9)
        assert abs(a_eq @ sol.x - b_eq)[0] < 1e-9
        assert (a_ub @ sol.x - b_ub)[0] < 1e-9


class TestAgainstScipy:
    """Randomized cross-check of status and optimal value."""

    def test_random_instances(self):
        rng = np.random.default_rng(42)
        agree = 0
        for trial in range(60):
            n = rng.integers(2, 6)
            k_eq = rng.integers(0, 3)
            k_ub = rng.integers(1, 4)
            c = rng.normal(size=n)
            a_eq = rng.normal(size=(k_eq, n)) if k_eq else None
            b_eq = rng.normal(size=k_eq) if k_eq else None
            a_ub = np.vstack([rng.normal(size=(k_ub, n)), np.eye(n)])
            b_ub = np.concatenate([rng.normal(size=k_ub) + 1.0, np.full(n, 2.0)])
            ours = lp_solve(LPProblem(c, a_eq, b_eq, a_ub, b_ub))
            ref = linprog(
                c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0, None),
                method="highs",
            )
            if ours.status == "optimal":
                assert ref.status == 0, f"trial {trial}: scipy disagrees"
                assert ours.objective == pytest.approx(ref.fun, abs=1e-7)
                agree += 1
            elif ours.status == "infeasible":
                assert ref.status == 2
            else:
                assert ref.status == 3
        assert agree >= 30  # bounded instances dominate by construction
