import math

import numpy as np
import pytest

from barrierfw import (
    BarrierDomainError,
    BoxLinearTerm,
    CompositeProblem,
    IdentityMap,
    KnapsackBoxIndicator,
    RankOneSumMap,
    SimplexIndicator,
    LogDetBarrier,
    WeightedLogBarrier,
    variation_bound,
)
from barrierfw.oracles import brute_lmo


class TestObjective:
    def test_one_bin_toy(self):
        p = CompositeProblem(
            WeightedLogBarrier([1.0]), IdentityMap(1), SimplexIndicator(1)
        )
        assert p.objective(np.array([1.0])) == 0.0

    def test_outside_simplex_is_inf(self, two_bin_problem):
        assert two_bin_problem.objective(np.array([0.7, 0.7])) == math.inf
        assert two_bin_problem.objective(np.array([1.2, -0.2])) == math.inf

    def test_two_bin_value(self, two_bin_problem):
        got = two_bin_problem.objective(np.array([0.5, 0.5]))
        assert got == pytest.approx(2.0 * math.log(2.0), rel=1e-15)


class TestLmo:
    def test_simplex(self):
        term = SimplexIndicator(3)
        res = term.lmo(np.array([3.0, 1.0, 2.0]))
        assert np.allclose(res.point, [0.0, 1.0, 0.0])
        assert res.h_value == 0.0
        assert res.lin_value == 1.0

    def test_simplex_tie_breaks_to_smallest_index(self):
        res = SimplexIndicator(3).lmo(np.array([1.0, 1.0, 2.0]))
        assert np.allclose(res.point, [1.0, 0.0, 0.0])

    def test_box_sign_rule(self):
        term = BoxLinearTerm(1.0, np.zeros(2))
        res = term.lmo(np.array([-1.0, 2.0]))
        assert np.allclose(res.point, [1.0, 0.0])

    def test_box_exact_tie_stays_at_zero(self):
        res = BoxLinearTerm(1.0, np.zeros(2)).lmo(np.array([0.0, -1.0]))
        assert np.allclose(res.point, [0.0, 1.0])

    def test_knapsack_greedy_fill(self):
        term = KnapsackBoxIndicator(np.ones(3), 1.5)
        res = term.lmo(np.array([-3.0, -2.0, -1.0]))
        assert np.allclose(res.point, [1.0, 0.5, 0.0])

    def test_knapsack_budget_validation(self):
        with pytest.raises(ValueError):
            KnapsackBoxIndicator(np.ones(3), 0.0)

    def test_lmo_matches_enumeration(self):
        rng = np.random.default_rng(0)
        simplex = SimplexIndicator(9)
        box = BoxLinearTerm(rng.uniform(0.5, 2.0, 7), rng.standard_normal(7))
        knap = KnapsackBoxIndicator(rng.uniform(0.2, 1.5, 7), 2.0)
        for _ in range(1000):
            for term, dim in ((simplex, 9), (box, 7), (knap, 7)):
                c = rng.standard_normal(dim) * rng.choice([0.1, 1.0, 10.0])
                mine = term.lmo(c)
                ref = brute_lmo(term, c)
                ref_val = float(np.dot(c, ref)) + term.value(ref)
                # identical objective value; the points may differ on ties
                assert mine.lin_value + mine.h_value <= ref_val + 1e-12


class TestGapAndDistance:
    def test_gap_zero_at_argmin(self, two_bin_problem):
        x = np.array([0.5, 0.5])
        v = two_bin_problem.lmo_at(x).point
        assert two_bin_problem.fw_gap(x, x) == pytest.approx(0.0, abs=1e-12)
        assert two_bin_problem.fw_gap(x, v) == pytest.approx(0.0, abs=1e-12)

    def test_hand_evaluated_gap(self, two_bin_problem):
        # gradient (-1/0.9, -10); the vertex oracle picks the second coordinate
        x = np.array([0.9, 0.1])
        res = two_bin_problem.lmo_at(x)
        assert np.allclose(res.point, [0.0, 1.0])
        assert two_bin_problem.fw_gap(x, res.point) == pytest.approx(8.0, rel=1e-12)

    def test_symmetric_design_gap_zero(self):
        pts = np.eye(3)
        prob = CompositeProblem(LogDetBarrier(3), RankOneSumMap(pts), SimplexIndicator(3))
        x = np.full(3, 1.0 / 3.0)
        v = prob.lmo_at(x).point
        assert prob.fw_gap(x, v) == pytest.approx(0.0, abs=1e-10)

    def test_local_distance(self, two_bin_problem):
        x = np.array([1.0, 1.0]) / 2.0
        assert two_bin_problem.local_distance(x, x) == 0.0
        p = CompositeProblem(
            WeightedLogBarrier([1.0, 1.0]), IdentityMap(2), BoxLinearTerm(2.0, np.zeros(2))
        )
        got = p.local_distance(np.array([1.0, 1.0]), np.array([2.0, 0.0]))
        assert got == pytest.approx(math.sqrt(2.0), rel=1e-14)

    def test_boundary_raises(self, two_bin_problem):
        with pytest.raises(BarrierDomainError):
            two_bin_problem.fw_gap(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def test_distance_bound_on_random_points(self, small_pet):
        from barrierfw.instances import pet_problem

        prob = pet_problem(small_pet)
        rng = np.random.default_rng(5)
        theta = prob.barrier.theta
        for _ in range(50):
            x = rng.uniform(0.05, 1.0, small_pet.n)
            x /= x.sum()
            res = prob.lmo_at(x)
            g = prob.fw_gap(x, res.point)
            d = prob.local_distance(x, res.point)
            assert g >= 0.0
            assert d <= g + theta + 1e-9 * (1.0 + g)


class TestVariation:
    def test_indicators_are_flat(self):
        assert variation_bound(SimplexIndicator(4)) == 0.0
        assert variation_bound(KnapsackBoxIndicator(np.ones(4), 2.0)) == 0.0

    def test_box_linear(self):
        term = BoxLinearTerm(2.0, np.array([1.0, -3.0]))
        assert variation_bound(term) == pytest.approx(8.0)
