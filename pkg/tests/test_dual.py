import math

import numpy as np
import pytest

from barrierfw import (
    BarrierDomainError,
    CompositeProblem,
    IdentityMap,
    SimplexIndicator,
    SolverConfig,
    WeightedLogBarrier,
    dual_iterate_from_primal,
    dual_objective,
    solve_fw,
    solve_md_standalone,
    step_size_adaptive,
)
from barrierfw.instances import pet_problem, pet_start_center
from barrierfw.verify import _fw_iterate_path


class TestDualPoint:
    def test_identity_map_examples(self, two_bin_problem):
        y = dual_iterate_from_primal(two_bin_problem, np.array([1.0, 1.0]) / 2)
        assert np.allclose(y, [-2.0, -2.0])
        p = CompositeProblem(WeightedLogBarrier([1.0, 3.0]), IdentityMap(2),
                             SimplexIndicator(2))
        y = dual_iterate_from_primal(p, np.array([0.5, 2.0]) / 2.5)
        assert np.allclose(y * (1 / 2.5), [-2.0, -1.5])

    def test_round_trip(self, two_bin_problem):
        x = np.array([0.3, 0.7])
        y = dual_iterate_from_primal(two_bin_problem, x)
        u = two_bin_problem.barrier.conjugate_grad(y)
        assert np.allclose(u, two_bin_problem.linmap.apply(x), rtol=1e-14)

    def test_boundary_raises(self, two_bin_problem):
        with pytest.raises(BarrierDomainError):
            dual_iterate_from_primal(two_bin_problem, np.array([1.0, 0.0]))


class TestDualObjective:
    def test_closed_form_example(self, two_bin_problem):
        got = dual_objective(two_bin_problem, np.array([-1.0, -1.0]))
        assert got == pytest.approx(-1.0, abs=1e-14)

    def test_gap_identity_along_run(self, small_pet):
        prob = pet_problem(small_pet)
        x = pet_start_center(small_pet)
        for xk in _fw_iterate_path(prob, x, 60):
            res = prob.lmo_at(xk)
            g = prob.fw_gap(xk, res.point)
            y = dual_iterate_from_primal(prob, xk)
            ident = dual_objective(prob, y) + prob.objective(xk)
            assert abs(g - ident) <= 1e-8 * (1.0 + abs(g))

    def test_strong_duality_at_near_optimum(self, two_bin_problem):
        res = solve_fw(two_bin_problem, np.array([0.9, 0.1]),
                       SolverConfig(eps=1e-9, max_iters=10_000))
        y = dual_iterate_from_primal(two_bin_problem, res.x)
        total = dual_objective(two_bin_problem, y) + two_bin_problem.objective(res.x)
        assert abs(total) <= 2e-9

    def test_nonnegative_component_raises(self, two_bin_problem):
        with pytest.raises(BarrierDomainError):
            dual_objective(two_bin_problem, np.array([-1.0, 0.5]))


class TestStandaloneMirrorDescent:
    def test_matches_primal_iterates(self, small_pet):
        prob = pet_problem(small_pet)
        x0 = pet_start_center(small_pet)
        y0 = dual_iterate_from_primal(prob, x0)
        md = solve_md_standalone(prob, y0, x0, SolverConfig(eps=None, max_iters=200))
        xs = _fw_iterate_path(prob, x0, 200)
        assert len(md.y_history) == len(xs)
        for yk, zk, xk in zip(md.y_history, md.z_history, xs):
            yref = dual_iterate_from_primal(prob, xk)
            tol = 1e-9 * (1.0 + float(np.max(np.abs(yk))))
            assert float(np.max(np.abs(yk - yref))) <= tol
            assert float(np.max(np.abs(zk - xk))) <= 1e-9

    def test_gbar_equals_primal_gap(self, small_pet):
        prob = pet_problem(small_pet)
        x0 = pet_start_center(small_pet)
        y0 = dual_iterate_from_primal(prob, x0)
        md = solve_md_standalone(prob, y0, x0, SolverConfig(eps=None, max_iters=100))
        res = solve_fw(prob, x0, SolverConfig(eps=None, max_iters=100))
        for dr, pr in zip(md.trace, res.trace):
            assert abs(dr.Gbar - pr.G) <= 1e-9 * (1.0 + abs(pr.G))
            # the dual objective and the primal objective tie through the gap
            assert abs(dr.Gbar - (dr.d + pr.F)) <= 1e-8 * (1.0 + abs(dr.Gbar))

    def test_one_step_identity(self, two_bin_problem):
        x0 = np.array([0.9, 0.1])
        y0 = dual_iterate_from_primal(two_bin_problem, x0)
        md = solve_md_standalone(two_bin_problem, y0, x0,
                                 SolverConfig(eps=None, max_iters=1))
        res0 = two_bin_problem.lmo_at(x0)
        g0 = two_bin_problem.fw_gap(x0, res0.point)
        d0 = two_bin_problem.local_distance(x0, res0.point)
        gamma0 = step_size_adaptive(g0, d0)
        assert md.trace[0].gamma == pytest.approx(gamma0, rel=1e-12)
        u1 = two_bin_problem.barrier.conjugate_grad(md.y_history[1] if len(md.y_history) > 1
                                                    else md.y)
        expected = (1.0 - gamma0) * two_bin_problem.linmap.apply(x0) \
            + gamma0 * two_bin_problem.linmap.apply(res0.point)
        assert np.allclose(u1, expected, rtol=1e-12)

    def test_inconsistent_start_raises(self, two_bin_problem):
        with pytest.raises(ValueError):
            solve_md_standalone(two_bin_problem, np.array([-1.0, -2.0]),
                                np.array([0.5, 0.5]))

    def test_positive_dual_start_raises(self, two_bin_problem):
        with pytest.raises(BarrierDomainError):
            solve_md_standalone(two_bin_problem, np.array([1.0, -2.0]),
                                np.array([0.5, 0.5]))

    def test_gap_rule_certifies(self, two_bin_problem):
        x0 = np.array([0.8, 0.2])
        y0 = dual_iterate_from_primal(two_bin_problem, x0)
        md = solve_md_standalone(two_bin_problem, y0, x0,
                                 SolverConfig(eps=1e-6, max_iters=100_000))
        assert md.status == "gap"
        assert md.trace[-1].Gbar <= 1e-6
        # the certified dual gap bounds d(y) - d(y*) = d(y) + F*
        fstar = 2.0 * math.log(2.0)
        assert md.trace[-1].d + fstar <= md.trace[-1].Gbar + 1e-12
