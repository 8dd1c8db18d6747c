import hashlib
import math

import numpy as np
import pytest

from barrierfw.instances import (
    DoptFastState,
    dopt_fast_iterate,
    dopt_problem,
    gen_dopt,
    gen_log_invest,
    gen_pet,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    loginvest_problem,
    pet_problem,
    pet_start_boundary,
    pet_start_center,
    save_instance,
    start_point,
    LogInvestInstance,
)
from barrierfw.oracles import golden_line_search


class TestPetGenerator:
    def test_shapes_and_row_sums(self):
        inst = gen_pet(60, 60, 5)
        per_voxel = 60 // 20
        counts = np.diff(inst.P.indptr)
        assert np.all(counts <= per_voxel)
        # before pruning every voxel row summed to one; after pruning sums stay <= 1
        full = gen_pet(60, 60, 5)
        assert np.all(full.counts >= 1)
        assert inst.m <= 60

    def test_row_normalization_before_pruning(self):
        # with every bin kept the row sums are exactly the normalized draws
        inst = gen_pet(200, 200, 9)
        if inst.m == 200:
            sums = np.asarray(inst.P.sum(axis=1)).ravel()
            assert np.max(np.abs(sums - 1.0)) <= 1e-12

    def test_sparsity_5_percent(self):
        inst = gen_pet(100, 100, 2)
        assert 100 // 20 == 5
        # pruning can only remove entries; the pre-pruning count is n * floor(m/20)
        assert inst.P.nnz <= 100 * 5

    def test_intensity_distribution(self):
        inst = gen_pet(1000, 1000, 8)
        assert abs(float(inst.x_true.mean()) - 100.0) <= 1.0
        assert np.all(inst.x_true >= 0.0)
        per_voxel = 1000 // 20
        assert per_voxel == 50

    def test_reproducible(self):
        a = gen_pet(30, 30, 77)
        b = gen_pet(30, 30, 77)
        assert np.array_equal(a.counts, b.counts)
        assert np.array_equal(a.P.data, b.P.data)
        assert np.array_equal(a.P.indices, b.P.indices)
        assert np.array_equal(a.x_true, b.x_true)

    def test_pinned_stream_digest(self):
        # guards the pinned generator: any change to the draw pipeline shows up here
        inst = gen_pet(20, 20, 0)
        h = hashlib.sha256()
        h.update(inst.P.indptr.astype(np.int64).tobytes())
        h.update(inst.P.indices.astype(np.int64).tobytes())
        h.update(inst.P.data.tobytes())
        h.update(inst.counts.astype(np.int64).tobytes())
        h.update(inst.x_true.tobytes())
        assert h.hexdigest() == (
            "e65c7b0c8cf66b9bcc872d1eb80aa9e951363b2408c4bc23bc6150b904ec114e"
        )

    def test_size_guard(self):
        with pytest.raises(ValueError):
            gen_pet(10, 10, 0)


class TestStarts:
    def test_center(self):
        inst = gen_pet(40, 40, 3)
        z = pet_start_center(inst)
        assert np.allclose(z, 0.25 / 10.0)
        assert z.sum() == pytest.approx(1.0)

    def test_boundary_cover(self, small_pet):
        z = pet_start_boundary(small_pet)
        n = small_pet.n
        assert z.sum() == pytest.approx(1.0, abs=1e-12)
        assert float(z.min()) == pytest.approx(1e-6 / n, rel=1e-12)
        # every bin sees positive mass through the cover
        assert np.all(small_pet.P.T @ z > 0.0)

    def test_start_point_dispatch(self, small_pet, small_dopt):
        assert start_point(small_pet, "ct").sum() == pytest.approx(1.0)
        assert start_point(small_dopt, "ct").sum() == pytest.approx(1.0)
        with pytest.raises(ValueError):
            start_point(small_dopt, "bd")


class TestDoptGenerator:
    def test_rank_and_shapes(self, small_dopt):
        assert small_dopt.points.shape == (15, 4)
        assert np.linalg.matrix_rank(small_dopt.points) == 4

    def test_knapsack_defaults(self):
        inst = gen_dopt(3, 12, 1, knapsack=True)
        assert inst.tau == 3.0
        assert np.all(inst.tbar >= 0.5) and np.all(inst.tbar <= 1.5)

    def test_m_guard(self):
        with pytest.raises(ValueError):
            gen_dopt(5, 5, 0)

    def test_orthonormal_barycenter_is_optimal(self):
        inst_points = np.eye(3)
        from barrierfw import CompositeProblem, LogDetBarrier, RankOneSumMap, SimplexIndicator

        prob = CompositeProblem(LogDetBarrier(3), RankOneSumMap(inst_points),
                                SimplexIndicator(3))
        x0 = np.full(3, 1.0 / 3.0)
        res = prob.lmo_at(x0)
        assert prob.fw_gap(x0, res.point) == pytest.approx(0.0, abs=1e-10)


class TestLogInvest:
    def test_uniform_probs_theta_is_m(self):
        inst = LogInvestInstance(
            returns=np.full((4, 3), 1.2), probs=np.full(4, 0.25), rescale=4.0, seed=0
        )
        prob = loginvest_problem(inst)
        assert prob.barrier.theta == pytest.approx(4.0)

    def test_identical_unit_returns_flat_objective(self):
        inst = LogInvestInstance(
            returns=np.ones((5, 3)), probs=np.full(5, 0.2), rescale=5.0, seed=0
        )
        prob = loginvest_problem(inst)
        w = np.array([0.2, 0.3, 0.5])
        res = prob.lmo_at(w)
        assert prob.fw_gap(w, res.point) == pytest.approx(0.0, abs=1e-12)

    def test_generated_weights_at_least_one(self):
        inst = gen_log_invest(5, 9, 4)
        prob = loginvest_problem(inst)
        assert np.all(prob.barrier.weights >= 1.0)
        assert inst.rescale == pytest.approx(1.0 / inst.probs.min())


class TestSerialization:
    @pytest.mark.parametrize("maker", [
        lambda: gen_pet(25, 25, 11),
        lambda: gen_dopt(3, 9, 12),
        lambda: gen_dopt(3, 9, 13, knapsack=True),
        lambda: gen_log_invest(4, 6, 14),
    ], ids=["pet", "dopt", "dopt-knapsack", "loginvest"])
    def test_round_trip_lossless(self, maker, tmp_path):
        inst = maker()
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        back = load_instance(path)
        doc_a = instance_to_dict(inst)
        doc_b = instance_to_dict(back)
        assert doc_a == doc_b  # bitwise float equality through shortest decimals


class TestDoptFastState:
    def test_orthonormal_worked_example(self):
        state = DoptFastState(np.eye(3), np.full(3, 1.0 / 3.0))
        assert np.allclose(state.qdiag, 3.0)
        assert state.local_distance(0) == pytest.approx(math.sqrt(6.0))
        assert state.fw_gap(0) == pytest.approx(0.0, abs=1e-12)

    def test_matches_dense_recomputation(self, small_dopt):
        state = DoptFastState(small_dopt.points, np.full(small_dopt.m, 1.0 / small_dopt.m),
                              refactor_every=50)
        pts = small_dopt.points
        for k in range(200):
            dense_m = (pts * state.x[:, None]).T @ pts
            qd = np.einsum("ij,jk,ik->i", pts, np.linalg.inv(dense_m), pts)
            rel = np.max(np.abs(qd - state.qdiag) / np.abs(qd))
            assert rel <= 1e-8, f"iteration {k}: relative error {rel}"
            dopt_fast_iterate(state, rule="adaptive")

    def test_gradient_pairing_identity(self, small_dopt):
        state = DoptFastState(small_dopt.points, np.full(small_dopt.m, 1.0 / small_dopt.m))
        for _ in range(50):
            pairing = float(np.dot(state.gradient(), state.x))
            assert pairing == pytest.approx(-state.n, rel=1e-10)
            dopt_fast_iterate(state, rule="adaptive")

    def test_exact_rule_matches_golden_oracle(self, small_dopt):
        prob = dopt_problem(small_dopt)
        state = DoptFastState(small_dopt.points, np.full(small_dopt.m, 1.0 / small_dopt.m))
        for _ in range(10):
            x_before = state.x.copy()
            i = state.best_index()
            v = np.zeros(small_dopt.m)
            v[i] = 1.0

            def phi(a):
                return prob.objective((1.0 - a) * x_before + a * v)

            ref = golden_line_search(phi, 0.0, 1.0 - 1e-9, tol=1e-12)
            _, _, _, alpha = dopt_fast_iterate(state, rule="exact")
            assert abs(alpha - ref) <= 1e-7 or abs(phi(alpha) - phi(ref)) <= 1e-10

    def test_step_alpha_validation(self, small_dopt):
        state = DoptFastState(small_dopt.points, np.full(small_dopt.m, 1.0 / small_dopt.m))
        with pytest.raises(ValueError):
            state.step(0, 1.0)


def test_problem_builders_feasible(small_pet, small_dopt):
    for prob, x0 in (
        (pet_problem(small_pet), pet_start_center(small_pet)),
        (dopt_problem(small_dopt), np.full(small_dopt.m, 1.0 / small_dopt.m)),
        (loginvest_problem(gen_log_invest(4, 6, 2)), np.full(4, 0.25)),
    ):
        assert math.isfinite(prob.objective(x0))
