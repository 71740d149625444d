import json

import numpy as np
import pytest

from spartra.oracles import ridge_exact, rip_exact, spca_exact
from spartra.relaxations import (
    DegenerateSolutionError,
    SparseQcqp,
    build_Q,
    build_QK,
    build_Qplus,
    build_dual_D,
    rank_one_exactness,
    rip_bounds,
    round_truncate,
    solve_dual_D,
    solve_qcqp,
    solve_scca,
    solve_slr,
    solve_slr_dual,
    solve_spca,
    solve_spca_dual,
    solve_sridge,
    spca_problem,
)
from spartra.solver import SolveOptions, SolveStatus
from spartra.symmat import SymMatrix, dop, eig_sym

from conftest import rand_psd, rng

OPTS = SolveOptions(eps=1e-7)


class TestProblemType:
    def test_validation(self):
        C = SymMatrix.identity(3)
        with pytest.raises(ValueError):
            SparseQcqp(C, (), 0)
        with pytest.raises(ValueError):
            SparseQcqp(C, (), 4)
        with pytest.raises(ValueError):
            SparseQcqp(C, (), 2, "argmax")
        with pytest.raises(ValueError):
            SparseQcqp(C, ((SymMatrix.identity(2), 1.0),), 2)

    def test_json_round_trip(self, tmp_path):
        p = spca_problem(rand_psd(4, 0), 2)
        path = tmp_path / "p.json"
        p.save_json(path)
        q = SparseQcqp.load_json(path)
        assert q.C == p.C and q.k == p.k and q.sense == p.sense
        assert q.constraints[0][0] == p.constraints[0][0]


class TestBuilders:
    def test_builders_deterministic(self):
        p = spca_problem(rand_psd(4, 1), 2)
        for build in (build_Q, build_Qplus, build_dual_D):
            d1 = json.dumps(build(p).to_dict(), sort_keys=True)
            d2 = json.dumps(build(p).to_dict(), sort_keys=True)
            assert d1 == d2

    def test_QK_cones(self):
        p = spca_problem(rand_psd(4, 2), 2)
        for cone in ("S1", "Sbs"):
            prog = build_QK(p, cone)
            assert prog.num_rows > 0
        with pytest.raises(ValueError):
            build_QK(p, "S9")


class TestQcqpSolves:
    def test_m0_psd_min_is_zero(self):
        C = SymMatrix([[2.0, 0.5], [0.5, 1.0]])
        sol = solve_qcqp(SparseQcqp(C, (), 1, "min"), "Q", OPTS)
        assert abs(sol.value) < 1e-6

    def test_max_sense_sign_handling(self):
        Sg = SymMatrix.from_diag([3.0, 1.0, 2.0])
        p = spca_problem(Sg, 1)
        sol = solve_qcqp(p, "Q", OPTS)
        assert sol.value == pytest.approx(3.0, abs=1e-5)

    def test_dual_bound_max_sense(self):
        Sg = rand_psd(5, 3)
        p = spca_problem(Sg, 2)
        ds = solve_dual_D(p, OPTS)
        qs = solve_qcqp(p, "Q", OPTS)
        assert ds.value >= qs.value - 1e-4

    def test_unknown_method(self):
        p = spca_problem(rand_psd(3, 4), 2)
        with pytest.raises(ValueError):
            solve_qcqp(p, "QQ", OPTS)


class TestSpca:
    def test_diagonal_k1(self):
        sol = solve_spca(SymMatrix.from_diag([3.0, 1.0, 2.0]), 1, "Q", OPTS)
        assert sol.value == pytest.approx(3.0, abs=1e-5)
        assert sol.extras["rho"] == pytest.approx(3.0, abs=1e-4)

    def test_rank_one_sigma_exact(self):
        sigma = np.array([1.0, -2.0, 0.5, 3.0])
        Sg = SymMatrix.outer(sigma)
        sol = solve_spca(Sg, 2, "Q", OPTS)
        assert sol.value == pytest.approx(13.0, abs=1e-4)
        rep = rank_one_exactness(sol.X, 1e-5, k=2)
        assert rep.exact

    def test_k_equals_n_is_shor(self):
        Sg = rand_psd(5, 5)
        sol = solve_spca(Sg, 5, "Q", OPTS)
        assert sol.value == pytest.approx(eig_sym(Sg).lambda_max, abs=1e-5)

    def test_method_ordering(self):
        # Qplus refines Q; S1 and Sbs are the looser l1 family, with the
        # big-M variant inside the plain l1 cone
        Sg = rand_psd(6, 6)
        vals = {
            m: solve_spca(Sg, 2, m, OPTS).value for m in ("Q", "Qplus", "S1", "Sbs")
        }
        assert vals["Qplus"] <= vals["Q"] + 1e-5
        assert vals["Sbs"] <= vals["S1"] + 1e-5
        assert vals["Q"] <= vals["S1"] + 1e-5

    def test_primal_dual_match(self):
        Sg = rand_psd(5, 7)
        sol = solve_spca(Sg, 2, "Q", OPTS)
        dl = solve_spca_dual(Sg, 2, OPTS)
        assert sol.value == pytest.approx(dl.value, abs=1e-4)
        slack = dl.rho * np.eye(5) - Sg.full() - dop(dl.Z, 2).full()
        assert eig_sym(SymMatrix(slack)).lambda_min > -1e-5

    def test_relaxation_upper_bounds_oracle(self):
        for seed in range(5):
            Sg = rand_psd(7, 40 + seed)
            sol = solve_spca(Sg, 3, "Q", OPTS)
            orc = spca_exact(Sg, 3)
            assert sol.value >= orc.value - 1e-5


class TestSridgeSlr:
    def test_zero_target(self):
        A = rng(8).normal(size=(8, 5))
        sol = solve_sridge(A, np.zeros(8), 0.1, 2, OPTS)
        assert abs(sol.value) < 1e-6

    def test_huge_alpha_forces_zero(self):
        g = rng(9)
        A = g.normal(size=(8, 5))
        y = g.normal(size=8)
        sol = solve_sridge(A, y, 1e6, 2, OPTS)
        assert sol.value == pytest.approx(float(y @ y) / 8, rel=1e-3)

    def test_lower_bounds_oracle(self):
        g = rng(10)
        A = g.normal(size=(10, 6))
        y = g.normal(size=10)
        sol = solve_sridge(A, y, 0.3, 2, OPTS)
        orc = ridge_exact(A, y, 0.3, 2)
        assert sol.value <= orc.value + 1e-5

    def test_slr_noiseless_recovery(self):
        g = rng(11)
        A = g.normal(size=(10, 6))
        xbar = np.zeros(6)
        xbar[[0, 2, 5]] = [1.5, -2.0, 0.7]
        sol = solve_slr(A, A @ xbar, 3, OPTS)
        assert abs(sol.value) < 1e-4
        assert np.abs(sol.border - xbar).max() < 1e-3
        rep = rank_one_exactness(sol.X, 1e-4, k=4)
        assert rep.exact

    def test_slr_dual_feasible(self):
        g = rng(12)
        A = g.normal(size=(10, 6))
        xbar = np.zeros(6)
        xbar[[1, 3]] = [2.0, -1.0]
        dl = solve_slr_dual(A, A @ xbar, 2, OPTS)
        assert dl.value <= 1e-4  # weak duality against the 0 optimum
        assert eig_sym(dl.slack).lambda_min > -1e-5


class TestScca:
    def test_zero_cross_block(self):
        sol = solve_scca(
            SymMatrix.identity(3), SymMatrix.identity(4), np.zeros((3, 4)), 2, 2, OPTS
        )
        assert abs(sol.value) < 1e-6

    def test_full_sparsity_is_svd(self):
        B = rng(13).normal(size=(3, 4))
        sol = solve_scca(SymMatrix.identity(3), SymMatrix.identity(4), B, 3, 4, OPTS)
        smax = float(np.linalg.svd(B, compute_uv=False)[0])
        assert sol.value == pytest.approx(smax, abs=1e-4)

    def test_extras_blocks(self):
        B = rng(14).normal(size=(3, 3))
        sol = solve_scca(SymMatrix.identity(3), SymMatrix.identity(3), B, 2, 2, OPTS)
        assert sol.extras["Z1"].n == 3 and sol.extras["Z2"].n == 3


class TestRip:
    def test_orthonormal_columns_zero_deltas(self):
        Q, _ = np.linalg.qr(rng(15).normal(size=(10, 6)))
        out = rip_bounds(Q, 3, OPTS)
        assert abs(out["delta_plus_bar"]) < 1e-5
        assert abs(out["delta_minus_bar"]) < 1e-5

    def test_bounds_cover_exact(self):
        A = rng(16).normal(size=(8, 6)) / np.sqrt(8)
        out = rip_bounds(A, 2, OPTS)
        ex = rip_exact(A, 2)
        assert out["delta_plus_bar"] >= ex["delta_plus_star"] - 1e-6
        assert out["delta_minus_bar"] >= ex["delta_minus_star"] - 1e-6

    def test_method_parameter(self):
        A = rng(17).normal(size=(8, 6)) / np.sqrt(8)
        q = rip_bounds(A, 2, OPTS, "Q")
        s1 = rip_bounds(A, 2, OPTS, "S1")
        assert q["delta_plus_bar"] <= s1["delta_plus_bar"] + 1e-5


class TestRounding:
    def test_spca_truncate(self):
        Sg = SymMatrix.from_diag([3.0, 1.0, 2.0])
        sol = solve_spca(Sg, 2, "Q", OPTS)
        rp = round_truncate(sol, "spca", Sigma=Sg)
        assert rp.value >= 3.0 - 1e-8
        assert 0 in rp.support

    def test_rounded_value_feasible_bound(self):
        # rounded objective never exceeds the relaxation (max sense)
        for seed in range(5):
            Sg = rand_psd(6, 60 + seed)
            sol = solve_spca(Sg, 2, "Q", OPTS)
            rp = round_truncate(sol, "spca", Sigma=Sg)
            orc = spca_exact(Sg, 2)
            assert rp.value <= orc.value + 1e-9
            assert rp.value <= sol.value + 1e-5

    def test_ridge_rounding_refits(self):
        g = rng(18)
        A = g.normal(size=(10, 5))
        y = g.normal(size=10)
        sol = solve_sridge(A, y, 0.2, 2, OPTS)
        rp = round_truncate(sol, "ridge", A=A, y=y, alpha=0.2, k=2)
        orc = ridge_exact(A, y, 0.2, 2)
        assert rp.value >= orc.value - 1e-9
        assert len(rp.support) <= 2

    def test_scca_rounding_normalized(self):
        B = rng(19).normal(size=(4, 4))
        Sxx = rand_psd(4, 20)
        Sxx = SymMatrix(Sxx.full() + np.eye(4))
        Syy = rand_psd(4, 21)
        Syy = SymMatrix(Syy.full() + np.eye(4))
        sol = solve_scca(Sxx, Syy, B, 2, 2, OPTS)
        rp = round_truncate(sol, "scca", Sxx=Sxx, Syy=Syy, Sxy=B, k1=2, k2=2)
        u, v = rp.blocks
        assert float(u @ Sxx.full() @ u) == pytest.approx(1.0, abs=1e-6)
        assert float(v @ Syy.full() @ v) == pytest.approx(1.0, abs=1e-6)
        assert np.count_nonzero(u) <= 2 and np.count_nonzero(v) <= 2

    def test_degenerate_rejected(self):
        Sg = SymMatrix.from_diag([1.0, 1.0])
        sol = solve_spca(Sg, 1, "Q", OPTS)
        zero = type(sol)(
            X=SymMatrix.zeros(2),
            value=0.0,
            dual_lambda=sol.dual_lambda,
            dual_Z=sol.dual_Z,
            source=sol.source,
            status=sol.status,
            border=None,
            residuals={},
            extras=dict(sol.extras),
        )
        with pytest.raises(DegenerateSolutionError):
            round_truncate(zero, "spca", Sigma=Sg, k=1)

    def test_unknown_tag(self):
        Sg = SymMatrix.from_diag([1.0, 2.0])
        sol = solve_spca(Sg, 1, "Q", OPTS)
        with pytest.raises(ValueError):
            round_truncate(sol, "sparse_pca", Sigma=Sg)


class TestRankOneReport:
    def test_exact_outer(self):
        x = np.array([0.0, 2.0, -1.0])
        rep = rank_one_exactness(SymMatrix.outer(x), k=2)
        assert rep.exact and bool(rep)
        assert np.allclose(np.abs(rep.x), np.abs(x), atol=1e-9)

    def test_flat_spectrum_not_exact(self):
        rep = rank_one_exactness(SymMatrix.identity(3))
        assert not rep.exact
        assert rep.ratio == pytest.approx(1.0)

    def test_sparsity_gate(self):
        x = np.array([1.0, 1.0, 1.0])
        assert rank_one_exactness(SymMatrix.outer(x)).exact
        assert not rank_one_exactness(SymMatrix.outer(x), k=2).exact

    def test_zero_matrix(self):
        rep = rank_one_exactness(SymMatrix.zeros(3))
        assert not rep.exact


class TestStatusPropagation:
    def test_maxiter_passes_through(self):
        Sg = rand_psd(6, 22)
        sol = solve_spca(Sg, 2, "Q", SolveOptions(eps=1e-14, max_iter=10))
        assert sol.status == SolveStatus.MAX_ITER
