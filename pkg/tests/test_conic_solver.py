import numpy as np
import pytest

from spartra.conic import Block, ConicProgram, ProgramBuilder, ProgramError
from spartra.solver import (
    SolveOptions,
    SolveStatus,
    dist_to_cone,
    solve,
    verify_solution,
)
from spartra.symmat import SymMatrix, svec


def lp_program():
    """min x0 + 2 x1 s.t. x0 + x1 = 1, x >= 0; optimum 1 at (1, 0)."""
    pb = ProgramBuilder()
    x = pb.add_block("nonneg", 2)
    pb.add_row([(x, 0, 1.0), (x, 1, 1.0)], 1.0)
    pb.add_objective(x, 0, 1.0)
    pb.add_objective(x, 1, 2.0)
    return pb.build()


def soc_program():
    """min t s.t. t >= ||(3, 4)||; optimum 5."""
    pb = ProgramBuilder()
    c = pb.add_block("soc", 3)
    pb.add_row([(c, 1, 1.0)], 3.0)
    pb.add_row([(c, 2, 1.0)], 4.0)
    pb.add_objective(c, 0, 1.0)
    return pb.build()


def rsoc_program():
    """min a s.t. 2 a b >= z^2, b = 1, z = 4; optimum a = 8."""
    pb = ProgramBuilder()
    c = pb.add_block("rsoc", 3)
    pb.add_row([(c, 1, 1.0)], 1.0)
    pb.add_row([(c, 2, 1.0)], 4.0)
    pb.add_objective(c, 0, 1.0)
    return pb.build()


def psd_program():
    """min tr X s.t. X01 = 1 (PSD order 2); optimum 2 at [[1,1],[1,1]]."""
    pb = ProgramBuilder()
    X = pb.add_block("psd", 2)
    # svec packing: (X00, sqrt2 X10, X11); row selects the off-diagonal
    pb.add_row([(X, 1, np.sqrt(2.0))], 2.0)  # 2 X10 = 2
    pb.add_objective(X, 0, 1.0)
    pb.add_objective(X, 2, 1.0)
    return pb.build()


def infeasible_program():
    """x >= 0 with x = -1: primal infeasible."""
    pb = ProgramBuilder()
    x = pb.add_block("nonneg", 1)
    pb.add_row([(x, 0, 1.0)], -1.0)
    return pb.build()


def unbounded_program():
    """min -x, x free of constraints except a vacuous row: dual infeasible."""
    pb = ProgramBuilder()
    x = pb.add_block("nonneg", 2)
    pb.add_row([(x, 1, 1.0)], 1.0)
    pb.add_objective(x, 0, -1.0)
    return pb.build()


class TestProgramShape:
    def test_block_bookkeeping(self):
        prog = lp_program()
        assert prog.num_vars == 2
        assert prog.num_rows == 1
        assert prog.blocks[0].kind == "nonneg"

    def test_psd_block_svec_dim(self):
        prog = psd_program()
        assert prog.num_vars == 3  # order 2 packs into 3 slots

    def test_bad_coefficient_rejected(self):
        pb = ProgramBuilder()
        x = pb.add_block("nonneg", 2)
        with pytest.raises(ProgramError):
            pb.add_row([(x, 5, 1.0)], 0.0)
            pb.build()

    def test_bad_block_kind(self):
        pb = ProgramBuilder()
        with pytest.raises(ProgramError):
            pb.add_block("weird", 3)

    def test_nonfinite_rhs_rejected(self):
        pb = ProgramBuilder()
        x = pb.add_block("nonneg", 1)
        with pytest.raises(ProgramError):
            pb.add_row([(x, 0, 1.0)], float("inf"))
            pb.build()

    def test_json_round_trip(self, tmp_path):
        prog = psd_program()
        path = tmp_path / "prog.json"
        prog.save_json(path)
        back = ConicProgram.load_json(path)
        assert back.num_vars == prog.num_vars
        assert np.array_equal(back.rhs, prog.rhs)
        assert np.array_equal(back.objective, prog.objective)
        r1 = solve(prog)
        r2 = solve(back)
        assert r1.value == pytest.approx(r2.value, abs=1e-12)


class TestSolves:
    def test_lp(self):
        res = solve(lp_program())
        assert res.status == SolveStatus.OPTIMAL
        assert res.value == pytest.approx(1.0, abs=1e-6)
        assert np.allclose(res.x, [1.0, 0.0], atol=1e-5)

    def test_soc(self):
        res = solve(soc_program())
        assert res.status == SolveStatus.OPTIMAL
        assert res.value == pytest.approx(5.0, abs=1e-5)

    def test_rsoc(self):
        res = solve(rsoc_program())
        assert res.status == SolveStatus.OPTIMAL
        assert res.value == pytest.approx(8.0, abs=1e-4)

    def test_psd(self):
        res = solve(psd_program())
        assert res.status == SolveStatus.OPTIMAL
        assert res.value == pytest.approx(2.0, abs=1e-5)
        X = res.primal_psd(0).full()
        assert np.allclose(X, np.ones((2, 2)), atol=1e-4)

    def test_psd_accessor_type_guard(self):
        res = solve(lp_program())
        with pytest.raises(ValueError):
            res.primal_psd(0)

    def test_duality_gap_at_optimum(self):
        res = solve(psd_program(), SolveOptions(eps=1e-9))
        assert abs(res.value - res.dual_value) < 1e-7

    def test_eigenvalue_bound_program(self):
        # min t s.t. t I - C >= 0 via: X = t I - C PSD block plus free t
        rng = np.random.default_rng(0)
        C = rng.normal(size=(3, 3))
        C = SymMatrix((C + C.T) / 2)
        pb = ProgramBuilder()
        t = pb.add_block("free", 1)
        X = pb.add_block("psd", 3)
        cvec = svec(C)
        pos = 0
        for i in range(3):
            for j in range(i + 1):
                coeffs = [(X, pos, 1.0)]
                if i == j:
                    coeffs.append((t, 0, -1.0))
                pb.add_row(coeffs, -cvec[pos])
                pos += 1
        pb.add_objective(t, 0, 1.0)
        res = solve(pb.build(), SolveOptions(eps=1e-8))
        lam_max = float(np.linalg.eigvalsh(C.full()).max())
        assert res.value == pytest.approx(lam_max, abs=1e-5)


class TestStatuses:
    def test_primal_infeasible(self):
        prog = infeasible_program()
        res = solve(prog)
        assert res.status == SolveStatus.PRIMAL_INFEASIBLE
        # Farkas ray: A^T y <= 0 against the nonneg block, b^T y > 0
        assert float(res.y @ prog.rhs) > 0.0
        assert float((prog.A_csr().T @ res.y).max()) <= 1e-9

    def test_dual_infeasible(self):
        res = solve(unbounded_program())
        assert res.status == SolveStatus.DUAL_INFEASIBLE

    def test_max_iter_honest(self):
        res = solve(psd_program(), SolveOptions(eps=1e-14, max_iter=10))
        assert res.status == SolveStatus.MAX_ITER

    def test_options_validation(self):
        with pytest.raises(ValueError):
            SolveOptions(eps=-1.0)
        with pytest.raises(ValueError):
            SolveOptions(alpha=2.5)
        with pytest.raises(ValueError):
            SolveOptions(max_iter=0)


class TestDeterminism:
    def test_bitwise_repeat(self):
        p = psd_program()
        r1 = solve(p, SolveOptions(eps=1e-8))
        r2 = solve(p, SolveOptions(eps=1e-8))
        assert r1.iterations == r2.iterations
        assert np.array_equal(r1.x, r2.x)
        assert np.array_equal(r1.y, r2.y)
        assert r1.value == r2.value


class TestVerify:
    def test_clean_certificate(self):
        prog = psd_program()
        res = solve(prog, SolveOptions(eps=1e-9))
        rep = verify_solution(prog, res, 1e-6)
        assert rep.ok, rep.violations

    def test_rejects_non_optimal(self):
        prog = infeasible_program()
        res = solve(prog)
        with pytest.raises(ValueError):
            verify_solution(prog, res, 1e-6)

    def test_flags_corrupted_solution(self):
        prog = lp_program()
        res = solve(prog, SolveOptions(eps=1e-9))
        bad = type(res)(
            status=res.status,
            x=res.x + 0.5,
            y=res.y,
            s=res.s,
            value=res.value,
            dual_value=res.dual_value,
            residuals=res.residuals,
            iterations=res.iterations,
            blocks=res.blocks,
            _starts=res._starts,
        )
        rep = verify_solution(prog, bad, 1e-6)
        assert not rep.ok


class TestDistToCone:
    def test_inside_zero(self):
        blocks = (Block("nonneg", 3),)
        assert dist_to_cone(np.array([1.0, 0.0, 2.0]), blocks) == pytest.approx(0.0)

    def test_outside_positive(self):
        blocks = (Block("nonneg", 2),)
        assert dist_to_cone(np.array([-3.0, 1.0]), blocks) == pytest.approx(3.0)

    def test_psd_distance(self):
        blocks = (Block("psd", 2),)
        v = svec(SymMatrix.from_diag([1.0, -2.0]))
        assert dist_to_cone(v, blocks) == pytest.approx(2.0, abs=1e-10)
