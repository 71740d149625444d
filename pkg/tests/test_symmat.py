import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spartra.symmat import (
    SymMatrix,
    as_symmatrix,
    dop,
    eig_sym,
    load_matrix_csv,
    load_matrix_json,
    matrix_from_dict,
    matrix_to_dict,
    norms,
    perron_pair,
    principal_submatrix,
    proj_psd,
    save_matrix_json,
    smat,
    spectral_norm,
    spectral_radius_nonneg,
    svec,
    svec_index,
    tri_order,
    tri_size,
)

from conftest import rand_psd, rand_sym


class TestSymMatrix:
    def test_symmetrizes_input(self):
        M = SymMatrix([[1.0, 2.0], [0.0, 3.0]])
        assert np.allclose(M.full(), [[1.0, 1.0], [1.0, 3.0]])

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            SymMatrix(np.zeros((2, 3)))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            SymMatrix([[np.nan, 0.0], [0.0, 1.0]])

    def test_immutable(self):
        M = SymMatrix.identity(3)
        with pytest.raises(AttributeError):
            M.n = 5
        assert not M.lower.flags.writeable

    def test_lower_round_trip(self):
        M = rand_sym(5, 0)
        back = SymMatrix.from_lower(5, M.lower)
        assert M == back

    def test_diag_trace_dot(self):
        M = rand_sym(4, 1)
        F = M.full()
        assert np.allclose(M.diag(), np.diag(F))
        assert M.trace() == pytest.approx(np.trace(F))
        N = rand_sym(4, 2)
        assert M.dot(N) == pytest.approx(np.sum(F * N.full()))

    def test_outer(self):
        x = np.array([1.0, -2.0, 0.5])
        assert np.allclose(SymMatrix.outer(x).full(), np.outer(x, x))

    def test_eq_hash(self):
        A = rand_sym(3, 3)
        B = SymMatrix(A.full())
        assert A == B and hash(A) == hash(B)
        assert A != rand_sym(3, 4)


class TestSvec:
    def test_round_trip(self):
        M = rand_sym(6, 5)
        assert smat(svec(M)) == M

    def test_inner_product_preserved(self):
        A, B = rand_sym(5, 6), rand_sym(5, 7)
        assert float(svec(A) @ svec(B)) == pytest.approx(A.dot(B))

    def test_norm_preserved(self):
        A = rand_sym(7, 8)
        assert np.linalg.norm(svec(A)) == pytest.approx(
            np.linalg.norm(A.full(), "fro")
        )

    def test_svec_index(self):
        n = 4
        M = rand_sym(n, 9)
        v = svec(M)
        F = M.full()
        for i in range(n):
            assert v[svec_index(n, i, i)] == pytest.approx(F[i, i])
        assert v[svec_index(n, 1, 0)] == pytest.approx(np.sqrt(2) * F[1, 0])
        assert svec_index(n, 0, 1) == svec_index(n, 1, 0)

    def test_tri_size_order(self):
        for n in (1, 2, 5, 10):
            assert tri_order(tri_size(n)) == n
        with pytest.raises(ValueError):
            tri_order(4)


class TestEig:
    def test_matches_numpy(self):
        M = rand_sym(8, 10)
        dec = eig_sym(M)
        w = np.linalg.eigvalsh(M.full())
        assert np.allclose(dec.eigenvalues, w, atol=1e-10)
        # residuals of every pair
        F = M.full()
        for i in range(8):
            v = dec.eigenvectors[:, i]
            assert np.linalg.norm(F @ v - dec.eigenvalues[i] * v) < 1e-9

    def test_ascending_orthonormal(self):
        dec = eig_sym(rand_sym(6, 11))
        assert np.all(np.diff(dec.eigenvalues) >= -1e-12)
        assert np.allclose(
            dec.eigenvectors.T @ dec.eigenvectors, np.eye(6), atol=1e-10
        )

    def test_lambda_min_max(self):
        dec = eig_sym(SymMatrix.from_diag([3.0, -1.0, 2.0]))
        assert dec.lambda_min == pytest.approx(-1.0)
        assert dec.lambda_max == pytest.approx(3.0)

    def test_corank(self):
        dec = eig_sym(SymMatrix.from_diag([0.0, 0.0, 1.0, 2.0]))
        assert dec.corank() == 2
        assert eig_sym(SymMatrix.zeros(3)).corank() == 3
        # relative threshold: 1e-7 entry counts as zero against scale 1
        dec = eig_sym(SymMatrix.from_diag([1e-7, 1.0]))
        assert dec.corank(1e-6) == 1
        assert dec.corank(1e-8) == 0

    def test_determinism(self):
        M = rand_sym(10, 12)
        d1, d2 = eig_sym(M), eig_sym(M)
        assert np.array_equal(d1.eigenvalues, d2.eigenvalues)
        assert np.array_equal(d1.eigenvectors, d2.eigenvectors)


class TestOps:
    def test_proj_psd(self):
        M = rand_sym(6, 13)
        P = proj_psd(M).full()
        w = np.linalg.eigvalsh(P)
        assert w.min() >= -1e-10
        # projection is the positive part
        dec = eig_sym(M)
        expect = (
            dec.eigenvectors
            @ np.diag(np.maximum(dec.eigenvalues, 0.0))
            @ dec.eigenvectors.T
        )
        assert np.allclose(P, expect, atol=1e-10)

    def test_proj_psd_fixed_point(self):
        P = rand_psd(5, 14)
        assert np.allclose(proj_psd(P).full(), P.full(), atol=1e-9)

    def test_dop(self):
        Z = rand_sym(5, 15)
        k = 3
        D = dop(Z, k).full()
        expect = k * np.diag(Z.diag()) - Z.full()
        assert np.allclose(D, expect)

    def test_dop_adjoint_identity(self):
        # <dop(Z,k), X> == <Z, k diag(X) - X> for all symmetric Z, X
        Z, X = rand_sym(4, 16), rand_sym(4, 17)
        k = 2
        lhs = dop(Z, k).dot(X)
        rhs = Z.dot(dop(X, k))
        assert lhs == pytest.approx(rhs)

    def test_norms(self):
        M = rand_sym(5, 18)
        F = M.full()
        out = norms(M)
        assert out["frobenius"] == pytest.approx(np.linalg.norm(F, "fro"))
        assert out["l1_entrywise"] == pytest.approx(np.abs(F).sum())
        assert out["linf_entrywise"] == pytest.approx(np.abs(F).max())
        assert out["spectral"] == pytest.approx(np.linalg.norm(F, 2))
        assert out["trace"] == pytest.approx(np.trace(F))
        assert spectral_norm(M) == pytest.approx(np.linalg.norm(F, 2))

    def test_principal_submatrix(self):
        M = rand_sym(6, 19)
        S = [0, 2, 5]
        sub = principal_submatrix(M, S)
        assert np.allclose(sub.full(), M.full()[np.ix_(S, S)])


class TestPerron:
    def test_known_value(self):
        M = SymMatrix([[0.0, 1.0], [1.0, 0.0]])
        rho, v = perron_pair(M)
        assert rho == pytest.approx(1.0)
        assert np.allclose(np.abs(v), np.ones(2) / np.sqrt(2), atol=1e-8)

    def test_radius_vs_numpy(self):
        M = np.abs(rand_sym(6, 20).full())
        rho = spectral_radius_nonneg(as_symmatrix(M))
        assert rho == pytest.approx(np.abs(np.linalg.eigvalsh(M)).max(), rel=1e-8)

    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            perron_pair(SymMatrix([[1.0, -1.0], [-1.0, 1.0]]))


class TestSerialization:
    def test_dict_round_trip(self):
        M = rand_sym(4, 21)
        assert matrix_from_dict(matrix_to_dict(M)) == M

    def test_json_round_trip(self, tmp_path):
        M = rand_sym(4, 22)
        path = tmp_path / "m.json"
        save_matrix_json(M, path)
        assert load_matrix_json(path) == M

    def test_csv_load(self, tmp_path):
        M = rand_sym(3, 23)
        path = tmp_path / "m.csv"
        np.savetxt(path, M.full(), delimiter=",")
        assert np.allclose(load_matrix_csv(path).full(), M.full(), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_prop_svec_isometry(n, seed):
    M = rand_sym(n, seed)
    v = svec(M)
    assert np.linalg.norm(v) == pytest.approx(
        np.linalg.norm(M.full(), "fro"), rel=1e-12, abs=1e-12
    )
    # round trip exact up to one ulp of the sqrt(2) off-diagonal scaling
    assert np.allclose(smat(v).full(), M.full(), rtol=1e-14, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_prop_proj_psd_idempotent_contractive(n, seed):
    M = rand_sym(n, seed)
    P = proj_psd(M)
    P2 = proj_psd(P)
    assert np.allclose(P.full(), P2.full(), atol=1e-9)
    # projection moves no farther than to any PSD point (0 is PSD)
    assert np.linalg.norm(P.full() - M.full(), "fro") <= np.linalg.norm(
        M.full(), "fro"
    ) + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(1, 7), st.integers(0, 10**6))
def test_prop_dop_sparse_outer_psd(n, k, seed):
    # rank-one matrices of k-sparse vectors satisfy k diag(X) - X >= 0
    from conftest import rand_unit_sparse

    k = min(k, n)
    x = rand_unit_sparse(n, k, seed)
    D = dop(SymMatrix.outer(x), k)
    assert eig_sym(D).lambda_min >= -1e-10
