"""Tests for the sparse heuristic baselines."""
import numpy as np
import pytest

from spartra.heuristics import (
    HeuristicConfig,
    greedy_regression,
    htp,
    iht,
    tpca,
    tpower,
    truncate_k,
)
from spartra.oracles import ridge_exact, spca_exact
from spartra.symmat import SymMatrix

from conftest import rng


class TestTruncate:
    def test_keeps_largest_magnitudes(self):
        v = np.array([0.1, -3.0, 2.0, 0.5])
        t = truncate_k(v, 2)
        assert np.array_equal(np.flatnonzero(t), [1, 2])
        assert t[1] == -3.0 and t[2] == 2.0

    def test_ties_prefer_lowest_index(self):
        v = np.array([1.0, -1.0, 1.0, 0.5])
        t = truncate_k(v, 2)
        assert np.array_equal(np.flatnonzero(t), [0, 1])

    def test_k_at_least_dimension_is_identity(self):
        v = np.array([1.0, -2.0])
        assert np.array_equal(truncate_k(v, 5), v)


class TestTpcaTpower:
    def test_diagonal(self):
        r = tpower(SymMatrix(np.diag([3.0, 1.0, 2.0])), 1)
        assert r.value == pytest.approx(3.0, abs=1e-12)
        assert abs(r.x[0]) == pytest.approx(1.0, abs=1e-12)

    def test_rank_one_exactness(self):
        sigma = np.array([1.0, -2.0, 0.5, 3.0])
        r = tpower(SymMatrix(np.outer(sigma, sigma)), 2)
        # best pair is {1, 3}: 4 + 9
        assert r.value == pytest.approx(13.0, abs=1e-9)

    def test_tpca_is_truncated_eigenvector_value(self):
        M = rng(3).standard_normal((10, 10))
        S = SymMatrix((M + M.T) / 2)
        r = tpca(S, 3)
        w, V = np.linalg.eigh(S.full())
        xt = truncate_k(V[:, -1], 3)
        xt /= np.linalg.norm(xt)
        assert r.value == pytest.approx(xt @ S.full() @ xt, abs=1e-12)

    def test_ascent_ordering(self):
        M = rng(3).standard_normal((10, 10))
        S = SymMatrix((M + M.T) / 2)
        ex = spca_exact(S, 3)
        tp = tpower(S, 3, HeuristicConfig(seed=5))
        tc = tpca(S, 3)
        # heuristics never beat the oracle; tpower refines the tpca start
        assert tp.value <= ex.value + 1e-9
        assert tc.value <= tp.value + 1e-9

    def test_output_is_unit_and_sparse(self):
        M = rng(3).standard_normal((10, 10))
        S = SymMatrix((M + M.T) / 2)
        r = tpower(S, 3, HeuristicConfig(seed=5))
        assert np.linalg.norm(r.x) == pytest.approx(1.0, abs=1e-12)
        assert np.count_nonzero(r.x) <= 3

    def test_seeded_determinism(self):
        M = rng(3).standard_normal((10, 10))
        S = SymMatrix((M + M.T) / 2)
        a = tpower(S, 3, HeuristicConfig(seed=42))
        b = tpower(S, 3, HeuristicConfig(seed=42))
        assert np.array_equal(a.x, b.x)
        assert a.value == b.value

    def test_result_fields(self):
        r = tpower(SymMatrix(np.eye(3)), 1)
        assert r.status in ("converged", "max_iter")
        assert r.iterations >= 0


@pytest.fixture(scope="module")
def ridge_setup():
    g = rng(3)
    A = g.standard_normal((30, 12))
    xbar = np.zeros(12)
    xbar[[2, 5, 9]] = [1.0, -2.0, 1.5]
    return A, xbar


class TestGradientPursuits:
    def test_noiseless_recovery(self, ridge_setup):
        A, xbar = ridge_setup
        y = A @ xbar
        cfg = HeuristicConfig(seed=1)
        ri = iht(A, y, 0.0, 3, cfg)
        rh = htp(A, y, 0.0, 3, cfg)
        assert ri.value < 1e-10
        assert rh.value < 1e-12
        assert np.abs(rh.x - xbar).max() < 1e-10

    def test_zero_target(self, ridge_setup):
        A, _ = ridge_setup
        r = iht(A, np.zeros(30), 0.1, 3, HeuristicConfig(seed=1))
        assert r.value == 0.0
        assert np.all(r.x == 0)

    def test_dominated_by_oracle(self, ridge_setup):
        A, xbar = ridge_setup
        y = A @ xbar + 0.02 * rng(31).standard_normal(30)
        ex = ridge_exact(A, y, 0.01, 3)
        cfg = HeuristicConfig(seed=1)
        ri = iht(A, y, 0.01, 3, cfg)
        rh = htp(A, y, 0.01, 3, cfg)
        assert ri.value >= ex.value - 1e-10
        assert rh.value >= ex.value - 1e-10
        # the debiasing refit never hurts relative to plain thresholding
        assert rh.value <= ri.value + 1e-9

    def test_seeded_determinism(self, ridge_setup):
        A, xbar = ridge_setup
        y = A @ xbar + 0.1 * rng(5).standard_normal(30)
        a = iht(A, y, 0.05, 3, HeuristicConfig(seed=9))
        b = iht(A, y, 0.05, 3, HeuristicConfig(seed=9))
        assert np.array_equal(a.x, b.x)


class TestGreedy:
    def test_dominated_by_oracle(self, ridge_setup):
        A, xbar = ridge_setup
        y = A @ xbar + 0.02 * rng(31).standard_normal(30)
        ex = ridge_exact(A, y, 0.01, 3)
        g = greedy_regression(A, y, 0.01, 3)
        assert g.value >= ex.value - 1e-12

    def test_full_support_matches_closed_form(self, ridge_setup):
        A, xbar = ridge_setup
        y = A @ xbar + 0.02 * rng(31).standard_normal(30)
        m, n = A.shape
        g = greedy_regression(A, y, 0.01, n)
        xcf = np.linalg.solve(A.T @ A + m * 0.01 * np.eye(n), A.T @ y)
        want = np.linalg.norm(y - A @ xcf) ** 2 / m + 0.01 * xcf @ xcf
        assert g.value == pytest.approx(want, abs=1e-10)

    def test_orthonormal_design_matched_filter(self):
        g = rng(3)
        Q, _ = np.linalg.qr(g.standard_normal((20, 8)))
        y = g.standard_normal(20)
        res = greedy_regression(Q, y, 0.0, 3)
        # orthogonal columns decouple: greedy picks the top correlations
        match = np.sort(np.argsort(-np.abs(Q.T @ y))[:3])
        assert np.array_equal(np.flatnonzero(res.x), match)

    def test_k_validation(self, ridge_setup):
        A, _ = ridge_setup
        with pytest.raises(ValueError):
            greedy_regression(A, np.zeros(30), 0.0, 0)


class TestConfig:
    def test_defaults(self):
        cfg = HeuristicConfig()
        assert cfg.max_iter == 2000
        assert cfg.tol == 1e-10
        assert cfg.restarts == 10
        assert cfg.step is None

    def test_validation(self):
        with pytest.raises(ValueError):
            HeuristicConfig(max_iter=0)
        with pytest.raises(ValueError):
            HeuristicConfig(restarts=0)
