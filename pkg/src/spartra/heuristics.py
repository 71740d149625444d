"""Sparse baseline methods: truncated power iteration, thresholding
pursuit variants, and greedy forward selection.

All methods return feasible points (exact sparsity, constraints met to
machine precision) with the true objective re-evaluated at the end, so
their values are valid primal bounds in benchmark comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symmat import SymMatrix, as_symmatrix, eig_sym

_DIVERGENCE_PATIENCE = 10


@dataclass(frozen=True)
class HeuristicConfig:
    max_iter: int = 2000
    tol: float = 1e-10
    restarts: int = 10
    seed: int = 0
    step: "float | None" = None  # gradient methods; None picks 1/L

    def __post_init__(self):
        if self.max_iter < 1 or self.restarts < 1:
            raise ValueError("iteration and restart counts must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")


@dataclass(frozen=True)
class HeuristicResult:
    """Feasible point and value; unpacks like (x, value)."""

    x: np.ndarray
    value: float
    status: str = "converged"  # converged | max_iter | diverged
    iterations: int = 0

    def __iter__(self):
        yield self.x
        yield self.value


def truncate_k(v: np.ndarray, k: int) -> np.ndarray:
    """Zero all but the k largest magnitudes; ties keep the lowest index."""
    v = np.asarray(v, dtype=float)
    if k >= v.size:
        return v.copy()
    order = np.argsort(-np.abs(v), kind="stable")
    out = np.zeros_like(v)
    keep = order[:k]
    out[keep] = v[keep]
    return out


def _unit(v: np.ndarray) -> np.ndarray:
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / nv


# ---------------------------------------------------------------------------
# eigenvalue-style heuristics


def tpca(Sigma, k: int) -> HeuristicResult:
    """Truncate the top eigenvector to k entries and renormalize."""
    Sigma = as_symmatrix(Sigma)
    dec = eig_sym(Sigma)
    v = np.array(dec.eigenvectors[:, -1])
    idx = int(np.argmax(np.abs(v)))
    if v[idx] < 0:
        v = -v
    x = _unit(truncate_k(v, k))
    return HeuristicResult(x=x, value=float(x @ (Sigma.full() @ x)))


def tpower(Sigma, k: int, cfg: "HeuristicConfig | None" = None) -> HeuristicResult:
    """Truncated power iteration, best over restarts.

    The matrix is shifted by max(0, -lambda_min) so each iteration is a
    monotone ascent step even for indefinite input; the reported value is
    on the unshifted objective.  Restart 0 starts from the truncated top
    eigenvector, later restarts from seeded random sparse directions.
    """
    cfg = cfg if cfg is not None else HeuristicConfig()
    Sigma = as_symmatrix(Sigma)
    n = Sigma.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    full = Sigma.full()
    shift = max(0.0, -float(eig_sym(Sigma).lambda_min))
    rng = np.random.default_rng(cfg.seed)
    best: "HeuristicResult | None" = None
    for r in range(cfg.restarts):
        if r == 0:
            x = tpca(Sigma, k).x
        else:
            x = _unit(truncate_k(rng.standard_normal(n), k))
        status = "max_iter"
        it = 0
        for it in range(1, cfg.max_iter + 1):
            y = full @ x + shift * x
            if float(np.linalg.norm(y)) <= 1e-300:
                status = "converged"  # fixed point of the zero map
                break
            x_new = _unit(truncate_k(y, k))
            if float(np.linalg.norm(x_new - x)) <= cfg.tol:
                x = x_new
                status = "converged"
                break
            x = x_new
        value = float(x @ (full @ x))
        if best is None or value > best.value:
            best = HeuristicResult(x=x, value=value, status=status, iterations=it)
    return best


# ---------------------------------------------------------------------------
# regression heuristics


def _ridge_value(A, y, alpha: float, x: np.ndarray) -> float:
    m = A.shape[0]
    r = y - A @ x
    return float(r @ r) / m + alpha * float(x @ x)


def _refit(A, y, S: np.ndarray, alpha: float) -> np.ndarray:
    m = A.shape[0]
    As = A[:, S]
    if alpha == 0.0:
        return np.linalg.lstsq(As, y, rcond=None)[0]
    G = As.T @ As + m * alpha * np.eye(S.size)
    return np.linalg.solve(G, As.T @ y)


def _grad_half(A, y, alpha: float, x: np.ndarray) -> np.ndarray:
    # gradient of (1/2) * objective: (1/m) A'(Ax - y) + alpha x
    m = A.shape[0]
    return (A.T @ (A @ x - y)) / m + alpha * x


def _default_step(A, alpha: float) -> float:
    m = A.shape[0]
    L = float(np.linalg.eigvalsh(A.T @ A)[-1]) / m + alpha
    return 1.0 / L if L > 0 else 1.0


def _threshold_pursuit(
    A, y, alpha: float, k: int, cfg: HeuristicConfig, refit: bool
) -> HeuristicResult:
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = A.shape
    if y.shape != (m,):
        raise ValueError(f"y has shape {y.shape}, expected ({m},)")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    step = cfg.step if cfg.step is not None else _default_step(A, alpha)
    rng = np.random.default_rng(cfg.seed)
    best: "HeuristicResult | None" = None
    for r in range(cfg.restarts):
        if r == 0:
            x = truncate_k(A.T @ y, k)  # matched filter
        else:
            x = truncate_k(rng.standard_normal(n), k)
        if refit:
            S = np.flatnonzero(x)
            if S.size:
                x = np.zeros(n)
                x[S] = _refit(A, y, S, alpha)
        val = _ridge_value(A, y, alpha, x)
        run_best_x, run_best_val = x, val
        prev_support = np.flatnonzero(x)
        grow = 0
        status = "max_iter"
        it = 0
        for it in range(1, cfg.max_iter + 1):
            x_new = truncate_k(x - step * _grad_half(A, y, alpha, x), k)
            support = np.flatnonzero(x_new)
            if refit and support.size:
                z = np.zeros(n)
                z[support] = _refit(A, y, support, alpha)
                x_new = z
            val_new = _ridge_value(A, y, alpha, x_new)
            if val_new < run_best_val:
                run_best_x, run_best_val = x_new, val_new
            grow = grow + 1 if val_new > val + 1e-15 else 0
            if grow >= _DIVERGENCE_PATIENCE:
                status = "diverged"
                x = run_best_x
                break
            same_support = support.size == prev_support.size and np.array_equal(
                support, prev_support
            )
            moved = float(np.linalg.norm(x_new - x))
            if same_support and (refit or moved <= cfg.tol * max(1.0, float(np.linalg.norm(x)))):
                x = x_new
                status = "converged"
                break
            prev_support = support
            x, val = x_new, val_new
        final_val = _ridge_value(A, y, alpha, x)
        if final_val > run_best_val:
            x, final_val = run_best_x, run_best_val
        if best is None or final_val < best.value:
            best = HeuristicResult(x=x, value=final_val, status=status, iterations=it)
    return best


def iht(A, y, alpha: float, k: int, cfg: "HeuristicConfig | None" = None) -> HeuristicResult:
    """Iterative hard thresholding on the penalized least-squares objective.

    Gradient steps of length step (default 1/L) followed by truncation;
    stops when the support and iterate both settle.
    """
    return _threshold_pursuit(A, y, alpha, k, cfg or HeuristicConfig(), refit=False)


def htp(A, y, alpha: float, k: int, cfg: "HeuristicConfig | None" = None) -> HeuristicResult:
    """Hard thresholding pursuit: IHT support selection, exact refit per step."""
    return _threshold_pursuit(A, y, alpha, k, cfg or HeuristicConfig(), refit=True)


def greedy_regression(A, y, alpha: float, k: int) -> HeuristicResult:
    """Forward selection: grow the support one coordinate at a time,
    refitting on each candidate and keeping the largest decrease."""
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = A.shape
    if y.shape != (m,):
        raise ValueError(f"y has shape {y.shape}, expected ({m},)")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    S: list = []
    for _ in range(k):
        best_j = -1
        best_val = np.inf
        for j in range(n):
            if j in S:
                continue
            cand = np.array(sorted(S + [j]), dtype=np.intp)
            w = _refit(A, y, cand, alpha)
            x = np.zeros(n)
            x[cand] = w
            val = _ridge_value(A, y, alpha, x)
            if val < best_val - 1e-15:
                best_val = val
                best_j = j
        S.append(best_j)
    idx = np.array(sorted(S), dtype=np.intp)
    x = np.zeros(n)
    x[idx] = _refit(A, y, idx, alpha)
    return HeuristicResult(x=x, value=_ridge_value(A, y, alpha, x), iterations=k)
