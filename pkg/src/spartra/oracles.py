"""Brute-force ground truth by support enumeration.

Every routine walks all candidate supports (lexicographic order, first
attainer wins on ties) and solves the restricted problem exactly.  The
enumeration count is guarded: past the cap the routines raise instead of
silently sampling, so an oracle answer can always be trusted.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg

from .cones import ENUMERATION_GUARD
from .relaxations import SparseQcqp
from .symmat import SymMatrix, as_symmatrix, eig_sym

_CHUNK = 4096


class EnumerationGuardError(ValueError):
    """The support count exceeds the enumeration cap."""


class OracleScopeError(ValueError):
    """The instance falls outside what enumeration can solve exactly."""


@dataclass(frozen=True)
class OracleResult:
    value: float
    support: tuple
    x: np.ndarray
    enumerated: int
    detail: str = ""
    blocks: "tuple | None" = None  # (u, v) for two-block problems


def _guard(count: int, what: str) -> int:
    if count > ENUMERATION_GUARD:
        raise EnumerationGuardError(
            f"{what}: {count} supports exceeds the enumeration guard "
            f"{ENUMERATION_GUARD}"
        )
    return count


def _support_chunks(n: int, k: int):
    """Yield (B, k) integer arrays covering combinations(range(n), k)."""
    buf = []
    for S in combinations(range(n), k):
        buf.append(S)
        if len(buf) == _CHUNK:
            yield np.array(buf, dtype=np.intp)
            buf = []
    if buf:
        yield np.array(buf, dtype=np.intp)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v


# ---------------------------------------------------------------------------
# eigenvalue-style problems


def spca_exact(Sigma, k: int) -> OracleResult:
    """max x'Sx over unit vectors with at most k nonzeros.

    Equals the largest top eigenvalue among the k-by-k principal
    submatrices; only supports of exactly k indices need checking since
    eigenvalues interlace.
    """
    Sigma = as_symmatrix(Sigma)
    n = Sigma.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    count = _guard(math.comb(n, k), f"C({n},{k})")
    full = Sigma.full()
    best = -np.inf
    best_S = None
    seen = 0
    for chunk in _support_chunks(n, k):
        subs = full[chunk[:, :, None], chunk[:, None, :]]
        tops = np.linalg.eigvalsh(subs)[:, -1]
        i = int(np.argmax(tops))
        if tops[i] > best:
            best = float(tops[i])
            best_S = tuple(int(j) for j in chunk[i])
        seen += chunk.shape[0]
    sub = full[np.ix_(best_S, best_S)]
    dec = eig_sym(SymMatrix(sub))
    x = np.zeros(n)
    x[list(best_S)] = _canonical_sign(np.array(dec.eigenvectors[:, -1]))
    return OracleResult(
        value=float(dec.eigenvalues[-1]),
        support=best_S,
        x=x,
        enumerated=seen,
    )


def rip_exact(A, k: int) -> dict:
    """Extreme Rayleigh quotients of A over unit k-sparse vectors.

    Returns the smallest deltas with
    (1 - delta_minus_star) ||x||^2 <= ||Ax||^2 <= (1 + delta_plus_star) ||x||^2.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be a 2-d array")
    n = A.shape[1]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    _guard(math.comb(n, k), f"C({n},{k})")
    G = A.T @ A
    hi = -np.inf
    lo = np.inf
    S_hi = S_lo = None
    seen = 0
    for chunk in _support_chunks(n, k):
        subs = G[chunk[:, :, None], chunk[:, None, :]]
        eigs = np.linalg.eigvalsh(subs)
        tops = eigs[:, -1]
        bots = eigs[:, 0]
        i = int(np.argmax(tops))
        if tops[i] > hi:
            hi = float(tops[i])
            S_hi = tuple(int(j) for j in chunk[i])
        j = int(np.argmin(bots))
        if bots[j] < lo:
            lo = float(bots[j])
            S_lo = tuple(int(t) for t in chunk[j])
        seen += chunk.shape[0]
    return {
        "delta_plus_star": hi - 1.0,
        "delta_minus_star": 1.0 - lo,
        "support_plus": S_hi,
        "support_minus": S_lo,
        "enumerated": seen,
    }


# ---------------------------------------------------------------------------
# regression


def ridge_exact(A, y, alpha: float, k: int) -> OracleResult:
    """min (1/m)||Ax - y||^2 + alpha ||x||^2 over k-sparse x.

    Each support is solved through its normal equations; rank-deficient
    systems at alpha = 0 fall back to the least-norm solution.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = A.shape
    if y.shape != (m,):
        raise ValueError(f"y has shape {y.shape}, expected ({m},)")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    _guard(math.comb(n, k), f"C({n},{k})")
    base = float(y @ y) / m
    best = np.inf
    best_S = None
    best_x = None
    seen = 0
    for chunk in _support_chunks(n, k):
        cols = A[:, chunk]  # (m, B, k)
        cols = np.moveaxis(cols, 1, 0)  # (B, m, k)
        G = np.einsum("bmi,bmj->bij", cols, cols) / m + alpha * np.eye(k)
        h = np.einsum("bmi,m->bi", cols, y) / m
        try:
            xs = np.linalg.solve(G, h[..., None])[..., 0]
        except np.linalg.LinAlgError:
            xs = np.empty_like(h)
            for b in range(G.shape[0]):
                try:
                    xs[b] = np.linalg.solve(G[b], h[b])
                except np.linalg.LinAlgError:
                    xs[b] = np.linalg.lstsq(cols[b], y, rcond=None)[0]
        # objective at the restricted minimizer: ||y||^2/m - x'h
        vals = base - np.einsum("bi,bi->b", xs, h)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best = float(vals[i])
            best_S = tuple(int(j) for j in chunk[i])
            best_x = xs[i].copy()
        seen += chunk.shape[0]
    x = np.zeros(n)
    x[list(best_S)] = best_x
    # re-evaluate directly so the reported value is not formula-dependent
    r = y - A @ x
    value = float(r @ r) / m + alpha * float(x @ x)
    return OracleResult(value=value, support=best_S, x=x, enumerated=seen)


# ---------------------------------------------------------------------------
# canonical correlation


def _inv_sqrt_psd(S: np.ndarray, label: str, warn_state: dict) -> np.ndarray:
    vals, vecs = np.linalg.eigh(S)
    cut = max(1.0, float(vals[-1])) * 1e-12
    keep = vals > cut
    if not np.all(keep) and not warn_state.get("warned"):
        warn_state["warned"] = True
        warnings.warn(
            f"restricted {label} covariance is rank-deficient; "
            "using the pseudo-inverse square root",
            stacklevel=3,
        )
    inv = np.zeros_like(vals)
    inv[keep] = 1.0 / np.sqrt(vals[keep])
    return (vecs * inv) @ vecs.T


def cca_exact(Sxx, Syy, Sxy, k1: int, k2: int) -> OracleResult:
    """max u'Mv over k1/k2-sparse u, v with unit quadratic budgets.

    Per support pair the optimum is the top singular value of the
    whitened cross block.
    """
    Sxx = as_symmatrix(Sxx)
    Syy = as_symmatrix(Syy)
    Sxy = np.asarray(Sxy, dtype=float)
    n1, n2 = Sxx.n, Syy.n
    if Sxy.shape != (n1, n2):
        raise ValueError(f"cross block has shape {Sxy.shape}, expected ({n1}, {n2})")
    if not (1 <= k1 <= n1 and 1 <= k2 <= n2):
        raise ValueError("sparsity levels outside their block orders")
    c1 = math.comb(n1, k1)
    c2 = math.comb(n2, k2)
    _guard(c1 * c2, f"C({n1},{k1})*C({n2},{k2})")
    gx = Sxx.full()
    gy = Syy.full()
    warn_state: dict = {}
    lefts = []
    for S in combinations(range(n1), k1):
        idx = np.array(S, dtype=np.intp)
        lefts.append((idx, _inv_sqrt_psd(gx[np.ix_(idx, idx)], "first-block", warn_state)))
    rights = []
    for T in combinations(range(n2), k2):
        idx = np.array(T, dtype=np.intp)
        rights.append((idx, _inv_sqrt_psd(gy[np.ix_(idx, idx)], "second-block", warn_state)))
    best = -np.inf
    pick = None
    seen = 0
    for S, Wx in lefts:
        cross = Sxy[S, :]
        for b0 in range(0, len(rights), _CHUNK):
            batch = rights[b0 : b0 + _CHUNK]
            stack = np.stack([Wx @ cross[:, T] @ Wy for T, Wy in batch])
            svals = np.linalg.svd(stack, compute_uv=False)[:, 0]
            i = int(np.argmax(svals))
            if svals[i] > best:
                best = float(svals[i])
                pick = (S, batch[i][0], Wx, batch[i][1])
            seen += len(batch)
    S, T, Wx, Wy = pick
    M = Wx @ Sxy[np.ix_(S, T)] @ Wy
    U, svals, Vt = np.linalg.svd(M)
    u_w = U[:, 0]
    v_w = Vt[0, :]
    u = np.zeros(n1)
    u[S] = Wx @ u_w
    v = np.zeros(n2)
    v[T] = Wy @ v_w
    u = _canonical_sign(u)
    if float(u @ (Sxy @ v)) < 0:
        v = -v
    return OracleResult(
        value=float(svals[0]),
        support=tuple(int(i) for i in S) + tuple(int(n1 + j) for j in T),
        x=np.concatenate([u, v]),
        enumerated=seen,
        blocks=(u, v),
    )


# ---------------------------------------------------------------------------
# restricted QCQP


def qcqp_exact_restricted(p: SparseQcqp) -> OracleResult:
    """Exact solve of a SparseQcqp with at most one quadratic constraint.

    m = 0: the optimum is 0 at x = 0 when the objective is semidefinite
    the right way on every support, otherwise unbounded (reported as an
    infinite value with the offending direction).
    m = 1: requires A1 positive definite on every support; the restricted
    problem is an extreme generalized eigenvalue of (C_S, A_S).
    """
    if p.m > 1:
        raise OracleScopeError(
            f"enumeration handles at most one quadratic constraint, got {p.m}"
        )
    n, k = p.n, p.k
    _guard(math.comb(n, k), f"C({n},{k})")
    minimize = p.sense == "min"
    Cf = p.C.full()
    if p.m == 0:
        worst = None
        seen = 0
        for S in combinations(range(n), k):
            idx = np.array(S, dtype=np.intp)
            vals, vecs = np.linalg.eigh(Cf[np.ix_(idx, idx)])
            bad = vals[0] < 0 if minimize else vals[-1] > 0
            if bad:
                direction = vecs[:, 0] if minimize else vecs[:, -1]
                x = np.zeros(n)
                x[idx] = direction
                worst = (S, x)
                break
            seen += 1
        if worst is not None:
            S, x = worst
            return OracleResult(
                value=-np.inf if minimize else np.inf,
                support=tuple(int(i) for i in S),
                x=x,
                enumerated=seen + 1,
                detail="objective unbounded along the reported direction",
            )
        return OracleResult(
            value=0.0, support=(), x=np.zeros(n), enumerated=seen,
            detail="unconstrained optimum at the origin",
        )
    A1, b1 = p.constraints[0]
    Af = A1.full()
    if b1 < 0:
        raise OracleScopeError("constraint level must be nonnegative for A1 > 0")
    if b1 == 0:
        return OracleResult(
            value=0.0, support=(), x=np.zeros(n), enumerated=0,
            detail="zero constraint level forces x = 0",
        )
    best = np.inf if minimize else -np.inf
    best_S = None
    best_x = None
    seen = 0
    for S in combinations(range(n), k):
        idx = np.array(S, dtype=np.intp)
        As = Af[np.ix_(idx, idx)]
        if np.linalg.eigvalsh(As)[0] <= 0:
            raise OracleScopeError(
                f"constraint matrix is not positive definite on support {S}"
            )
        Cs = Cf[np.ix_(idx, idx)]
        vals, vecs = scipy.linalg.eigh(Cs, As, check_finite=False)
        pos = 0 if minimize else -1
        cand = float(b1) * float(vals[pos])
        better = cand < best if minimize else cand > best
        if better:
            best = cand
            best_S = S
            # eigh normalizes v' As v = 1; rescale to the constraint level
            best_x = np.sqrt(float(b1)) * vecs[:, pos]
        seen += 1
    x = np.zeros(n)
    x[list(best_S)] = best_x
    x = _canonical_sign(x)
    return OracleResult(
        value=best,
        support=tuple(int(i) for i in best_S),
        x=x,
        enumerated=seen,
    )
