"""Membership tests and witnesses for the sparsity cones and their duals.

Eigenvalue memberships (PSD caps, entrywise-l1 budgets) are decided directly
from eigendecompositions.  Memberships that quantify over auxiliary variables
(the z-vector cones and the dual of the PSD sparsity cone) are decided by the
embedded conic solver: member on a clean feasible solve, non-member only on a
separating improving ray, and a third "inconclusive" verdict (member=None)
when the solver runs out of iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import symmat
from .conic import ProgramBuilder
from .solver import SolveOptions, SolveStatus, solve
from .symmat import (
    SymMatrix,
    as_symmatrix,
    dop,
    eig_sym,
    matrix_to_dict,
    perron_pair,
    principal_submatrix,
)

DEFAULT_TOL = 1e-8

ENUMERATION_GUARD = 10**6


@dataclass(frozen=True)
class ConeVerdict:
    """member True/False, or None when a feasibility solve was inconclusive."""

    member: bool | None
    margin: float
    witness: object = None
    detail: dict = field(default_factory=dict)

    def __bool__(self):
        return self.member is True

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, SymMatrix):
            w = matrix_to_dict(w)
        elif isinstance(w, np.ndarray):
            w = w.tolist()
        detail = {}
        for key, val in self.detail.items():
            if isinstance(val, np.ndarray):
                val = val.tolist()
            elif isinstance(val, SymMatrix):
                val = matrix_to_dict(val)
            elif isinstance(val, (np.floating, np.integer)):
                val = val.item()
            detail[key] = val
        return {
            "member": self.member,
            "margin": float(self.margin),
            "witness": w,
            "detail": detail,
        }


def in_Q_rank_one(x, k: int, tol: float = 1e-6) -> ConeVerdict:
    """Is xx^T the square of a k-sparse vector, i.e. is ||x||_0 <= k?

    Support is counted above the relative cutoff tol*||x||.  On rejection the
    witness y carries 1/x_i on the support: it satisfies
    y^T (k diag(xx^T)) y = k*s < s^2 = y^T (xx^T) y for support size s > k.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.asarray(x, dtype=float)
    nx = float(np.linalg.norm(x))
    support = np.flatnonzero(np.abs(x) > tol * nx)
    s = support.size
    if s <= k:
        return ConeVerdict(True, float(k - s), detail={"support": support})
    y = np.zeros_like(x)
    y[support] = 1.0 / x[support]
    return ConeVerdict(False, float(k - s), witness=y, detail={"support": support})


def in_spartrahedron(X, k: int, tol: float = DEFAULT_TOL) -> ConeVerdict:
    """Membership in {X : k diag(X) >= X >= 0} (PSD order)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    X = as_symmatrix(X)
    s = 1.0 + symmat.spectral_norm(X)
    lo = eig_sym(X)
    cap = eig_sym(dop(X, k))
    margin = min(lo.lambda_min, cap.lambda_min)
    if lo.lambda_min < -tol * s:
        return ConeVerdict(
            False, margin, witness=lo.eigenvectors[:, 0].copy(),
            detail={"condition": "psd", "lambda_min": lo.lambda_min},
        )
    if cap.lambda_min < -tol * s:
        return ConeVerdict(
            False, margin, witness=cap.eigenvectors[:, 0].copy(),
            detail={"condition": "cap", "lambda_min": cap.lambda_min},
        )
    return ConeVerdict(True, margin, detail={"lambda_min_psd": lo.lambda_min,
                                             "lambda_min_cap": cap.lambda_min})


def in_Sone(X, k: int, tol: float = DEFAULT_TOL) -> ConeVerdict:
    """Membership in {X >= 0 : ||X||_1 <= k tr X}."""
    if k < 1:
        raise ValueError("k must be >= 1")
    X = as_symmatrix(X)
    s = 1.0 + symmat.spectral_norm(X)
    lo = eig_sym(X)
    A = X.full()
    l1 = float(np.abs(A).sum())
    slack = k * float(np.trace(A)) - l1
    margin = min(lo.lambda_min, slack)
    if lo.lambda_min < -tol * s:
        return ConeVerdict(
            False, margin, witness=lo.eigenvectors[:, 0].copy(),
            detail={"condition": "psd", "lambda_min": lo.lambda_min},
        )
    if slack < -tol * s:
        # sign matrix W certifies: W . X = ||X||_1 > k tr X
        return ConeVerdict(
            False, margin, witness=SymMatrix(np.sign(A)),
            detail={"condition": "l1", "l1": l1, "k_trace": k * float(np.trace(A))},
        )
    return ConeVerdict(True, margin, detail={"l1": l1, "lambda_min": lo.lambda_min})


def _row_lower_bounds_feasibility(lower, t, k, solver_opts):
    """Feasibility of { l <= z <= t, sum z = k t } through the conic solver.

    Encoded with explicit nonnegative gap variables:
    a = z - l >= 0, b = t - z >= 0, sum a = k t - sum l.
    """
    n = lower.size
    pb = ProgramBuilder()
    a = pb.add_block("nonneg", n)
    b = pb.add_block("nonneg", n)
    for i in range(n):
        pb.add_row([(a, i, 1.0), (b, i, 1.0)], t - lower[i])
    pb.add_row([(a, i, 1.0) for i in range(n)], k * t - float(lower.sum()))
    prog = pb.build()
    res = solve(prog, solver_opts)
    z = None
    if res.status == SolveStatus.OPTIMAL:
        z = lower + res.primal_block(0)
    return res, z


def _solver_verdict(res, eps, margin, member_detail, witness=None, witness_detail=None):
    """Map a feasibility SolveResult onto the tri-state verdict."""
    if res.status == SolveStatus.OPTIMAL and max(res.residuals.values()) <= 10 * eps:
        return ConeVerdict(True, margin, detail=member_detail)
    if res.status == SolveStatus.PRIMAL_INFEASIBLE:
        return ConeVerdict(False, margin, witness=witness, detail=witness_detail or {})
    return ConeVerdict(None, margin, detail={"solver_status": res.status.value,
                                             "residuals": res.residuals})


def in_Sz(X, k: int, tol: float = DEFAULT_TOL,
          solver_opts: SolveOptions | None = None) -> ConeVerdict:
    """Membership in the z-augmented cone: X PSD and there is z with
    ||X_{i,:}||^2 <= X_ii z_i, ||X_{i,:}||_1^2 <= k X_ii z_i,
    0 <= z_i <= tr X, sum z_i = k tr X.

    With X fixed, each row pins a lower bound on z_i, so feasibility is a
    small linear program handed to the embedded solver.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    X = as_symmatrix(X)
    n = X.n
    s = 1.0 + symmat.spectral_norm(X)
    lo = eig_sym(X)
    if lo.lambda_min < -tol * s:
        return ConeVerdict(
            False, lo.lambda_min, witness=lo.eigenvectors[:, 0].copy(),
            detail={"condition": "psd", "lambda_min": lo.lambda_min},
        )
    A = X.full()
    t = float(np.trace(A))
    if t <= tol * s:
        return ConeVerdict(True, 0.0, detail={"z": np.zeros(n)})

    lower = np.zeros(n)
    for i in range(n):
        row_sq = float(A[i] @ A[i])
        if A[i, i] > tol * s:
            l1row = float(np.abs(A[i]).sum())
            lower[i] = max(row_sq, l1row * l1row / k) / A[i, i]
        elif row_sq > tol * s * max(t, 1.0):
            return ConeVerdict(
                False, -math.sqrt(row_sq), witness=A[i].copy(),
                detail={"condition": "zero_diagonal_row", "row": i},
            )
    margin = min(k * t - float(lower.sum()), float((t - lower).min()))
    opts = solver_opts or SolveOptions()
    res, z = _row_lower_bounds_feasibility(lower, t, k, opts)
    if z is not None:
        detail = {"z": z, "lower": lower}
    else:
        detail = {"lower": lower}
    return _solver_verdict(
        res, opts.eps, margin, detail,
        witness=res.y.copy() if res.status == SolveStatus.PRIMAL_INFEASIBLE else None,
        witness_detail={"condition": "z_system", "lower": lower, "trace": t},
    )


def in_Sbs(X, k: int, tol: float = DEFAULT_TOL,
           solver_opts: SolveOptions | None = None) -> ConeVerdict:
    """Membership in the big-M z-cone: row norms ||X_{i,:}||^2 <= X_ii z_i,
    X_ij <= M_ij z_i with M_ii = 1 and M_ij = 1/2, 0 <= z_i <= tr X,
    sum z_i = k tr X, and X in the l1 cone."""
    if k < 1:
        raise ValueError("k must be >= 1")
    X = as_symmatrix(X)
    n = X.n
    base = in_Sone(X, k, tol)
    if base.member is False:
        return ConeVerdict(False, base.margin, witness=base.witness,
                           detail={"condition": "l1_cone", **base.detail})
    s = 1.0 + symmat.spectral_norm(X)
    A = X.full()
    t = float(np.trace(A))
    if t <= tol * s:
        return ConeVerdict(True, 0.0, detail={"z": np.zeros(n)})
    lower = np.zeros(n)
    for i in range(n):
        row_sq = float(A[i] @ A[i])
        off = np.delete(A[i], i)
        lb = max(A[i, i], 2.0 * float(off.max(initial=0.0)), 0.0)
        if A[i, i] > tol * s:
            lb = max(lb, row_sq / A[i, i])
        elif row_sq > tol * s * max(t, 1.0):
            return ConeVerdict(
                False, -math.sqrt(row_sq), witness=A[i].copy(),
                detail={"condition": "zero_diagonal_row", "row": i},
            )
        lower[i] = lb
    margin = min(k * t - float(lower.sum()), float((t - lower).min()))
    opts = solver_opts or SolveOptions()
    res, z = _row_lower_bounds_feasibility(lower, t, k, opts)
    detail = {"z": z, "lower": lower} if z is not None else {"lower": lower}
    return _solver_verdict(
        res, opts.eps, margin, detail,
        witness=res.y.copy() if res.status == SolveStatus.PRIMAL_INFEASIBLE else None,
        witness_detail={"condition": "z_system", "lower": lower, "trace": t},
    )


def in_convQ2(X, tol: float = DEFAULT_TOL) -> ConeVerdict:
    """Membership in the hull of squares of 2-sparse vectors: X PSD and the
    off-diagonal pattern scaled by the diagonal has Perron root <= 1.

    A zero diagonal entry forces its whole row to vanish (else non-member);
    surviving rows are tested after dropping the degenerate ones.
    """
    X = as_symmatrix(X)
    s = 1.0 + symmat.spectral_norm(X)
    lo = eig_sym(X)
    if lo.lambda_min < -tol * s:
        return ConeVerdict(
            False, lo.lambda_min, witness=lo.eigenvectors[:, 0].copy(),
            detail={"condition": "psd", "lambda_min": lo.lambda_min},
        )
    A = X.full()
    d = np.diag(A)
    dead = d <= tol * s
    if dead.any():
        for i in np.flatnonzero(dead):
            if np.abs(A[i]).max() > tol * s:
                return ConeVerdict(
                    False, -float(np.abs(A[i]).max()), witness=A[i].copy(),
                    detail={"condition": "zero_diagonal_row", "row": i},
                )
        keep = np.flatnonzero(~dead)
        if keep.size == 0:
            return ConeVerdict(True, 1.0, detail={"perron": 0.0})
        A = A[np.ix_(keep, keep)]
        d = np.diag(A)
    B = np.abs(A) - np.diag(d)
    rho, vec = perron_pair(B / d[:, None])
    margin = 1.0 - rho
    if rho > 1.0 + tol:
        return ConeVerdict(False, margin, witness=vec,
                           detail={"condition": "perron", "perron": rho})
    return ConeVerdict(True, margin, detail={"perron": rho})


def in_dual_spartrahedron(W, k: int, tol: float = DEFAULT_TOL,
                          solver_opts: SolveOptions | None = None) -> ConeVerdict:
    """Membership in the dual cone {Y + k diag(Z) - Z : Y, Z >= 0}, decided by
    a feasibility SDP.  A separating ray V (when returned) satisfies
    W . V > 0 while -V >= 0 and -(k diag(V) - V) >= 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    W = as_symmatrix(W)
    n = W.n
    w = symmat.svec(W)
    pb = ProgramBuilder()
    Y = pb.add_block("psd", n)
    Z = pb.add_block("psd", n)
    pos = 0
    for i in range(n):
        for j in range(i + 1):
            if i == j:
                pb.add_row([(Y, pos, 1.0), (Z, pos, float(k - 1))], w[pos])
            else:
                pb.add_row([(Y, pos, 1.0), (Z, pos, -1.0)], w[pos])
            pos += 1
    prog = pb.build()
    opts = solver_opts or SolveOptions()
    res = solve(prog, opts)
    if res.status == SolveStatus.PRIMAL_INFEASIBLE:
        V = symmat.smat(res.y)
        nrm = symmat.norms(V)["frobenius"]
        if nrm > 0:
            V = SymMatrix(V.full() / nrm)
        sep = W.dot(V)
        return ConeVerdict(False, -abs(sep), witness=V,
                           detail={"condition": "separating_ray", "inner": sep})
    if res.status == SolveStatus.OPTIMAL and max(res.residuals.values()) <= 10 * opts.eps:
        return ConeVerdict(True, 0.0, detail={"Y": res.primal_psd(0),
                                              "Z": res.primal_psd(1)})
    return ConeVerdict(None, 0.0, detail={"solver_status": res.status.value,
                                          "residuals": res.residuals})


def in_dual_convQ(W, k: int, tol: float = DEFAULT_TOL) -> ConeVerdict:
    """Membership in the dual of the k-sparse hull: every k x k principal
    submatrix PSD.  Exhaustive enumeration, guarded at C(n,k) <= 10^6."""
    if k < 1:
        raise ValueError("k must be >= 1")
    W = as_symmatrix(W)
    n = W.n
    if k > n:
        k = n
    count = math.comb(n, k)
    if count > ENUMERATION_GUARD:
        raise ValueError(
            f"C({n},{k}) = {count} principal submatrices exceeds the "
            f"enumeration guard {ENUMERATION_GUARD}"
        )
    s = 1.0 + symmat.spectral_norm(W)
    A = W.full()
    worst = (np.inf, None)
    batch_S: list[tuple] = []

    def flush(batch, worst):
        if not batch:
            return worst
        subs = np.array([A[np.ix_(S, S)] for S in batch])
        vals = np.linalg.eigvalsh(subs)
        mins = vals[:, 0]
        i = int(np.argmin(mins))
        if mins[i] < worst[0]:
            worst = (float(mins[i]), batch[i])
        return worst

    for S in combinations(range(n), k):
        batch_S.append(S)
        if len(batch_S) == 4096:
            worst = flush(batch_S, worst)
            batch_S = []
    worst = flush(batch_S, worst)
    margin, S = worst
    if margin < -tol * s:
        sub = principal_submatrix(W, S)
        vec = eig_sym(sub).eigenvectors[:, 0].copy()
        return ConeVerdict(False, margin, witness=(tuple(S), vec),
                           detail={"condition": "principal_minor", "S": tuple(S)})
    return ConeVerdict(True, margin, detail={"checked": count})


@dataclass(frozen=True)
class ExtremeRayCheck:
    conditions_hold: bool
    hull_excluded: bool | None  # None: not constructively checkable (k > 2)
    detail: dict = field(default_factory=dict)

    def __bool__(self):
        if not self.conditions_hold:
            return False
        return self.hull_excluded is not False


def extreme_ray_rank2_check(u1, u2, k: int, tol: float = DEFAULT_TOL) -> ExtremeRayCheck:
    """Check the four algebraic extreme-ray conditions on an orthonormal pair
    and, for k = 2, certify that u1 u1^T + u2 u2^T leaves the 2-sparse hull.

    Conditions: (i) sum u1_i u2_i (u1_i^2 + u2_i^2) = 0;
    (ii) sum u1_i^4 = sum u2_i^4 < 1/k; (iii) sum (u1_i^2 + u2_i^2)^2 = 2/k;
    (iv) u1_i^2 + u2_i^2 constant over i.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    ortho_tol = max(tol, 1e-8)
    if abs(np.linalg.norm(u1) - 1.0) > ortho_tol or abs(np.linalg.norm(u2) - 1.0) > ortho_tol:
        raise ValueError("u1, u2 must be unit vectors")
    if abs(float(u1 @ u2)) > ortho_tol:
        raise ValueError("u1, u2 must be orthogonal")
    q1 = u1 * u1
    q2 = u2 * u2
    rows = q1 + q2
    c1 = abs(float(np.sum(u1 * u2 * rows)))
    f1 = float(np.sum(q1 * q1))
    f2 = float(np.sum(q2 * q2))
    c3 = abs(float(np.sum(rows * rows)) - 2.0 / k)
    c4 = float(rows.max() - rows.min())
    ctol = max(tol, 1e-8)
    conditions = (
        c1 <= ctol
        and abs(f1 - f2) <= ctol
        and f1 < 1.0 / k - ctol
        and c3 <= ctol
        and c4 <= ctol
    )
    detail = {"mixed_sum": c1, "fourth_moments": (f1, f2),
              "row_square_sum_gap": c3, "row_sum_spread": c4}
    if not conditions:
        return ExtremeRayCheck(False, None, detail)
    if k == 2:
        X = SymMatrix(np.outer(u1, u1) + np.outer(u2, u2))
        hull = in_convQ2(X, tol)
        detail["convQ2"] = hull.member
        return ExtremeRayCheck(True, hull.member is False, detail)
    detail["note"] = "conditions hold, hull exclusion unchecked"
    return ExtremeRayCheck(True, None, detail)


@dataclass(frozen=True)
class SzPerturbation:
    in_S0: bool | None
    in_Sz: bool | None
    condition_holds: bool
    budget_holds: bool
    detail: dict = field(default_factory=dict)


def sz_perturbation_check(x, w, eps: float, k: int,
                          tol: float = DEFAULT_TOL) -> SzPerturbation:
    """Memberships of xx^T + eps ww^T for a k-sparse unit x and dense unit w.

    condition_holds evaluates sum_{supp(x)} (1 - |w_i/x_i|)^2 > n - k;
    budget_holds evaluates the eps-level inequality
    sum_{supp(x)} (|x_i| - |w_i|)^2 / (x_i^2 + eps w_i^2) >= n - k,
    which is what actually admits this eps.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    n = x.size
    if w.size != n:
        raise ValueError("x and w must share a dimension")
    if not 2 * k < n:
        raise ValueError("requires 2k < n")
    if abs(np.linalg.norm(x) - 1.0) > 1e-8 or abs(np.linalg.norm(w) - 1.0) > 1e-8:
        raise ValueError("x and w must be unit vectors")
    supp = np.flatnonzero(np.abs(x) > 1e-12)
    if supp.size != k:
        raise ValueError(f"x must have exactly k = {k} nonzeros, found {supp.size}")
    if np.any(w == 0.0):
        raise ValueError("w must be dense (no zero coordinate)")
    nz = x[supp]
    if float(np.ptp(nz)) <= 1e-12:
        raise ValueError("nonzeros of x must not be all identical")
    if eps < 0:
        raise ValueError("eps must be nonnegative")

    cond = float(np.sum((1.0 - np.abs(w[supp] / nz)) ** 2))
    budget = float(np.sum((np.abs(nz) - np.abs(w[supp])) ** 2 /
                          (nz**2 + eps * w[supp] ** 2)))
    X = SymMatrix(np.outer(x, x) + eps * np.outer(w, w))
    v0 = in_spartrahedron(X, k, tol)
    vz = in_Sz(X, k, tol)
    return SzPerturbation(
        in_S0=v0.member,
        in_Sz=vz.member,
        condition_holds=cond > n - k,
        budget_holds=budget >= n - k,
        detail={"condition_value": cond, "budget_value": budget, "n_minus_k": n - k},
    )
