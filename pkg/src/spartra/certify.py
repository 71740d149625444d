"""Exactness certificates and analytic bounds for sparse quadratic programs.

Two kinds of objects live here.  The constructive side recovers Lagrange
multipliers on a candidate support, assembles the rank-one dual matrix
Z = zeta zeta' from the stationarity residual, and checks the resulting
slack matrix Q for positive semidefiniteness, complementarity, and corank.
The analytic side evaluates closed-form sufficient conditions (perturbation
thresholds for the eigenvector and regression families), a priori ratio and
shift bounds on the relaxation value, a constructive dual point for rank-one
objectives, and regularization gap bounds built from column coherence.

Everything is plain numerics: no conic solve happens in this module, so
certificates can be checked against relaxation output rather than derived
from it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .relaxations import SparseQcqp
from .symmat import SymMatrix, as_symmatrix, dop, eig_sym, matrix_to_dict

_SQRT2 = float(np.sqrt(2.0))


class CertificateScopeError(ValueError):
    """A certificate construction was asked for outside its hypotheses."""


@dataclass(frozen=True)
class Certificate:
    """Dual pair (lambda, Z) with the slack matrix Q and its diagnostics.

    ``valid`` means the pair certifies the candidate point: complementarity
    |Q . xx'| within tolerance, Q positive semidefinite within tolerance,
    and Z itself PSD.  ``corank`` counts eigenvalues of Q below the relative
    threshold; a certified strict solution has corank exactly 1.
    """

    lam: np.ndarray
    Z: SymMatrix
    Q: SymMatrix
    complementarity: float
    min_eig_Q: float
    corank: int
    valid: bool

    def to_dict(self) -> dict:
        return {
            "lambda": [float(v) for v in self.lam],
            "Z": matrix_to_dict(self.Z),
            "Q": matrix_to_dict(self.Q),
            "complementarity": float(self.complementarity),
            "min_eig_Q": float(self.min_eig_Q),
            "corank": int(self.corank),
            "valid": bool(self.valid),
        }


# ---------------------------------------------------------------------------
# multiplier recovery and the stability construction


def lagrange_multiplier(p: SparseQcqp, x, *, feas_tol: float = 1e-8):
    """Least-squares multipliers for a feasible sparse point.

    Solves the restricted stationarity system: the columns are the constraint
    gradients (A_i x) on the support of x, the right side is (C x) on the
    support.  Returns ``(lam, residual)`` where residual is the norm of the
    unexplained gradient.  Residual 0 means x is a KKT point of the problem
    restricted to its own support.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = p.n
    if x.shape != (n,):
        raise ValueError(f"candidate has length {x.size}, expected {n}")
    S = np.flatnonzero(x)
    if S.size > p.k:
        raise ValueError(f"candidate support {S.size} exceeds k={p.k}")
    for idx, (A, b) in enumerate(p.constraints):
        gap = abs(float(x @ A.full() @ x) - b)
        if gap > feas_tol * max(1.0, abs(b)):
            raise ValueError(
                f"candidate violates constraint {idx}: residual {gap:.3e}"
            )
    if S.size == 0:
        raise ValueError("candidate is identically zero")
    rhs = (p.C.full() @ x)[S]
    m = p.m
    if m == 0:
        return np.zeros(0), float(np.linalg.norm(rhs))
    J = np.column_stack([(A.full() @ x)[S] for A, _ in p.constraints])
    lam, _, rank, _ = np.linalg.lstsq(J, rhs, rcond=None)
    if rank < m:
        warnings.warn(
            "multiplier system is rank deficient; minimum-norm solution used",
            RuntimeWarning,
            stacklevel=2,
        )
    residual = float(np.linalg.norm(J @ lam - rhs))
    return lam, residual


def stability_certificate(p: SparseQcqp, x, lam, tol: float = 1e-6) -> Certificate:
    """Build the rank-one dual certificate at a full-support candidate.

    With P = C - sum(lam_i A_i) and stationarity residual pv = P x, sets
    zeta = alpha * xinv - pv / (k alpha) with alpha = sqrt(c_x ||pv||_inf / k),
    where xinv inverts x entrywise on its support and c_x is the smallest
    support magnitude.  Z = zeta zeta' then satisfies complementarity against
    xx' by construction; whether Q = P - (k diag Z - Z) is PSD decides
    validity.  A pv that is exactly zero degenerates alpha; Z = 0 is the
    correct certificate there.

    The candidate must have exactly k nonzeros (the construction divides by
    every support entry).
    """
    x = np.asarray(x, dtype=float).ravel()
    lam = np.asarray(lam, dtype=float).ravel()
    n, k = p.n, p.k
    if x.shape != (n,):
        raise ValueError(f"candidate has length {x.size}, expected {n}")
    if lam.shape != (p.m,):
        raise ValueError(f"expected {p.m} multipliers, got {lam.size}")
    S = np.flatnonzero(x)
    if S.size != k:
        raise ValueError(
            f"candidate support has {S.size} entries; the construction "
            f"needs exactly k={k}"
        )
    # sense-normalized slack: C - sum(lam A) for min, sum(lam A) - C for max,
    # so PSD of the resulting Q certifies optimality in either direction
    P = p.C.full().copy()
    for coef, (A, _) in zip(lam, p.constraints):
        P -= coef * A.full()
    if p.sense == "max":
        P = -P
    pv = P @ x
    pinf = float(np.max(np.abs(pv)))
    if pinf == 0.0:
        Z = SymMatrix.zeros(n)
    else:
        c_x = float(np.min(np.abs(x[S])))
        alpha = float(np.sqrt(c_x * pinf / k))
        xinv = np.zeros(n)
        xinv[S] = 1.0 / x[S]
        zeta = alpha * xinv - pv / (k * alpha)
        Z = SymMatrix.outer(zeta)
    Q = as_symmatrix(P - dop(Z, k).full())
    dec = eig_sym(Q)
    qscale = float(np.max(np.abs(dec.eigenvalues))) if n else 0.0
    corank = dec.corank(tol)
    comp = abs(float(x @ Q.full() @ x))
    min_eig = float(dec.lambda_min)
    thresh = tol * max(1.0, qscale)
    z_min = float(eig_sym(Z).lambda_min)
    valid = (
        comp <= thresh
        and min_eig >= -thresh
        and z_min >= -tol * max(1.0, float(np.max(np.abs(Z.full()))))
    )
    return Certificate(
        lam=lam,
        Z=Z,
        Q=Q,
        complementarity=comp,
        min_eig_Q=min_eig,
        corank=corank,
        valid=valid,
    )


# ---------------------------------------------------------------------------
# perturbation predicates


def eta_constant(Qbar, x, xbar, tie_tol: float = 1e-6) -> float:
    """Geometry factor 1 + ||xbar||^2 <x, z2>^2 / <x, xbar>^2.

    z2 is the eigenvector at the second-smallest eigenvalue of Qbar.  When
    that eigenvalue is degenerate (within ``tie_tol`` relative to the
    spectral norm), the factor is maximized over the tied eigenvectors,
    which is the conservative side of the predicate.
    """
    Qbar = as_symmatrix(Qbar)
    x = np.asarray(x, dtype=float).ravel()
    xbar = np.asarray(xbar, dtype=float).ravel()
    inner = float(x @ xbar)
    if inner == 0.0:
        raise ValueError("candidate is orthogonal to the reference point")
    dec = eig_sym(Qbar)
    w, V = dec.eigenvalues, dec.eigenvectors
    if w.size < 2:
        raise ValueError("need order >= 2 for a second eigenvalue")
    nu2 = float(w[1])
    scale = max(1.0, float(np.max(np.abs(w))))
    tied = np.flatnonzero(np.abs(w - nu2) <= tie_tol * scale)
    tied = tied[tied >= 1]
    best = 0.0
    for j in tied:
        best = max(best, float(x @ V[:, j]) ** 2)
    return 1.0 + float(xbar @ xbar) * best / inner**2


def exact_region_predicate(
    nu2: float,
    *,
    sigma_s: float,
    opnorm_A: float,
    xbar_norm: float,
    dC_norm: float,
    c_x: float,
    x_norm: float,
    dx_norm: float,
    Qbar_norm: float,
    eta: float,
) -> bool:
    """Strict sufficient condition for the relaxation to stay rank-one exact.

    Evaluates, literally,

        nu2 > eta * ((1 + opnorm_A * xbar_norm / sigma_s)
                     * (1 + x_norm / c_x) * dC_norm
                     + Qbar_norm * dx_norm / c_x)

    where nu2 is the second-smallest eigenvalue of the unperturbed slack
    matrix, sigma_s the relevant singular value of the restricted constraint
    Jacobian, opnorm_A the norm of the multiplier-to-matrix map, dC_norm the
    objective perturbation, dx_norm the optimizer movement, and c_x the
    smallest support magnitude of the perturbed optimizer.  All quantities
    are supplied by the caller; use :func:`eta_constant` for eta.
    """
    if c_x <= 0:
        raise ValueError(f"c_x must be positive, got {c_x}")
    if sigma_s <= 0:
        raise ValueError(f"sigma_s must be positive, got {sigma_s}")
    rhs = eta * (
        (1.0 + opnorm_A * xbar_norm / sigma_s) * (1.0 + x_norm / c_x) * dC_norm
        + Qbar_norm * dx_norm / c_x
    )
    return bool(nu2 > rhs)


def spca_threshold(Sigma, xbar, beta: float) -> dict:
    """Spiked-family threshold: is the off-identity perturbation small enough.

    For a unit k-sparse direction xbar (k >= 2) and spike size beta, computes
    nu = min{(1/2) (3/2 + (3 + 4 sqrt 2)/c)^{-1}, c^2/4} with c the smallest
    support magnitude, and the spectral norm of Sigma - beta xbar xbar'
    after removing its trace component.  ``holds`` reports the strict
    comparison lhs < nu * beta, which certifies rank-one exactness of the
    eigenvalue relaxation for Sigma.
    """
    Sigma = as_symmatrix(Sigma)
    xbar = np.asarray(xbar, dtype=float).ravel()
    n = Sigma.n
    if xbar.shape != (n,):
        raise ValueError(f"direction has length {xbar.size}, expected {n}")
    nrm = float(np.linalg.norm(xbar))
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"direction must be unit norm, got {nrm:.6f}")
    S = np.flatnonzero(xbar)
    if S.size < 2:
        raise ValueError("direction must have at least two nonzeros")
    c = float(np.min(np.abs(xbar[S])))
    nu = min(0.5 / (1.5 + (3.0 + 4.0 * _SQRT2) / c), c * c / 4.0)
    D = Sigma.full() - float(beta) * np.outer(xbar, xbar)
    t = float(np.trace(D)) / n
    D -= t * np.eye(n)
    lhs = float(np.max(np.abs(eig_sym(as_symmatrix(D)).eigenvalues)))
    return {"holds": bool(lhs < nu * float(beta)), "nu": float(nu), "lhs": lhs}


def ridge_threshold(A, xbar, eps_vec) -> dict:
    """Noise threshold for exactness of the homogenized regression relaxation.

    Given the design matrix, the k-sparse planted coefficient vector, and
    the realized noise, computes

        q = (1 + ||xbar||/2) (1 + 4 (2 - sqrt 2) ||xbar|| / c)
        p = kappa (q + 2 kappa / c)
        eta = min{(sqrt(p^2 + 4 q) - p) / (2 q), c/2, (3 - 2 sqrt 2) ||xbar||}

    with c the smallest support magnitude and kappa the condition number of
    the design matrix, and reports whether ||eps|| < eta * sigma_min(A).
    """
    A = np.asarray(A, dtype=float)
    xbar = np.asarray(xbar, dtype=float).ravel()
    eps_vec = np.asarray(eps_vec, dtype=float).ravel()
    if A.ndim != 2:
        raise ValueError("design matrix must be 2-d")
    if xbar.shape != (A.shape[1],):
        raise ValueError(
            f"coefficient vector has length {xbar.size}, expected {A.shape[1]}"
        )
    S = np.flatnonzero(xbar)
    if S.size == 0:
        raise ValueError("planted coefficient vector is zero")
    sv = np.linalg.svd(A, compute_uv=False)
    smin = float(sv[-1])
    if smin <= 1e-12 * float(sv[0]):
        raise ValueError("design matrix is rank deficient: sigma_min = 0")
    kappa = float(sv[0]) / smin
    c = float(np.min(np.abs(xbar[S])))
    xn = float(np.linalg.norm(xbar))
    q = (1.0 + 0.5 * xn) * (1.0 + 4.0 * (2.0 - _SQRT2) * xn / c)
    pq = kappa * (q + 2.0 * kappa / c)
    eta = min(
        (np.sqrt(pq * pq + 4.0 * q) - pq) / (2.0 * q),
        c / 2.0,
        (3.0 - 2.0 * _SQRT2) * xn,
    )
    holds = bool(float(np.linalg.norm(eps_vec)) < eta * smin)
    return {"holds": holds, "eta": float(eta)}


# ---------------------------------------------------------------------------
# a priori value bounds


def spca_ratio_bound(Sigma, k: int) -> float:
    """Worst-case ratio of relaxed to exact value: min{k, n/k, rank}.

    Only meaningful for positive semidefinite objectives; an indefinite
    matrix raises, pointing at :func:`spca_shifted_bound` which covers it.
    """
    Sigma = as_symmatrix(Sigma)
    n = Sigma.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    w = eig_sym(Sigma).eigenvalues
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if float(w[0]) < -1e-8 * max(1.0, scale):
        raise CertificateScopeError(
            "ratio bound needs a positive semidefinite matrix; use "
            "spca_shifted_bound for indefinite objectives"
        )
    r = int(np.count_nonzero(w > 1e-6 * scale)) if scale > 0 else 0
    return float(min(k, n / k, r))


def spca_shifted_bound(Sigma, k: int, vstar: float) -> float:
    """Additive bound q vstar - (q - 1) lambda_min valid for any symmetric matrix.

    q = min{k, n/k, r} where r = n - multiplicity(lambda_min), multiplicity
    counted at relative tolerance 1e-6.  vstar is the exact sparse maximum;
    the returned value upper-bounds the relaxation value.
    """
    Sigma = as_symmatrix(Sigma)
    n = Sigma.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    w = eig_sym(Sigma).eigenvalues
    wmin = float(w[0])
    scale = max(1.0, float(np.max(np.abs(w))))
    mult = int(np.count_nonzero(w - wmin <= 1e-6 * scale))
    q = float(min(k, n / k, n - mult))
    return q * float(vstar) - (q - 1.0) * wmin


def rank_one_dual_certificate(sigma, k: int, psd_tol: float | None = None) -> dict:
    """Constructive dual point certifying rank-one objectives sigma sigma'.

    Entries must be sorted by magnitude descending with a strict gap at
    position k.  Sets rho to the sum of the k largest squared entries and
    builds Z = u u' from

        u = sqrt(rho / k) * (tau/sigma_1, ..., tau/sigma_k,
                             sigma_{k+1}/tau, ..., sigma_n/tau)

    with tau pulled just inside |sigma_k| (relative margin 1e-6; the exact
    limit point is feasible but only barely, so the margin trades a sliver
    of slack for a numerically checkable matrix).  ``feasible`` reports
    whether rho I - (k diag Z - Z) - sigma sigma' is PSD within a tolerance
    proportional to that margin.
    """
    sigma = np.asarray(sigma, dtype=float).ravel()
    n = sigma.size
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    mags = np.abs(sigma)
    if np.any(np.diff(mags) > 1e-12 * max(1.0, float(mags[0]))):
        raise ValueError("entries must be sorted by magnitude, largest first")
    if k < n and not mags[k - 1] > mags[k]:
        raise CertificateScopeError(
            f"|sigma_k| = |sigma_{{k+1}}| = {mags[k - 1]:.6g}: the "
            "construction needs a strict magnitude gap at position k"
        )
    if mags[k - 1] == 0.0:
        raise CertificateScopeError("sigma_k = 0 leaves the head undefined")
    delta = 1e-6
    tau = float(mags[k - 1]) * (1.0 - delta)
    rho = float(np.sum(sigma[:k] ** 2))
    u = np.empty(n)
    u[:k] = tau / sigma[:k]
    u[k:] = sigma[k:] / tau
    u *= np.sqrt(rho / k)
    Z = SymMatrix.outer(u)
    slack = rho * np.eye(n) - dop(Z, k).full() - np.outer(sigma, sigma)
    wmin = float(eig_sym(as_symmatrix(slack)).lambda_min)
    if psd_tol is None:
        psd_tol = 100.0 * delta * max(1.0, rho + float(mags[0]) ** 2)
    return {"Z": Z, "rho": rho, "feasible": bool(wmin >= -psd_tol)}


def ridge_gap_bounds(A, y, alpha: float, k: int, rstar0: float, xstar0) -> dict:
    """Coherence-based sandwich for the regularized regression relaxation.

    Returns ``lower`` (a certified lower bound on the relaxation value built
    from the exact unregularized error rstar0), ``alpha_bar`` (the
    regularization weight at which the bound meets the exact value), and
    ``gap_bound`` (an upper bound on exact minus relaxed at alpha_bar, using
    the exact unregularized solution xstar0):

        tau = 1 + (k - 1) mu(An),  eta = L^2 / (lmin(A'A) + m alpha)
        lower = (1 - tau eta) ||y||^2 / m + tau eta rstar0
        alpha_bar = (tau L^2 - lmin(A'A)) / m
        gap_bound = k L^2 ||xstar0||^2 / m

    with An the column-normalized design, mu its coherence, and L the
    largest column norm.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if A.ndim != 2:
        raise ValueError("design matrix must be 2-d")
    m, n = A.shape
    if y.shape != (m,):
        raise ValueError(f"response has length {y.size}, expected {m}")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    xstar0 = np.asarray(xstar0, dtype=float).ravel()
    if xstar0.shape != (n,):
        raise ValueError(f"xstar0 has length {xstar0.size}, expected {n}")
    mu = coherence(A) if n > 1 else 0.0
    L2 = float(np.max(np.sum(A * A, axis=0)))
    lmin = float(eig_sym(as_symmatrix(A.T @ A)).lambda_min)
    tau = 1.0 + (k - 1) * mu
    eta = L2 / (lmin + m * float(alpha))
    lower = (1.0 - tau * eta) * float(y @ y) / m + tau * eta * float(rstar0)
    alpha_bar = (tau * L2 - lmin) / m
    gap_bound = k * L2 * float(xstar0 @ xstar0) / m
    return {
        "lower": float(lower),
        "alpha_bar": float(alpha_bar),
        "gap_bound": float(gap_bound),
    }


def coherence(A) -> float:
    """Largest absolute inner product between distinct normalized columns."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("design matrix must be 2-d")
    nrm = np.linalg.norm(A, axis=0)
    if np.any(nrm == 0.0):
        raise ValueError(f"zero column at index {int(np.argmin(nrm))}")
    An = A / nrm
    G = np.abs(An.T @ An)
    np.fill_diagonal(G, 0.0)
    return float(np.max(G)) if A.shape[1] > 1 else 0.0
