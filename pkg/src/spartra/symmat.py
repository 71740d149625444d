"""Dense symmetric-matrix kernel.

Storage keeps one triangle only, so M = M^T holds exactly by construction
and no downstream PSD test has to worry about symmetry drift.  Everything
here is pure and deterministic; eigendecompositions go through LAPACK's
tridiagonal QR path so repeated runs give identical output.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class NumericContext:
    """Base relative tolerance threaded through membership and certificate checks."""

    base_tol: float = 1e-8


DEFAULT_CONTEXT = NumericContext()

_SQRT2 = np.sqrt(2.0)


def tri_size(n: int) -> int:
    """Length of the packed lower triangle of an n x n symmetric matrix."""
    return n * (n + 1) // 2


def tri_order(length: int) -> int:
    """Inverse of tri_size; raises if length is not a triangular number."""
    n = int((np.sqrt(8 * length + 1) - 1) / 2 + 0.5)
    if tri_size(n) != length:
        raise ValueError(f"length {length} is not a triangular number")
    return n


class SymMatrix:
    """Immutable real symmetric matrix, lower triangle stored row-major."""

    __slots__ = ("n", "lower")

    def __init__(self, dense):
        """Build from a square array; input is symmetrized as (M + M^T)/2."""
        dense = np.asarray(dense, dtype=float)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {dense.shape}")
        if not np.all(np.isfinite(dense)):
            raise ValueError("matrix entries must be finite")
        n = dense.shape[0]
        sym = 0.5 * (dense + dense.T)
        lower = sym[np.tril_indices(n)].copy()
        lower.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "lower", lower)

    def __setattr__(self, name, value):
        raise AttributeError("SymMatrix is immutable")

    @classmethod
    def from_lower(cls, n: int, lower) -> "SymMatrix":
        lower = np.asarray(lower, dtype=float)
        if lower.shape != (tri_size(n),):
            raise ValueError(
                f"lower triangle of an order-{n} matrix has {tri_size(n)} entries, "
                f"got {lower.shape}"
            )
        full = np.zeros((n, n))
        full[np.tril_indices(n)] = lower
        full = full + full.T - np.diag(np.diag(full))
        return cls(full)

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, n: int) -> "SymMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def from_diag(cls, d) -> "SymMatrix":
        return cls(np.diag(np.asarray(d, dtype=float)))

    @classmethod
    def outer(cls, x) -> "SymMatrix":
        x = np.asarray(x, dtype=float)
        return cls(np.outer(x, x))

    def full(self) -> np.ndarray:
        """Dense symmetric ndarray copy."""
        n = self.n
        full = np.zeros((n, n))
        full[np.tril_indices(n)] = self.lower
        return full + full.T - np.diag(np.diag(full))

    def diag(self) -> np.ndarray:
        idx = np.cumsum(np.arange(1, self.n + 1)) - 1
        return self.lower[idx]

    def trace(self) -> float:
        return float(self.diag().sum())

    def dot(self, other: "SymMatrix") -> float:
        """Frobenius inner product A . B = tr(AB)."""
        return float(np.vdot(self.full(), as_symmatrix(other).full()))

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.lower, other.lower)

    def __hash__(self):
        return hash((self.n, self.lower.tobytes()))

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


def as_symmatrix(M) -> SymMatrix:
    """Accept SymMatrix or anything array-like and return a SymMatrix."""
    if isinstance(M, SymMatrix):
        return M
    return SymMatrix(M)


@dataclass(frozen=True)
class EigDecomp:
    """Ascending eigenvalues with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def corank(self, rel_tol: float = 1e-6) -> int:
        """Number of eigenvalues within rel_tol * max|eig| of zero."""
        scale = float(np.abs(self.eigenvalues).max()) if self.eigenvalues.size else 0.0
        if scale == 0.0:
            return int(self.eigenvalues.size)
        return int(np.sum(np.abs(self.eigenvalues) <= rel_tol * scale))


def svec(M) -> np.ndarray:
    """Pack a symmetric matrix into a vector, off-diagonals scaled by sqrt(2).

    The scaling makes the packing an isometry: dot(svec(A), svec(B)) = A . B.
    Order is the lower triangle, row-major.
    """
    M = as_symmatrix(M)
    n = M.n
    rows, cols = np.tril_indices(n)
    v = M.lower.copy()
    v[rows != cols] *= _SQRT2
    return v


def smat(v) -> SymMatrix:
    """Inverse of svec."""
    v = np.asarray(v, dtype=float)
    n = tri_order(v.shape[0])
    rows, cols = np.tril_indices(n)
    w = v.copy()
    w[rows != cols] /= _SQRT2
    full = np.zeros((n, n))
    full[rows, cols] = w
    full = full + full.T - np.diag(np.diag(full))
    return SymMatrix(full)


def svec_index(n: int, i: int, j: int) -> int:
    """Position of entry (i, j) in the packed order (row-major lower triangle)."""
    if i < j:
        i, j = j, i
    return i * (i + 1) // 2 + j


def eig_sym(M) -> EigDecomp:
    """Full symmetric eigendecomposition, eigenvalues ascending."""
    A = as_symmatrix(M).full()
    if A.shape[0] == 0:
        return EigDecomp(np.zeros(0), np.zeros((0, 0)))
    # driver='ev': tridiagonal reduction + implicit QR, deterministic
    vals, vecs = scipy.linalg.eigh(A, driver="ev", check_finite=False)
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return EigDecomp(vals, vecs)


def proj_psd(M) -> SymMatrix:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues."""
    dec = eig_sym(M)
    if dec.lambda_min >= 0.0:
        return as_symmatrix(M)
    vals = np.maximum(dec.eigenvalues, 0.0)
    V = dec.eigenvectors
    return SymMatrix((V * vals) @ V.T)


def dop(Z, k: int) -> SymMatrix:
    """The diagonal operator k*diag(Z) - Z; self-adjoint for the trace inner product."""
    if k < 1:
        raise ValueError("k must be >= 1")
    A = as_symmatrix(Z).full()
    return SymMatrix(k * np.diag(np.diag(A)) - A)


def norms(M) -> dict:
    """Entrywise l1/linf, spectral, Frobenius norms plus the trace."""
    A = as_symmatrix(M).full()
    spectral = float(np.abs(eig_sym(M).eigenvalues).max()) if A.shape[0] else 0.0
    return {
        "l1_entrywise": float(np.abs(A).sum()),
        "linf_entrywise": float(np.abs(A).max()) if A.size else 0.0,
        "spectral": spectral,
        "frobenius": float(np.linalg.norm(A)),
        "trace": float(np.trace(A)),
    }


def spectral_norm(M) -> float:
    return norms(M)["spectral"]


def principal_submatrix(M, S) -> SymMatrix:
    """Restrict to the rows and columns listed in S (0-based, nonempty)."""
    A = as_symmatrix(M).full()
    S = np.asarray(list(S), dtype=int)
    if S.size == 0:
        raise ValueError("index set must be nonempty")
    if S.min() < 0 or S.max() >= A.shape[0]:
        raise IndexError(f"index set {S.tolist()} out of range for order {A.shape[0]}")
    return SymMatrix(A[np.ix_(S, S)])


def perron_pair(M, rel_tol: float = 1e-9, max_iter: int = 100000):
    """(Perron root, direction) of an entrywise-nonnegative matrix.

    Power iteration from the deterministic all-ones direction.  A diagonal
    shift makes the iteration aperiodic so it cannot oscillate between
    eigenvalue pairs of bipartite patterns.
    """
    A = np.asarray(as_symmatrix(M).full() if isinstance(M, SymMatrix) else M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if np.any(A < 0):
        raise ValueError("matrix must be entrywise nonnegative")
    n = A.shape[0]
    if n == 0:
        return 0.0, np.zeros(0)
    x = np.full(n, 1.0 / np.sqrt(n))
    amax = float(A.max())
    if amax == 0.0:
        return 0.0, x
    shift = amax  # any positive shift gives every node a self-loop
    B = A + shift * np.eye(n)
    lam = 0.0
    for _ in range(max_iter):
        y = B @ x
        lam_new = float(x @ y)  # Rayleigh quotient, x is unit
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            return 0.0, x
        x = y / ny
        if abs(lam_new - lam) <= rel_tol * max(1.0, abs(lam_new)):
            return max(lam_new - shift, 0.0), x
        lam = lam_new
    raise ArithmeticError(
        f"power iteration did not converge in {max_iter} iterations"
    )


def spectral_radius_nonneg(M, rel_tol: float = 1e-9, max_iter: int = 100000) -> float:
    """Perron root of an entrywise-nonnegative matrix (power iteration)."""
    return perron_pair(M, rel_tol=rel_tol, max_iter=max_iter)[0]


def save_matrix_json(M, path) -> None:
    M = as_symmatrix(M)
    with open(path, "w") as fh:
        json.dump({"n": M.n, "lower": M.lower.tolist()}, fh)


def matrix_to_dict(M) -> dict:
    M = as_symmatrix(M)
    return {"n": M.n, "lower": M.lower.tolist()}


def matrix_from_dict(obj) -> SymMatrix:
    return SymMatrix.from_lower(int(obj["n"]), obj["lower"])


def load_matrix_json(path) -> SymMatrix:
    with open(path) as fh:
        obj = json.load(fh)
    return matrix_from_dict(obj)


def load_matrix_csv(path) -> SymMatrix:
    """Read a square CSV matrix; symmetrized, warns if asymmetry exceeds 1e-8."""
    with open(path, newline="") as fh:
        rows = [[float(c) for c in row] for row in csv.reader(fh) if row]
    A = np.asarray(rows, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"CSV does not hold a square matrix: shape {A.shape}")
    asym = float(np.abs(A - A.T).max()) if A.size else 0.0
    if asym > 1e-8:
        warnings.warn(
            f"CSV matrix asymmetry {asym:.3e} exceeds 1e-8; using (M + M^T)/2",
            stacklevel=2,
        )
    return SymMatrix(A)
