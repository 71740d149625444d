"""Conic-program builders for sparsity-constrained quadratic problems.

Each ``build_*`` function translates problem data into a ConicProgram for
the embedded solver; the matching ``solve_*`` helper runs the program and
unpacks the matrix variable, the multipliers, and the dual matrix.

Variable layout conventions (relied on by the extractors):
  * block 0 is always the main PSD matrix variable, in packed svec order;
  * the spartrahedron constraint is expressed through a second PSD block Y
    pinned to k*diag(X) - X by equality rows, so Y's dual slack is exactly
    the dual matrix Z;
  * maximization problems are negated at build time (the solver minimizes)
    and un-negated on extraction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .conic import ConicProgram, ProgramBuilder
from .cones import in_Q_rank_one
from .solver import SolveOptions, SolveResult, SolveStatus, solve
from .symmat import (
    SymMatrix,
    as_symmatrix,
    eig_sym,
    matrix_from_dict,
    matrix_to_dict,
    principal_submatrix,
    smat,
    svec,
    svec_index,
    tri_size,
)

_SQRT2 = float(np.sqrt(2.0))

#: method tags accepted by solve_qcqp and the CLI
METHODS = ("Q", "Qplus", "S1", "Sbs")


class DegenerateSolutionError(RuntimeError):
    """Rounding failed: the relaxed solution carries no usable direction."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class SparseQcqp:
    """Minimize or maximize x'Cx subject to x'A_i x = b_i and ||x||_0 <= k."""

    C: SymMatrix
    constraints: tuple
    k: int
    sense: str = "min"

    def __post_init__(self):
        C = as_symmatrix(self.C)
        object.__setattr__(self, "C", C)
        cons = []
        for A, b in self.constraints:
            A = as_symmatrix(A)
            if A.n != C.n:
                raise ValueError(
                    f"constraint order {A.n} does not match objective order {C.n}"
                )
            cons.append((A, float(b)))
        object.__setattr__(self, "constraints", tuple(cons))
        object.__setattr__(self, "k", int(self.k))
        if not 1 <= self.k <= C.n:
            raise ValueError(f"k={self.k} outside [1, {C.n}]")
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")

    @property
    def n(self) -> int:
        return self.C.n

    @property
    def m(self) -> int:
        return len(self.constraints)

    def to_dict(self) -> dict:
        return {
            "problem": "qcqp",
            "sense": self.sense,
            "k": self.k,
            "C": matrix_to_dict(self.C),
            "constraints": [
                {"A": matrix_to_dict(A), "b": b} for A, b in self.constraints
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SparseQcqp":
        cons = tuple(
            (matrix_from_dict(c["A"]), float(c["b"]))
            for c in obj.get("constraints", [])
        )
        return cls(
            matrix_from_dict(obj["C"]),
            cons,
            int(obj["k"]),
            obj.get("sense", "min"),
        )

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load_json(cls, path) -> "SparseQcqp":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class RelaxedSolution:
    """Solved relaxation: matrix variable, value, and dual data.

    For bordered forms X is the full (n+1)-order matrix and ``border``
    holds its first column below the corner (the candidate vector).
    """

    X: SymMatrix
    value: float
    dual_lambda: np.ndarray
    dual_Z: "SymMatrix | None"
    source: str
    status: SolveStatus
    border: "np.ndarray | None" = None
    residuals: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict, repr=False)

    @property
    def dual(self):
        return (self.dual_lambda, self.dual_Z)


@dataclass(frozen=True)
class DualSolution:
    """Solved multiplier-side program: lam, Z, and the PSD slack."""

    value: float
    lam: np.ndarray
    Z: SymMatrix
    slack: SymMatrix
    status: SolveStatus
    residuals: dict = field(default_factory=dict)

    @property
    def rho(self) -> float:
        if self.lam.size != 1:
            raise ValueError("rho is only defined for single-multiplier duals")
        return float(self.lam[0])


@dataclass(frozen=True)
class RoundedPoint:
    """Sparse feasible point recovered from a relaxation, with true objective."""

    x: np.ndarray
    value: float
    support: tuple
    detail: str = ""
    blocks: "tuple | None" = None  # (u, v) for two-block problems


@dataclass(frozen=True)
class RankOneReport:
    exact: bool
    x: "np.ndarray | None"
    ratio: float
    detail: str

    def __bool__(self) -> bool:
        return self.exact


# ---------------------------------------------------------------------------
# shared builder pieces


def _couple_spartra(bld: ProgramBuilder, xblk: int, order: int, k: int, coord):
    """Add a PSD block Y pinned to k*diag(X) - X over a sub-block of X.

    coord(i, j) maps sub-block entry (i, j) to the packed offset inside
    xblk.  Rows are appended in row-major lower-triangle order, so the
    multipliers of these rows form svec(Z) of the dual matrix.
    """
    yblk = bld.add_block("psd", order)
    t = 0
    for i in range(order):
        for j in range(i + 1):
            xo = coord(i, j)
            if i == j:
                bld.add_row([(xblk, xo, float(k - 1)), (yblk, t, -1.0)], 0.0)
            else:
                bld.add_row([(xblk, xo, -1.0), (yblk, t, -1.0)], 0.0)
            t += 1
    return yblk


def _add_constraint_rows(bld: ProgramBuilder, xblk: int, p: SparseQcqp) -> None:
    for A, b in p.constraints:
        v = svec(A)
        bld.add_row([(xblk, t, float(v[t])) for t in range(v.size)], b)


def _set_objective(bld: ProgramBuilder, xblk: int, C: SymMatrix, sense: str) -> None:
    v = svec(C)
    sgn = 1.0 if sense == "min" else -1.0
    for t in range(v.size):
        if v[t] != 0.0:
            bld.add_objective(xblk, t, sgn * float(v[t]))


def _abs_split(bld: ProgramBuilder, xblk: int, n: int):
    """Nonnegative P, Q with P - Q = X entrywise on the lower triangle.

    P + Q then dominates |X| entrywise, and equals it at any point where
    the split is tight (always achievable, so the projection is exact).
    Entries are at plain matrix scale, not svec scale.
    """
    N = tri_size(n)
    pb = bld.add_block("nonneg", N)
    qb = bld.add_block("nonneg", N)
    t = 0
    for i in range(n):
        for j in range(i + 1):
            scale = 1.0 if i == j else 1.0 / _SQRT2
            bld.add_row([(pb, t, 1.0), (qb, t, -1.0), (xblk, t, -scale)], 0.0)
            t += 1
    return pb, qb


def _diag_offsets(n: int) -> list:
    return [svec_index(n, i, i) for i in range(n)]


def _add_z_budget(bld: ProgramBuilder, xblk: int, zb: int, n: int, k: int) -> None:
    """sum z = k tr X and 0 <= z_i <= tr X (upper bound via nonneg slack)."""
    diag = _diag_offsets(n)
    ub = bld.add_block("nonneg", n)
    bld.add_row(
        [(zb, i, 1.0) for i in range(n)] + [(xblk, d, -float(k)) for d in diag], 0.0
    )
    for i in range(n):
        bld.add_row(
            [(zb, i, 1.0), (ub, i, 1.0)] + [(xblk, d, -1.0) for d in diag], 0.0
        )


def _add_row_norm_cones(bld: ProgramBuilder, xblk: int, zb: int, n: int) -> None:
    """||X_{i,:}||^2 <= X_ii z_i via one rotated cone per row."""
    diag = _diag_offsets(n)
    for i in range(n):
        rb = bld.add_block("rsoc", 2 + n)
        bld.add_row([(rb, 0, 1.0), (xblk, diag[i], -1.0)], 0.0)
        bld.add_row([(rb, 1, 2.0), (zb, i, -1.0)], 0.0)
        for j in range(n):
            t = svec_index(n, i, j)
            scale = 1.0 if i == j else 1.0 / _SQRT2
            bld.add_row([(rb, 2 + j, 1.0), (xblk, t, -scale)], 0.0)


def _add_row_l1_cones(
    bld: ProgramBuilder, xblk: int, zb: int, pb: int, qb: int, n: int, k: int
) -> None:
    """||X_{i,:}||_1^2 <= k X_ii z_i via P+Q envelopes of |X|."""
    diag = _diag_offsets(n)
    for i in range(n):
        lb = bld.add_block("rsoc", 3)
        bld.add_row([(lb, 0, 1.0), (xblk, diag[i], -float(k))], 0.0)
        bld.add_row([(lb, 1, 2.0), (zb, i, -1.0)], 0.0)
        coeffs = [(lb, 2, 1.0)]
        for j in range(n):
            t = svec_index(n, i, j)
            coeffs.append((pb, t, -1.0))
            coeffs.append((qb, t, -1.0))
        bld.add_row(coeffs, 0.0)


def _add_l1_trace_row(
    bld: ProgramBuilder, xblk: int, pb: int, qb: int, n: int, k: int
) -> None:
    """||X||_1 <= k tr X; off-diagonal envelopes count twice."""
    diag = _diag_offsets(n)
    sb = bld.add_block("nonneg", 1)
    coeffs = [(sb, 0, 1.0)]
    t = 0
    for i in range(n):
        for j in range(i + 1):
            mult = 1.0 if i == j else 2.0
            coeffs.append((pb, t, mult))
            coeffs.append((qb, t, mult))
            t += 1
    coeffs.extend((xblk, d, -float(k)) for d in diag)
    bld.add_row(coeffs, 0.0)


# ---------------------------------------------------------------------------
# relaxation builders


def build_Q(p: SparseQcqp) -> ConicProgram:
    """PSD relaxation with the cap k*diag(X) - X >= 0 as a coupled PSD block.

    Rows: the m data constraints first, then the coupling rows in packed
    order; the coupling multipliers are svec of the dual matrix Z.
    """
    bld = ProgramBuilder()
    n = p.n
    xb = bld.add_block("psd", n)
    _set_objective(bld, xb, p.C, p.sense)
    _add_constraint_rows(bld, xb, p)
    _couple_spartra(bld, xb, n, p.k, lambda i, j: svec_index(n, i, j))
    return bld.build()


def build_Qplus(p: SparseQcqp) -> ConicProgram:
    """build_Q tightened with the per-row z-system.

    Adds z in R^n_+ with sum z = k tr X and z_i <= tr X, a rotated cone
    per row enforcing ||X_{i,:}||^2 <= X_ii z_i, and a second rotated cone
    per row enforcing ||X_{i,:}||_1^2 <= k X_ii z_i through entrywise
    absolute-value splits.
    """
    bld = ProgramBuilder()
    n, k = p.n, p.k
    xb = bld.add_block("psd", n)
    _set_objective(bld, xb, p.C, p.sense)
    _add_constraint_rows(bld, xb, p)
    _couple_spartra(bld, xb, n, k, lambda i, j: svec_index(n, i, j))
    zb = bld.add_block("nonneg", n)
    pb, qb = _abs_split(bld, xb, n)
    _add_z_budget(bld, xb, zb, n, k)
    _add_row_norm_cones(bld, xb, zb, n)
    _add_row_l1_cones(bld, xb, zb, pb, qb, n, k)
    return bld.build()


def build_QK(p: SparseQcqp, cone: str) -> ConicProgram:
    """Competing single-cone relaxations.

    cone="S1": PSD plus the trace-scaled entrywise l1 cap.
    cone="Sbs": S1 plus the z-system with row-norm cones and the one-sided
    big-M rows X_ij <= M_ij z_i (M_ii = 1, M_ij = 1/2 off the diagonal).
    """
    if cone not in ("S1", "Sbs"):
        raise ValueError(f"cone must be 'S1' or 'Sbs', got {cone!r}")
    bld = ProgramBuilder()
    n, k = p.n, p.k
    xb = bld.add_block("psd", n)
    _set_objective(bld, xb, p.C, p.sense)
    _add_constraint_rows(bld, xb, p)
    pb, qb = _abs_split(bld, xb, n)
    _add_l1_trace_row(bld, xb, pb, qb, n, k)
    if cone == "Sbs":
        zb = bld.add_block("nonneg", n)
        _add_z_budget(bld, xb, zb, n, k)
        _add_row_norm_cones(bld, xb, zb, n)
        mb = bld.add_block("nonneg", n * n)
        for i in range(n):
            for j in range(n):
                t = svec_index(n, i, j)
                scale = 1.0 if i == j else 1.0 / _SQRT2
                M = 1.0 if i == j else 0.5
                bld.add_row(
                    [(xb, t, scale), (mb, i * n + j, 1.0), (zb, i, -M)], 0.0
                )
    return bld.build()


def build_dual_D(p: SparseQcqp) -> ConicProgram:
    """Multiplier-side program: lam free, Z PSD, and a PSD slack.

    min sense: slack = C - sum lam_i A_i - (k diag Z - Z), maximize lam.b.
    max sense: slack = sum lam_i A_i - C - (k diag Z - Z), minimize lam.b.
    """
    bld = ProgramBuilder()
    n, m, k = p.n, p.m, p.k
    lb = bld.add_block("free", m) if m else None
    zb = bld.add_block("psd", n)
    qb = bld.add_block("psd", n)
    csv = svec(p.C)
    asv = [svec(A) for A, _ in p.constraints]
    minimize = p.sense == "min"
    t = 0
    for i in range(n):
        for j in range(i + 1):
            d = float(k - 1) if i == j else -1.0
            coeffs = [(qb, t, 1.0), (zb, t, d)]
            for r in range(m):
                coeffs.append((lb, r, float(asv[r][t]) if minimize else -float(asv[r][t])))
            bld.add_row(coeffs, float(csv[t]) if minimize else -float(csv[t]))
            t += 1
    for r in range(m):
        b_r = p.constraints[r][1]
        bld.add_objective(lb, r, -b_r if minimize else b_r)
    return bld.build()


# ---------------------------------------------------------------------------
# problem-specific builders


def spca_problem(Sigma, k: int) -> SparseQcqp:
    """Principal-component instance: max x'Sx over unit k-sparse vectors."""
    Sigma = as_symmatrix(Sigma)
    return SparseQcqp(Sigma, ((SymMatrix.identity(Sigma.n), 1.0),), k, "max")


def build_spca(Sigma, k: int) -> ConicProgram:
    """max Sigma . X, tr X = 1, X in the spartrahedron cone."""
    return build_Q(spca_problem(Sigma, k))


def build_spca_dual(Sigma, k: int) -> ConicProgram:
    """min rho with rho*I - Sigma - (k diag Z - Z) PSD and Z PSD."""
    Sigma = as_symmatrix(Sigma)
    n = Sigma.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    bld = ProgramBuilder()
    rb = bld.add_block("free", 1)
    zb = bld.add_block("psd", n)
    qb = bld.add_block("psd", n)
    ssv = svec(Sigma)
    t = 0
    for i in range(n):
        for j in range(i + 1):
            if i == j:
                bld.add_row(
                    [(qb, t, 1.0), (zb, t, float(k - 1)), (rb, 0, -1.0)],
                    -float(ssv[t]),
                )
            else:
                bld.add_row([(qb, t, 1.0), (zb, t, -1.0)], -float(ssv[t]))
            t += 1
    bld.add_objective(rb, 0, 1.0)
    return bld.build()


def _ridge_objective(A, y, alpha: float) -> SymMatrix:
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = A.shape
    if y.shape != (m,):
        raise ValueError(f"y has shape {y.shape}, expected ({m},)")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    C = np.zeros((n + 1, n + 1))
    C[0, 0] = float(y @ y) / m
    C[0, 1:] = C[1:, 0] = -(A.T @ y) / m
    C[1:, 1:] = (A.T @ A) / m + alpha * np.eye(n)
    return SymMatrix(C)


def build_sridge(A, y, alpha: float, k: int) -> ConicProgram:
    """Penalized regression: bordered PSD matrix, corner pinned to one,
    spartrahedron cap on the inner block."""
    C = _ridge_objective(A, y, alpha)
    n = C.n - 1
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    bld = ProgramBuilder()
    xb = bld.add_block("psd", n + 1)
    _set_objective(bld, xb, C, "min")
    bld.add_row([(xb, 0, 1.0)], 1.0)  # corner entry = 1
    _couple_spartra(bld, xb, n, k, lambda i, j: svec_index(n + 1, i + 1, j + 1))
    return bld.build()


def _slr_objective(A, y) -> SymMatrix:
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = A.shape
    if y.shape != (m,):
        raise ValueError(f"y has shape {y.shape}, expected ({m},)")
    C = np.zeros((n + 1, n + 1))
    C[0, 0] = float(y @ y)
    C[0, 1:] = C[1:, 0] = -(A.T @ y)
    C[1:, 1:] = A.T @ A
    return SymMatrix(C)


def build_slr_homogenized(A, y, k: int) -> ConicProgram:
    """Homogenized least squares: corner pinned to one, the whole bordered
    matrix capped with sparsity k+1 (the corner itself is never zero)."""
    C = _slr_objective(A, y)
    n = C.n - 1
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    bld = ProgramBuilder()
    xb = bld.add_block("psd", n + 1)
    _set_objective(bld, xb, C, "min")
    bld.add_row([(xb, 0, 1.0)], 1.0)
    _couple_spartra(bld, xb, n + 1, k + 1, lambda i, j: svec_index(n + 1, i, j))
    return bld.build()


def build_slr_dual(A, y, k: int) -> ConicProgram:
    """max rho with C - rho*E11 - ((k+1) diag Z - Z) PSD and Z PSD."""
    C = _slr_objective(A, y)
    n1 = C.n
    bld = ProgramBuilder()
    rb = bld.add_block("free", 1)
    zb = bld.add_block("psd", n1)
    qb = bld.add_block("psd", n1)
    csv = svec(C)
    t = 0
    for i in range(n1):
        for j in range(i + 1):
            d = float(k) if i == j else -1.0  # (k+1) - 1 on the diagonal
            coeffs = [(qb, t, 1.0), (zb, t, d)]
            if t == 0:
                coeffs.append((rb, 0, 1.0))
            bld.add_row(coeffs, float(csv[t]))
            t += 1
    bld.add_objective(rb, 0, -1.0)
    return bld.build()


def build_scca(Sxx, Syy, Sxy, k1: int, k2: int) -> ConicProgram:
    """Two-block correlation relaxation.

    One PSD matrix over both variable groups, spartrahedron caps on the
    two diagonal blocks, trace-form budgets X11.Sxx <= 1 and X22.Syy <= 1;
    the off-diagonal block is constrained only through joint PSDness.
    """
    Sxx = as_symmatrix(Sxx)
    Syy = as_symmatrix(Syy)
    Sxy = np.asarray(Sxy, dtype=float)
    n1, n2 = Sxx.n, Syy.n
    if Sxy.shape != (n1, n2):
        raise ValueError(f"cross block has shape {Sxy.shape}, expected ({n1}, {n2})")
    if not (1 <= k1 <= n1 and 1 <= k2 <= n2):
        raise ValueError("sparsity levels outside their block orders")
    n = n1 + n2
    C = np.zeros((n, n))
    C[:n1, n1:] = Sxy / 2.0
    C[n1:, :n1] = Sxy.T / 2.0
    bld = ProgramBuilder()
    xb = bld.add_block("psd", n)
    _set_objective(bld, xb, SymMatrix(C), "max")
    sb = bld.add_block("nonneg", 2)
    gxx = Sxx.full()
    coeffs = [(sb, 0, 1.0)]
    for i in range(n1):
        for j in range(i + 1):
            w = float(gxx[i, j]) if i == j else _SQRT2 * float(gxx[i, j])
            coeffs.append((xb, svec_index(n, i, j), w))
    bld.add_row(coeffs, 1.0)
    gyy = Syy.full()
    coeffs = [(sb, 1, 1.0)]
    for i in range(n2):
        for j in range(i + 1):
            w = float(gyy[i, j]) if i == j else _SQRT2 * float(gyy[i, j])
            coeffs.append((xb, svec_index(n, n1 + i, n1 + j), w))
    bld.add_row(coeffs, 1.0)
    _couple_spartra(bld, xb, n1, k1, lambda i, j: svec_index(n, i, j))
    _couple_spartra(bld, xb, n2, k2, lambda i, j: svec_index(n, n1 + i, n1 + j))
    return bld.build()


# ---------------------------------------------------------------------------
# solve helpers


def _run(prog: ConicProgram, options: "SolveOptions | None") -> SolveResult:
    return solve(prog, options if options is not None else SolveOptions())


def solve_qcqp(
    p: SparseQcqp, method: str = "Q", options: "SolveOptions | None" = None
) -> RelaxedSolution:
    """Build and solve one of the four relaxations of a SparseQcqp."""
    if method == "Q":
        prog = build_Q(p)
    elif method == "Qplus":
        prog = build_Qplus(p)
    elif method in ("S1", "Sbs"):
        prog = build_QK(p, method)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    res = _run(prog, options)
    n, m = p.n, p.m
    sgn = 1.0 if p.sense == "min" else -1.0
    X = res.primal_psd(0)
    lam = sgn * res.y[:m] if m else np.zeros(0)
    Z = res.dual_psd(1) if method in ("Q", "Qplus") else None
    return RelaxedSolution(
        X=X,
        value=sgn * res.value,
        dual_lambda=lam,
        dual_Z=Z,
        source=method,
        status=res.status,
        residuals=res.residuals,
        extras={"k": p.k, "n": n, "sense": p.sense, "result": res},
    )


def solve_dual_D(
    p: SparseQcqp, options: "SolveOptions | None" = None
) -> DualSolution:
    res = _run(build_dual_D(p), options)
    m = p.m
    lam = res.primal_block(0) if m else np.zeros(0)
    zi = 1 if m else 0
    value = -res.value if p.sense == "min" else res.value
    return DualSolution(
        value=value,
        lam=np.array(lam, dtype=float),
        Z=res.primal_psd(zi),
        slack=res.primal_psd(zi + 1),
        status=res.status,
        residuals=res.residuals,
    )


def solve_spca(
    Sigma, k: int, method: str = "Q", options: "SolveOptions | None" = None
) -> RelaxedSolution:
    sol = solve_qcqp(spca_problem(Sigma, k), method, options)
    extras = dict(sol.extras)
    if sol.dual_lambda.size:
        extras["rho"] = float(sol.dual_lambda[0])
    return RelaxedSolution(
        X=sol.X,
        value=sol.value,
        dual_lambda=sol.dual_lambda,
        dual_Z=sol.dual_Z,
        source=f"spca-{method}",
        status=sol.status,
        residuals=sol.residuals,
        extras=extras,
    )


def solve_spca_dual(
    Sigma, k: int, options: "SolveOptions | None" = None
) -> DualSolution:
    res = _run(build_spca_dual(Sigma, k), options)
    return DualSolution(
        value=res.value,
        lam=np.array([res.primal_block(0)[0]], dtype=float),
        Z=res.primal_psd(1),
        slack=res.primal_psd(2),
        status=res.status,
        residuals=res.residuals,
    )


def _bordered_solution(
    res: SolveResult, n: int, k: int, source: str, extras: dict
) -> RelaxedSolution:
    Xfull = res.primal_psd(0)
    border = Xfull.full()[1:, 0].copy()
    extras = dict(extras)
    extras["rho"] = float(res.y[0])  # multiplier of the corner row
    return RelaxedSolution(
        X=Xfull,
        value=res.value,
        dual_lambda=np.array([res.y[0]], dtype=float),
        dual_Z=res.dual_psd(1),
        source=source,
        status=res.status,
        border=border,
        residuals=res.residuals,
        extras=extras,
    )


def solve_sridge(
    A, y, alpha: float, k: int, options: "SolveOptions | None" = None
) -> RelaxedSolution:
    A = np.asarray(A, dtype=float)
    res = _run(build_sridge(A, y, alpha, k), options)
    n = A.shape[1]
    return _bordered_solution(
        res, n, k, "sridge", {"k": k, "n": n, "alpha": float(alpha)}
    )


def solve_slr(
    A, y, k: int, options: "SolveOptions | None" = None
) -> RelaxedSolution:
    A = np.asarray(A, dtype=float)
    res = _run(build_slr_homogenized(A, y, k), options)
    n = A.shape[1]
    return _bordered_solution(res, n, k, "slr", {"k": k, "n": n})


def solve_slr_dual(
    A, y, k: int, options: "SolveOptions | None" = None
) -> DualSolution:
    res = _run(build_slr_dual(A, y, k), options)
    return DualSolution(
        value=-res.value,
        lam=np.array([res.primal_block(0)[0]], dtype=float),
        Z=res.primal_psd(1),
        slack=res.primal_psd(2),
        status=res.status,
        residuals=res.residuals,
    )


def solve_scca(
    Sxx, Syy, Sxy, k1: int, k2: int, options: "SolveOptions | None" = None
) -> RelaxedSolution:
    Sxx = as_symmatrix(Sxx)
    Syy = as_symmatrix(Syy)
    res = _run(build_scca(Sxx, Syy, Sxy, k1, k2), options)
    n1, n2 = Sxx.n, Syy.n
    return RelaxedSolution(
        X=res.primal_psd(0),
        value=-res.value,
        dual_lambda=-res.y[:2],
        dual_Z=None,
        source="scca",
        status=res.status,
        residuals=res.residuals,
        extras={
            "n1": n1,
            "n2": n2,
            "k1": k1,
            "k2": k2,
            "Z1": res.dual_psd(2),
            "Z2": res.dual_psd(3),
        },
    )


def rip_bounds(
    A, k: int, options: "SolveOptions | None" = None, method: str = "Q"
) -> dict:
    """Frame bounds for k-sparse vectors from two eigenvalue-style solves.

    The squared norm ||Ax||^2 over unit k-sparse x is bracketed by
    [1 - delta_minus_bar, 1 + delta_plus_bar]; both deltas come from the
    relaxation, so they enclose the best attainable constants.  ``method``
    picks which relaxation family runs the two solves.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be a 2-d array")
    G = A.T @ A
    up = solve_spca(SymMatrix(G), k, method, options)
    dn = solve_spca(SymMatrix(-G), k, method, options)
    return {
        "delta_plus_bar": up.value - 1.0,
        "delta_minus_bar": 1.0 + dn.value,
        "value_plus": up.value,
        "value_minus": dn.value,
        "status_plus": str(up.status.value),
        "status_minus": str(dn.status.value),
    }


# ---------------------------------------------------------------------------
# rounding and exactness


def _truncate_top(v: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest magnitudes; ties resolved to lower index."""
    order = np.argsort(-np.abs(v), kind="stable")
    return np.sort(order[:k])


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v


def _leading_eigvec(X: SymMatrix, tol: float) -> np.ndarray:
    dec = eig_sym(X)
    lam1 = float(dec.eigenvalues[-1])
    scale = max(1.0, float(np.abs(dec.eigenvalues).max()))
    if lam1 <= tol * scale:
        raise DegenerateSolutionError(
            "matrix variable has no positive leading eigenvalue to round"
        )
    return np.array(dec.eigenvectors[:, -1])


def _round_spca(sol: RelaxedSolution, Sigma: SymMatrix, k: int) -> RoundedPoint:
    v = _leading_eigvec(sol.X, 1e-12)
    S = _truncate_top(v, k)
    sub = principal_submatrix(Sigma, S)
    dec = eig_sym(sub)
    w = _canonical_sign(np.array(dec.eigenvectors[:, -1]))
    x = np.zeros(Sigma.n)
    x[S] = w
    return RoundedPoint(
        x=x,
        value=float(dec.eigenvalues[-1]),
        support=tuple(int(i) for i in S),
        detail="truncated leading eigenvector, refit on support",
    )


def _ridge_refit(A, y, S, alpha: float) -> np.ndarray:
    m = A.shape[0]
    As = A[:, S]
    G = As.T @ As + m * alpha * np.eye(S.size)
    rhs = As.T @ y
    try:
        return np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(G, rhs, rcond=None)[0]


def _round_ridge(
    sol: RelaxedSolution, A, y, alpha: float, k: int, scale: str
) -> RoundedPoint:
    if sol.border is None:
        raise DegenerateSolutionError("solution has no border vector to round")
    border = np.asarray(sol.border, dtype=float)
    if not np.any(np.abs(border) > 0):
        # all-zero border still yields the feasible point x = 0
        S = np.arange(min(k, border.size))
    else:
        S = _truncate_top(border, k)
    if alpha == 0.0:
        As = A[:, S]
        w = np.linalg.lstsq(As, y, rcond=None)[0]
    else:
        w = _ridge_refit(A, y, S, alpha)
    x = np.zeros(border.size)
    x[S] = w
    r = y - A @ x
    m = A.shape[0]
    if scale == "mean":
        value = float(r @ r) / m + alpha * float(x @ x)
    else:
        value = float(r @ r)
    return RoundedPoint(
        x=x,
        value=value,
        support=tuple(int(i) for i in S),
        detail="truncated border, least-squares refit on support",
    )


def _round_scca(
    sol: RelaxedSolution, Sxx, Syy, Sxy, k1: int, k2: int
) -> RoundedPoint:
    n1 = Sxx.n
    Xf = sol.X.full()
    X11 = SymMatrix(Xf[:n1, :n1])
    X22 = SymMatrix(Xf[n1:, n1:])
    u = _leading_eigvec(X11, 1e-12)
    v = _leading_eigvec(X22, 1e-12)
    S1 = _truncate_top(u, k1)
    S2 = _truncate_top(v, k2)
    uu = np.zeros(n1)
    uu[S1] = u[S1]
    vv = np.zeros(Syy.n)
    vv[S2] = v[S2]
    qu = float(uu @ (Sxx.full() @ uu))
    qv = float(vv @ (Syy.full() @ vv))
    if qu <= 0 or qv <= 0:
        raise DegenerateSolutionError("truncated block has zero quadratic budget")
    uu /= np.sqrt(qu)
    vv /= np.sqrt(qv)
    value = float(uu @ (np.asarray(Sxy, dtype=float) @ vv))
    if value < 0:
        vv = -vv
        value = -value
    return RoundedPoint(
        x=np.concatenate([uu, vv]),
        value=value,
        support=tuple(int(i) for i in np.concatenate([S1, n1 + S2])),
        detail="blockwise truncation, budgets rescaled",
        blocks=(uu, vv),
    )


def round_truncate(
    sol: RelaxedSolution,
    problem: str,
    *,
    Sigma=None,
    A=None,
    y=None,
    alpha: float = 0.0,
    k: "int | None" = None,
    Sxx=None,
    Syy=None,
    Sxy=None,
    k1: "int | None" = None,
    k2: "int | None" = None,
) -> RoundedPoint:
    """Extract a sparse feasible point from a relaxed solution.

    The returned value is always the true objective of the rounded point,
    so it is a valid primal bound for the original problem.  Problem tags:
    "spca" (needs Sigma), "ridge" (A, y, alpha), "slr" (A, y), "scca"
    (Sxx, Syy, Sxy).  Sparsity levels default to those recorded on the
    solution.
    """
    if problem == "spca":
        if Sigma is None:
            raise ValueError("spca rounding needs Sigma")
        kk = k if k is not None else sol.extras.get("k")
        if kk is None:
            raise ValueError("sparsity level unknown; pass k")
        return _round_spca(sol, as_symmatrix(Sigma), int(kk))
    if problem in ("ridge", "slr"):
        if A is None or y is None:
            raise ValueError(f"{problem} rounding needs A and y")
        A = np.asarray(A, dtype=float)
        y = np.asarray(y, dtype=float)
        kk = k if k is not None else sol.extras.get("k")
        if kk is None:
            raise ValueError("sparsity level unknown; pass k")
        if problem == "ridge":
            a = alpha if alpha else sol.extras.get("alpha", 0.0)
            return _round_ridge(sol, A, y, float(a), int(kk), "mean")
        return _round_ridge(sol, A, y, 0.0, int(kk), "sum")
    if problem == "scca":
        if Sxx is None or Syy is None or Sxy is None:
            raise ValueError("scca rounding needs Sxx, Syy, Sxy")
        kk1 = k1 if k1 is not None else sol.extras.get("k1")
        kk2 = k2 if k2 is not None else sol.extras.get("k2")
        if kk1 is None or kk2 is None:
            raise ValueError("sparsity levels unknown; pass k1 and k2")
        return _round_scca(
            sol, as_symmatrix(Sxx), as_symmatrix(Syy), Sxy, int(kk1), int(kk2)
        )
    raise ValueError(f"unknown problem tag {problem!r}")


def rank_one_exactness(X, tol: float = 1e-5, k: "int | None" = None) -> RankOneReport:
    """Decide whether X is rank one up to tol (ratio of top two eigenvalues).

    When k is given, the recovered factor must also have at most k
    nonzeros for the verdict to stand.
    """
    X = as_symmatrix(X)
    dec = eig_sym(X)
    lam = dec.eigenvalues
    lam1 = float(lam[-1])
    if lam1 <= 0.0:
        return RankOneReport(False, None, float("inf"), "no positive leading eigenvalue")
    if float(lam[0]) < -tol * max(1.0, lam1):
        return RankOneReport(
            False, None, float("inf"),
            f"not positive semidefinite within tol (min eigenvalue {float(lam[0]):.3e})",
        )
    ratio = float(max(lam[-2], 0.0) / lam1) if lam.size > 1 else 0.0
    x = _canonical_sign(np.sqrt(lam1) * np.array(dec.eigenvectors[:, -1]))
    if ratio > tol:
        return RankOneReport(False, x, ratio, f"eigenvalue ratio {ratio:.3e} above {tol:g}")
    if k is not None and not in_Q_rank_one(x, k):
        return RankOneReport(
            False, x, ratio, f"factor carries more than {k} nonzeros"
        )
    return RankOneReport(True, x, ratio, "rank one within tolerance")
