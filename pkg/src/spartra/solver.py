"""First-order conic solver: operator splitting on the homogeneous self-dual embedding.

The iteration is the classic three-step splitting
    u~    = (I + Q)^{-1} (u + v)
    u^+   = proj_C(alpha*u~ + (1-alpha)*u - v)
    v^+   = v - (alpha*u~ + (1-alpha)*u) + u^+
with Q the skew matrix [[0, -A^T, c], [A, 0, -b], [-c^T, b^T, 0]] and
C = K x R^m x R_+.  The linear solve reduces to one factorization of
[[I, -A^T], [A, I]] (held for the whole run) plus two dot products for the
tau component.  Everything is synchronous and deterministic: same program,
same options, bit-identical iterates.

Infeasibility is only ever declared from an improving-ray certificate;
stalling returns MaxIter with the residuals reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .conic import Block, ConicProgram, ProgramError
from .symmat import SymMatrix, smat

_SQRT2 = math.sqrt(2.0)


class SolveStatus(str, Enum):
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    PRIMAL_INFEASIBLE = "PrimalInfeasibleCert"
    DUAL_INFEASIBLE = "DualInfeasibleCert"


@dataclass(frozen=True)
class SolveOptions:
    eps: float = 1e-7
    max_iter: int = 50000
    scaling: bool = True
    alpha: float = 1.5  # over-relaxation weight
    check_every: int = 25
    ruiz_iters: int = 10

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError("over-relaxation weight must lie in (0, 2)")
        if self.eps <= 0 or self.max_iter < 1:
            raise ValueError("eps must be positive and max_iter >= 1")


@dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    x: np.ndarray  # primal block values (certificate ray when dual infeasible)
    y: np.ndarray  # equality multipliers (certificate ray when primal infeasible)
    s: np.ndarray  # cone dual slacks
    value: float
    dual_value: float
    residuals: dict
    iterations: int
    blocks: tuple = field(repr=False, default=())
    _starts: np.ndarray = field(repr=False, default=None)

    def primal_block(self, i: int) -> np.ndarray:
        return self.x[self._starts[i] : self._starts[i + 1]]

    def dual_block(self, i: int) -> np.ndarray:
        return self.s[self._starts[i] : self._starts[i + 1]]

    def primal_psd(self, i: int) -> SymMatrix:
        if self.blocks[i].kind != "psd":
            raise ValueError(f"block {i} is {self.blocks[i].kind}, not psd")
        return smat(self.primal_block(i))

    def dual_psd(self, i: int) -> SymMatrix:
        if self.blocks[i].kind != "psd":
            raise ValueError(f"block {i} is {self.blocks[i].kind}, not psd")
        return smat(self.dual_block(i))


# ---------------------------------------------------------------------------
# cone projections


def _proj_soc(w: np.ndarray) -> np.ndarray:
    t = w[0]
    z = w[1:]
    nz = float(np.linalg.norm(z))
    if t >= nz:
        return w
    if t <= -nz:
        return np.zeros_like(w)
    a = 0.5 * (t + nz)
    out = np.empty_like(w)
    out[0] = a
    out[1:] = (a / nz) * z
    return out


class _PsdMeta:
    """Precomputed packing indices for one PSD block."""

    __slots__ = ("n", "rows", "cols", "off")

    def __init__(self, n: int):
        self.n = n
        self.rows, self.cols = np.tril_indices(n)
        self.off = self.rows != self.cols


def _packed_to_full(w: np.ndarray, meta: _PsdMeta) -> np.ndarray:
    v = w.copy()
    v[meta.off] /= _SQRT2
    M = np.zeros((meta.n, meta.n))
    M[meta.rows, meta.cols] = v
    M[meta.cols, meta.rows] = v
    return M

def _full_to_packed(M: np.ndarray, meta: _PsdMeta) -> np.ndarray:
    w = M[meta.rows, meta.cols].copy()
    w[meta.off] *= _SQRT2
    return w


def _proj_psd_packed(w: np.ndarray, meta: _PsdMeta) -> np.ndarray:
    M = _packed_to_full(w, meta)
    vals, V = np.linalg.eigh(M)
    if vals[0] >= 0.0:
        return w
    np.clip(vals, 0.0, None, out=vals)
    P = (V * vals) @ V.T
    return _full_to_packed(P, meta)


def _block_meta(blocks):
    metas = []
    pos = 0
    for b in blocks:
        size = b.size
        extra = _PsdMeta(b.dim) if b.kind == "psd" else None
        metas.append((b.kind, pos, pos + size, extra))
        pos += size
    return metas, pos


def _project_cone(x: np.ndarray, metas, dual: bool = False) -> np.ndarray:
    """Project onto K (or K* when dual=True), blockwise, in place-safe copy."""
    out = x.copy()
    for kind, lo, hi, extra in metas:
        if kind == "zero":
            if dual:
                continue  # dual of {0} is everything
            out[lo:hi] = 0.0
        elif kind == "free":
            if dual:
                out[lo:hi] = 0.0  # dual of R^d is {0}
        elif kind == "nonneg":
            np.clip(out[lo:hi], 0.0, None, out=out[lo:hi])
        elif kind in ("soc", "rsoc"):
            seg = out[lo:hi]
            if kind == "rsoc":
                seg = _rotate_pair(seg.copy())
            seg = _proj_soc(seg)
            if kind == "rsoc":
                seg = _rotate_pair(seg)
            out[lo:hi] = seg
        else:  # psd
            out[lo:hi] = _proj_psd_packed(out[lo:hi], extra)
    return out


def _rotate_pair(seg: np.ndarray) -> np.ndarray:
    """Self-inverse change of basis between rsoc (a,b,z) and soc (t,u,z)."""
    a, b = seg[0], seg[1]
    seg[0] = (a + b) / _SQRT2
    seg[1] = (a - b) / _SQRT2
    return seg


def dist_to_cone(x: np.ndarray, blocks, dual: bool = False) -> float:
    metas, size = _block_meta(blocks)
    if x.shape != (size,):
        raise ValueError("vector length does not match block layout")
    return float(np.linalg.norm(x - _project_cone(x, metas, dual=dual)))


# ---------------------------------------------------------------------------
# scaling


def _ruiz(A: sp.csr_matrix, blocks, iters: int):
    """Diagonal equilibration; column scales are uniform inside each cone block."""
    m, n = A.shape
    d = np.ones(m)
    e = np.ones(n)
    metas, _ = _block_meta(blocks)
    work = A.copy()
    for _ in range(iters):
        absA = abs(work)
        row_max = np.asarray(absA.max(axis=1).todense()).ravel() if m else np.zeros(0)
        col_max = np.asarray(absA.max(axis=0).todense()).ravel()
        blk_col = np.ones(n)
        for kind, lo, hi, _extra in metas:
            mx = col_max[lo:hi].max() if hi > lo else 0.0
            blk_col[lo:hi] = mx
        dr = 1.0 / np.sqrt(np.where(row_max > 0, row_max, 1.0))
        de = 1.0 / np.sqrt(np.where(blk_col > 0, blk_col, 1.0))
        work = sp.diags(dr) @ work @ sp.diags(de)
        d *= dr
        e *= de
    return d, e


# ---------------------------------------------------------------------------
# main solve


def _internal_blocks(blocks):
    """RSOC blocks are rotated to SOC before iterating."""
    rotated = []
    internal = []
    pos = 0
    for b in blocks:
        if b.kind == "rsoc":
            internal.append(Block("soc", b.dim))
            rotated.append(pos)
        else:
            internal.append(b)
        pos += b.size
    return tuple(internal), rotated


def _rotation_matrix(n_vars: int, rotated_starts) -> sp.csr_matrix | None:
    if not rotated_starts:
        return None
    R = sp.lil_matrix(sp.eye(n_vars))
    r = 1.0 / _SQRT2
    for s in rotated_starts:
        R[s, s] = r
        R[s, s + 1] = r
        R[s + 1, s] = r
        R[s + 1, s + 1] = -r
    return R.tocsr()


def solve(prog: ConicProgram, opts: SolveOptions | None = None, **overrides) -> SolveResult:
    """Run the splitting iteration until optimality, a certificate, or max_iter."""
    if opts is None:
        opts = SolveOptions()
    if overrides:
        opts = replace(opts, **overrides)

    A_user = prog.A_csr()
    c_user = prog.objective.copy()
    b_user = prog.rhs.copy()
    m, N = A_user.shape

    int_blocks, rotated = _internal_blocks(prog.blocks)
    R = _rotation_matrix(N, rotated)
    A_int = (A_user @ R) if R is not None else A_user
    c_int = (R @ c_user) if R is not None else c_user

    if opts.scaling and m > 0:
        D, E = _ruiz(A_int.tocsr(), int_blocks, opts.ruiz_iters)
    else:
        D, E = np.ones(m), np.ones(N)
    A_hat = sp.diags(D) @ A_int @ sp.diags(E)
    c_bar = E * c_int
    b_bar = D * b_user
    rho = max(1.0, float(np.linalg.norm(c_bar)))
    sig = max(1.0, float(np.linalg.norm(b_bar)))
    c_hat = c_bar / rho
    b_hat = b_bar / sig

    A_hat = A_hat.tocsr()
    h = np.concatenate([c_hat, -b_hat])
    K = sp.bmat(
        [[sp.eye(N), -A_hat.T], [A_hat, sp.eye(m) if m else None]], format="csc"
    ) if m else sp.eye(N, format="csc")
    lu = spla.splu(K)
    g = lu.solve(h)
    denom = 1.0 + float(h @ g)

    metas, _ = _block_meta(int_blocks)
    n_tot = N + m
    u = np.zeros(n_tot + 1)
    v = np.zeros(n_tot + 1)
    u[-1] = 1.0
    v[-1] = 1.0

    nb = float(np.linalg.norm(b_user))
    nc = float(np.linalg.norm(c_user))
    AT_user = A_user.T.tocsr()

    def unscale(xs, ys, ss):
        x_r = sig * (E * xs)
        s_r = rho * (ss / E)
        x_u = R @ x_r if R is not None else x_r
        s_u = R @ s_r if R is not None else s_r
        y_u = rho * (D * ys) if m else ys
        return x_u, y_u, s_u

    def residuals_of(x_u, y_u, s_u):
        pres = float(np.linalg.norm(A_user @ x_u - b_user)) / (1.0 + nb) if m else 0.0
        dres = float(np.linalg.norm(c_user - AT_user @ y_u - s_u)) / (1.0 + nc)
        pobj = float(c_user @ x_u)
        dobj = float(b_user @ y_u) if m else 0.0
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        return pres, dres, gap, pobj, dobj

    best = None  # last usable (x, y, s, residuals, pobj, dobj)
    alpha = opts.alpha
    it = 0
    while it < opts.max_iter:
        it += 1
        mu = u + v
        p = lu.solve(mu[:-1])
        tau_t = (mu[-1] + float(h @ p)) / denom
        # u~ = (z~, tau~) with z~ = p - tau~ * g
        t_vec = np.empty(n_tot + 1)
        t_vec[:-1] = p - tau_t * g
        t_vec[-1] = tau_t
        if alpha != 1.0:
            t_vec *= alpha
            t_vec += (1.0 - alpha) * u
        w = t_vec - v
        u_new = np.empty_like(w)
        u_new[:N] = _project_cone(w[:N], metas)
        u_new[N:n_tot] = w[N:n_tot]
        u_new[-1] = max(w[-1], 0.0)
        v += u_new - t_vec
        u = u_new

        if it % opts.check_every == 0 or it == opts.max_iter:
            tau = u[-1]
            scale_u = max(1.0, float(np.linalg.norm(u)))
            if tau > 1e-11 * scale_u:
                x_u, y_u, s_u = unscale(u[:N] / tau, u[N:n_tot] / tau, v[:N] / tau)
                pres, dres, gap, pobj, dobj = residuals_of(x_u, y_u, s_u)
                res = {"primal": pres, "dual": dres, "gap": gap}
                best = (x_u, y_u, s_u, res, pobj, dobj)
                if max(pres, dres, gap) <= opts.eps:
                    return SolveResult(
                        SolveStatus.OPTIMAL, x_u, y_u, s_u, pobj, dobj, res, it,
                        prog.blocks, prog._starts,
                    )
            # Certificate checks.  The residual must be small relative to the
            # improving direction b^T y (resp. -c^T x), never merely small in
            # absolute terms: on feasible problems both quantities vanish
            # together and an additive threshold would misfire.
            if m:
                y_ray = rho * (D * u[N:n_tot])
                bty = float(b_user @ y_ray)
                if bty > 1e-12 * max(1.0, float(np.linalg.norm(y_ray))) * (1.0 + nb):
                    y_cert = y_ray / bty
                    w_cert = -(AT_user @ y_cert)
                    cert_res = dist_to_cone(w_cert, prog.blocks, dual=True)
                    if cert_res * (1.0 + nb) <= opts.eps:
                        res = {"primal": float("inf"), "dual": 0.0, "gap": float("inf"),
                               "certificate": cert_res}
                        return SolveResult(
                            SolveStatus.PRIMAL_INFEASIBLE,
                            np.zeros(N), y_cert, np.zeros(N),
                            float("inf"), float("inf"), res, it,
                            prog.blocks, prog._starts,
                        )
            x_ray = sig * (E * u[:N])
            if R is not None:
                x_ray = R @ x_ray
            ctx = float(c_user @ x_ray)
            if ctx < -1e-12 * max(1.0, float(np.linalg.norm(x_ray))) * (1.0 + nc):
                x_cert = x_ray / (-ctx)
                eq_res = float(np.linalg.norm(A_user @ x_cert)) if m else 0.0
                cone_res = dist_to_cone(x_cert, prog.blocks, dual=False)
                if max(eq_res, cone_res) * (1.0 + nc) <= opts.eps:
                    res = {"primal": 0.0, "dual": float("inf"), "gap": float("inf"),
                           "certificate": max(eq_res, cone_res)}
                    return SolveResult(
                        SolveStatus.DUAL_INFEASIBLE,
                        x_cert, np.zeros(m), np.zeros(N),
                        float("-inf"), float("-inf"), res, it,
                        prog.blocks, prog._starts,
                    )

    if best is None:
        res = {"primal": float("inf"), "dual": float("inf"), "gap": float("inf")}
        return SolveResult(
            SolveStatus.MAX_ITER, np.zeros(N), np.zeros(m), np.zeros(N),
            float("nan"), float("nan"), res, it, prog.blocks, prog._starts,
        )
    x_u, y_u, s_u, res, pobj, dobj = best
    return SolveResult(
        SolveStatus.MAX_ITER, x_u, y_u, s_u, pobj, dobj, res, it,
        prog.blocks, prog._starts,
    )


# ---------------------------------------------------------------------------
# independent verification


@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    violations: tuple
    residuals: dict


def verify_solution(prog: ConicProgram, result: SolveResult, tol: float) -> VerifyReport:
    """Recompute residuals and cone memberships from scratch; flag anything > tol.

    PSD blocks are checked through the symmat eigensolver rather than the
    solver's own projections.
    """
    if result.status != SolveStatus.OPTIMAL:
        raise ValueError("verification expects an Optimal result")
    from .symmat import eig_sym

    A = prog.A_csr()
    x, y, s = result.x, result.y, result.s
    violations = []

    r_p = A @ x - prog.rhs
    pres = float(np.linalg.norm(r_p)) / (1.0 + float(np.linalg.norm(prog.rhs)))
    if pres > tol:
        worst = int(np.argmax(np.abs(r_p)))
        violations.append(f"equality row {worst}: residual {r_p[worst]:.3e}")
    r_d = prog.objective - A.T @ y - s
    dres = float(np.linalg.norm(r_d)) / (1.0 + float(np.linalg.norm(prog.objective)))
    if dres > tol:
        violations.append(f"dual residual {dres:.3e}")
    pobj = float(prog.objective @ x)
    dobj = float(prog.rhs @ y)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    if gap > tol:
        violations.append(f"duality gap {gap:.3e}")

    for i, blk in enumerate(prog.blocks):
        seg = x[prog.block_slice(i)]
        dseg = s[prog.block_slice(i)]
        scale = 1.0 + float(np.abs(seg).max(initial=0.0))
        if blk.kind == "zero":
            if np.abs(seg).max(initial=0.0) > tol * scale:
                violations.append(f"block {i} (zero): |x| = {np.abs(seg).max():.3e}")
        elif blk.kind == "nonneg":
            if seg.size and seg.min() < -tol * scale:
                violations.append(f"block {i} (nonneg): min {seg.min():.3e}")
            if dseg.size and dseg.min() < -tol * scale:
                violations.append(f"block {i} (nonneg dual): min {dseg.min():.3e}")
        elif blk.kind == "soc":
            margin = seg[0] - float(np.linalg.norm(seg[1:]))
            if margin < -tol * scale:
                violations.append(f"block {i} (soc): margin {margin:.3e}")
            dmargin = dseg[0] - float(np.linalg.norm(dseg[1:]))
            if dmargin < -tol * scale:
                violations.append(f"block {i} (soc dual): margin {dmargin:.3e}")
        elif blk.kind == "rsoc":
            a, bb, z = seg[0], seg[1], seg[2:]
            margin = min(a, bb, 2.0 * a * bb - float(z @ z))
            if margin < -tol * scale * scale:
                violations.append(f"block {i} (rsoc): margin {margin:.3e}")
        elif blk.kind == "psd":
            dec = eig_sym(smat(seg))
            lo = dec.lambda_min
            if lo < -tol * (1.0 + abs(dec.lambda_max)):
                violations.append(f"block {i} (psd): lambda_min {lo:.3e}")
            ddec = eig_sym(smat(dseg))
            if ddec.lambda_min < -tol * (1.0 + abs(ddec.lambda_max)):
                violations.append(f"block {i} (psd dual): lambda_min {ddec.lambda_min:.3e}")

    return VerifyReport(
        ok=not violations,
        violations=tuple(violations),
        residuals={"primal": pres, "dual": dres, "gap": gap},
    )
