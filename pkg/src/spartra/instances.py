"""Seeded instance generators for the benchmark families.

Randomness contract: every generator is a pure function of (parameters,
seed).  Draws go through a counter-based Philox generator keyed by
(seed, stream), one stream per independent component of the instance
(support, values, noise, ...), and normal variates come from the inverse
normal CDF applied to 53-bit uniforms.  Regenerating with the same
arguments is bit-identical, and adding draws to one component never
shifts another.

Instances serialize to JSON with a small type-tag scheme so the CLI can
write them to disk and the solvers can read them back without guessing
shapes.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .symmat import SymMatrix, as_symmatrix, eig_sym, matrix_from_dict, matrix_to_dict

_U53 = float(1 << 53)


def _gen(seed: int, stream: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _uniform(seed: int, stream: int, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1), 53-bit resolution."""
    ints = _gen(seed, stream).integers(1, 1 << 53, size=size, dtype=np.uint64)
    return np.asarray(ints, dtype=float) / _U53


def _normal(seed: int, stream: int, size) -> np.ndarray:
    return ndtri(_uniform(seed, stream, size))


def _sparse_support(seed: int, stream: int, n: int, k: int) -> np.ndarray:
    """Uniformly random k-subset of range(n), sorted."""
    u = _uniform(seed, stream, n)
    return np.sort(np.argsort(u, kind="stable")[:k])


# ---------------------------------------------------------------------------
# the instance container


@dataclass(frozen=True)
class Instance:
    """A generated problem with its regeneration key and planted truth."""

    kind: str
    seed: int
    params: dict
    payload: dict
    truth: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "params": dict(self.params),
            "payload": {k: _encode(v) for k, v in self.payload.items()},
            "truth": {k: _encode(v) for k, v in self.truth.items()},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Instance":
        return cls(
            kind=obj["kind"],
            seed=int(obj["seed"]),
            params=dict(obj["params"]),
            payload={k: _decode(v) for k, v in obj["payload"].items()},
            truth={k: _decode(v) for k, v in obj.get("truth", {}).items()},
        )

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load_json(cls, path) -> "Instance":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _encode(v):
    if isinstance(v, SymMatrix):
        return {"type": "symmatrix", **matrix_to_dict(v)}
    if isinstance(v, np.ndarray):
        if v.ndim == 1:
            return {"type": "vector", "data": [float(x) for x in v]}
        if v.ndim == 2:
            return {"type": "matrix", "data": [[float(x) for x in row] for row in v]}
        raise ValueError(f"cannot serialize array of ndim {v.ndim}")
    if isinstance(v, (bool, int, float, str)):
        return v
    raise ValueError(f"cannot serialize field of type {type(v).__name__}")


def _decode(v):
    if isinstance(v, dict):
        t = v.get("type")
        if t == "symmatrix":
            return matrix_from_dict(v)
        if t == "vector":
            return np.asarray(v["data"], dtype=float)
        if t == "matrix":
            return np.asarray(v["data"], dtype=float)
        raise ValueError(f"unknown payload tag {t!r}")
    return v


# ---------------------------------------------------------------------------
# generators


def spiked_wigner(n: int, k: int, beta: float, seed: int) -> Instance:
    """Planted sparse spike plus scaled GOE noise.

    Sigma = beta * xbar xbar' + W / sqrt(n), where W has independent
    N(0, 2) diagonal and N(0, 1) off-diagonal entries, and xbar carries k
    standard normal values on a uniformly random support, normalized to
    unit length.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    supp = _sparse_support(seed, 0, n, k)
    xbar = np.zeros(n)
    xbar[supp] = _normal(seed, 1, k)
    xbar /= np.linalg.norm(xbar)
    tri = _normal(seed, 2, n * (n + 1) // 2)
    W = np.zeros((n, n))
    iu = np.triu_indices(n)
    W[iu] = tri
    W = W + W.T - np.diag(np.diag(W))
    W[np.diag_indices(n)] = np.sqrt(2.0) * np.diag(W)
    Sigma = float(beta) * np.outer(xbar, xbar) + W / np.sqrt(n)
    Sigma = (Sigma + Sigma.T) / 2.0
    return Instance(
        kind="spiked_wigner",
        seed=int(seed),
        params={"n": int(n), "k": int(k), "beta": float(beta)},
        payload={"Sigma": SymMatrix(Sigma)},
        truth={"xbar": xbar, "beta": float(beta)},
    )


def spiked_wishart(n: int, N: int, beta: float, k: int, seed: int) -> Instance:
    """Sample covariance of N draws from N(0, I + beta xbar xbar').

    The population square root has the closed form
    I + (sqrt(1 + beta) - 1) xbar xbar' for a unit spike, so sampling is
    exact.  Both the sample covariance and the population matrix are
    returned; their spectral distance shrinks at the usual sqrt(n/N) rate.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    if N < 1:
        raise ValueError("need at least one sample")
    supp = _sparse_support(seed, 0, n, k)
    xbar = np.zeros(n)
    xbar[supp] = _normal(seed, 1, k)
    xbar /= np.linalg.norm(xbar)
    Sigma_bar = np.eye(n) + float(beta) * np.outer(xbar, xbar)
    root = np.eye(n) + (np.sqrt(1.0 + float(beta)) - 1.0) * np.outer(xbar, xbar)
    G = _normal(seed, 2, (n, N))
    X = root @ G
    Sigma = (X @ X.T) / N
    Sigma = (Sigma + Sigma.T) / 2.0
    return Instance(
        kind="spiked_wishart",
        seed=int(seed),
        params={"n": int(n), "N": int(N), "beta": float(beta), "k": int(k)},
        payload={"Sigma": SymMatrix(Sigma)},
        truth={"xbar": xbar, "beta": float(beta), "Sigma_bar": SymMatrix(Sigma_bar)},
    )


def regression_instance(m: int, n: int, k: int, sigma: float, seed: int) -> Instance:
    """Gaussian design with a planted k-sparse coefficient vector.

    A and the noise are standard normal, the support values of xbar are
    standard normal, and y = A xbar + sigma * eps.  sigma = 0 gives a
    noiseless instance with y in the column span of A restricted to the
    support.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    supp = _sparse_support(seed, 0, n, k)
    xbar = np.zeros(n)
    xbar[supp] = _normal(seed, 1, k)
    A = _normal(seed, 2, (m, n))
    eps = _normal(seed, 3, m)
    y = A @ xbar + float(sigma) * eps
    return Instance(
        kind="regression",
        seed=int(seed),
        params={"m": int(m), "n": int(n), "k": int(k), "sigma": float(sigma)},
        payload={"A": A, "y": y},
        truth={"xbar": xbar, "eps": eps, "sigma": float(sigma)},
    )


RIP_DISTS = ("gaussian", "bern2", "bern3")


def rip_matrix(m: int, n: int, dist: str, seed: int) -> np.ndarray:
    """Sensing matrix with one of three entry laws.

    gaussian: N(0, 1/m).  bern2: +-1/sqrt(m) each with probability 1/2.
    bern3: +-1/sqrt(m) with probability 1/6 each, zero with probability 2/3.
    """
    if dist not in RIP_DISTS:
        raise ValueError(f"dist must be one of {RIP_DISTS}, got {dist!r}")
    root_m = np.sqrt(float(m))
    if dist == "gaussian":
        return _normal(seed, 0, (m, n)) / root_m
    u = _uniform(seed, 0, (m, n))
    if dist == "bern2":
        return np.where(u < 0.5, 1.0, -1.0) / root_m
    out = np.zeros((m, n))
    out[u < 1.0 / 6.0] = 1.0 / root_m
    out[u >= 5.0 / 6.0] = -1.0 / root_m
    return out


CCA_MODELS = ("spiked", "toeplitz")
_CCA_MAX_RETRIES = 20


def _toeplitz(n: int, r: float) -> np.ndarray:
    idx = np.arange(n)
    return float(r) ** np.abs(idx[:, None] - idx[None, :])


def _truncate_normalize(full: np.ndarray, k: int, S: np.ndarray) -> np.ndarray:
    """Keep the k largest magnitudes, then scale so vec' S vec = 1."""
    keep = np.argsort(-np.abs(full), kind="stable")[:k]
    vec = np.zeros_like(full)
    vec[keep] = full[keep]
    scale = float(vec @ S @ vec)
    if scale <= 0:
        raise ValueError("direction has nonpositive energy under the block")
    return vec / np.sqrt(scale)


def cca_instance(
    model: str,
    n1: int,
    n2: int,
    k1: int,
    k2: int,
    r1: float = 0.7,
    r2: float = 0.7,
    m_samples: int = 3000,
    seed: int = 0,
) -> Instance:
    """Two-block covariance with a planted sparse correlated pair.

    The diagonal blocks are either spiked (I + GG' with G standard normal)
    or Toeplitz (r^|i-j|); the cross block is rho * Sxx u v' Syy with
    u, v sparse directions normalized to unit energy under their blocks and
    rho uniform on (0, 1).  That normalization keeps the assembled joint
    covariance positive semidefinite in exact arithmetic; if floating-point
    assembly still leaves a negative eigenvalue, rho is redrawn a bounded
    number of times before giving up.  The payload holds the empirical
    second-moment blocks of m_samples joint draws; the population blocks
    ride along in the truth record.
    """
    if model not in CCA_MODELS:
        raise ValueError(f"model must be one of {CCA_MODELS}, got {model!r}")
    if not (1 <= k1 <= n1 and 1 <= k2 <= n2):
        raise ValueError("sparsity targets outside their block dimensions")
    if model == "spiked":
        Gx = _normal(seed, 10, (n1, n1))
        Gy = _normal(seed, 11, (n2, n2))
        Sxx = np.eye(n1) + Gx @ Gx.T
        Syy = np.eye(n2) + Gy @ Gy.T
    else:
        Sxx = _toeplitz(n1, r1)
        Syy = _toeplitz(n2, r2)
    Sxx = (Sxx + Sxx.T) / 2.0
    Syy = (Syy + Syy.T) / 2.0
    u = _truncate_normalize(_normal(seed, 1, n1), k1, Sxx)
    v = _truncate_normalize(_normal(seed, 3, n2), k2, Syy)
    rhos = _uniform(seed, 4, _CCA_MAX_RETRIES)
    n = n1 + n2
    joint = None
    retries = 0
    for t in range(_CCA_MAX_RETRIES):
        rho = float(rhos[t])
        Sxy = rho * (Sxx @ np.outer(u, v) @ Syy)
        J = np.block([[Sxx, Sxy], [Sxy.T, Syy]])
        J = (J + J.T) / 2.0
        wmin = float(eig_sym(as_symmatrix(J)).lambda_min)
        if wmin >= -1e-10 * max(1.0, float(np.abs(J).max())):
            joint = J
            break
        retries += 1
    if joint is None:
        raise RuntimeError(
            f"joint covariance stayed indefinite after {_CCA_MAX_RETRIES} draws"
        )
    dec = eig_sym(as_symmatrix(joint))
    root = (dec.eigenvectors * np.sqrt(np.maximum(dec.eigenvalues, 0.0))) @ (
        dec.eigenvectors.T
    )
    G = _normal(seed, 5, (n, m_samples))
    Z = root @ G
    emp = (Z @ Z.T) / m_samples
    emp = (emp + emp.T) / 2.0
    return Instance(
        kind="cca",
        seed=int(seed),
        params={
            "model": model,
            "n1": int(n1),
            "n2": int(n2),
            "k1": int(k1),
            "k2": int(k2),
            "r1": float(r1),
            "r2": float(r2),
            "m_samples": int(m_samples),
        },
        payload={
            "Sxx": SymMatrix(emp[:n1, :n1]),
            "Syy": SymMatrix(emp[n1:, n1:]),
            "Sxy": emp[:n1, n1:].copy(),
        },
        truth={
            "u": u,
            "v": v,
            "rho": rho,
            "pop_Sxx": SymMatrix(Sxx),
            "pop_Syy": SymMatrix(Syy),
            "pop_Sxy": rho * (Sxx @ np.outer(u, v) @ Syy),
            "retries": retries,
        },
    )


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


def paley_conference(q: int) -> SymMatrix:
    """Symmetric conference matrix of order q + 1 from quadratic residues.

    Requires q prime with q = 1 mod 4 (prime powers with a nontrivial
    field extension are not supported).  The result C has zero diagonal,
    +-1 off-diagonal, and satisfies C'C = q I; the identity is verified in
    integer arithmetic before returning floats, so a passing return is a
    proof, not an approximation.
    """
    q = int(q)
    if not _is_prime(q):
        raise ValueError(f"q={q} is not prime")
    if q % 4 != 1:
        raise ValueError(f"q={q} is not 1 mod 4")
    residues = np.zeros(q, dtype=np.int64)
    for a in range(1, q):
        residues[(a * a) % q] = 1
    chi = np.where(residues == 1, 1, -1).astype(np.int64)
    chi[0] = 0
    n = q + 1
    C = np.zeros((n, n), dtype=np.int64)
    C[0, 1:] = 1
    C[1:, 0] = 1
    diff = (np.arange(q)[:, None] - np.arange(q)[None, :]) % q
    C[1:, 1:] = chi[diff]
    gram = C.T @ C
    if not np.array_equal(gram, q * np.eye(n, dtype=np.int64)):
        raise RuntimeError(f"construction failed the C'C = {q} I check")
    if not np.array_equal(C, C.T):
        raise RuntimeError("construction failed symmetry")
    return SymMatrix(C.astype(float))


def load_covariance(path) -> SymMatrix:
    """Read a square symmetric matrix from a CSV or JSON file.

    JSON accepts either the packed lower-triangle schema used elsewhere in
    the package or a plain nested list.  The matrix is symmetrized after an
    asymmetry check (tolerance 1e-6 relative) and a warning is emitted if
    it has a clearly negative eigenvalue, since downstream consumers
    usually expect a covariance.
    """
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            obj = json.load(fh)
        if isinstance(obj, dict):
            M = matrix_from_dict(obj).full().copy()
        else:
            M = np.asarray(obj, dtype=float)
    else:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max()))
    gap = float(np.abs(M - M.T).max())
    if gap > 1e-6 * scale:
        raise ValueError(f"matrix is asymmetric: max |M - M'| = {gap:.3e}")
    S = as_symmatrix((M + M.T) / 2.0)
    if float(eig_sym(S).lambda_min) < -1e-8 * scale:
        warnings.warn(
            "loaded matrix has a negative eigenvalue; treating it as "
            "indefinite input",
            RuntimeWarning,
            stacklevel=2,
        )
    return S


#: generator registry for the CLI and the benchmark harness
GENERATORS = {
    "spiked_wigner": spiked_wigner,
    "spiked_wishart": spiked_wishart,
    "regression": regression_instance,
    "cca": cca_instance,
}


def generate(kind: str, seed: int, **params) -> Instance:
    """Dispatch to a registered generator by kind tag."""
    if kind not in GENERATORS:
        raise ValueError(f"unknown instance kind {kind!r}; known: {sorted(GENERATORS)}")
    return GENERATORS[kind](seed=seed, **params)
