import numpy as np
import pytest

from spartra.symmat import SymMatrix, as_symmatrix


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def rand_sym(n: int, seed: int, scale: float = 1.0) -> SymMatrix:
    M = rng(seed).normal(size=(n, n)) * scale
    return as_symmatrix((M + M.T) / 2)


def rand_psd(n: int, seed: int, rank: "int | None" = None) -> SymMatrix:
    r = rank or n
    B = rng(seed).normal(size=(n, r))
    return as_symmatrix(B @ B.T)


def rand_unit_sparse(n: int, k: int, seed: int) -> np.ndarray:
    g = rng(seed)
    x = np.zeros(n)
    S = g.choice(n, size=k, replace=False)
    x[S] = g.normal(size=k)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        x[S[0]] = 1.0
        nrm = 1.0
    return x / nrm


@pytest.fixture
def tol():
    return 1e-8


# one line per acceptance criterion, echoed after the test summary so the
# verdicts are visible without -s
CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
