"""Sparsity-constrained QCQP toolkit.

Cones and memberships for the sparse quadratic feasible set, convex
relaxations with an embedded conic solver, optimality certificates,
enumeration oracles, heuristics, seeded instance generators, and a
benchmark harness.  The ``spartra`` CLI fronts the same functionality.
"""

from .bench import BenchRecord, BenchSpec, emit_cdf, run_bench, write_records
from .certify import (
    Certificate,
    CertificateScopeError,
    coherence,
    eta_constant,
    exact_region_predicate,
    lagrange_multiplier,
    rank_one_dual_certificate,
    ridge_gap_bounds,
    ridge_threshold,
    spca_ratio_bound,
    spca_shifted_bound,
    spca_threshold,
    stability_certificate,
)
from .cones import (
    ConeVerdict,
    in_convQ2,
    in_dual_convQ,
    in_dual_spartrahedron,
    in_Q_rank_one,
    in_Sbs,
    in_Sone,
    in_spartrahedron,
    in_Sz,
)
from .conic import Block, ConicProgram, ProgramBuilder
from .heuristics import (
    HeuristicConfig,
    HeuristicResult,
    greedy_regression,
    htp,
    iht,
    tpca,
    tpower,
    truncate_k,
)
from .instances import (
    Instance,
    cca_instance,
    generate,
    load_covariance,
    paley_conference,
    regression_instance,
    rip_matrix,
    spiked_wigner,
    spiked_wishart,
)
from .oracles import (
    EnumerationGuardError,
    OracleResult,
    cca_exact,
    qcqp_exact_restricted,
    ridge_exact,
    rip_exact,
    spca_exact,
)
from .relaxations import (
    RankOneReport,
    RelaxedSolution,
    RoundedPoint,
    SparseQcqp,
    rank_one_exactness,
    rip_bounds,
    round_truncate,
    solve_qcqp,
    solve_scca,
    solve_slr,
    solve_spca,
    solve_sridge,
)
from .solver import SolveOptions, SolveResult, SolveStatus, solve
from .symmat import SymMatrix, as_symmatrix, dop, eig_sym

__version__ = "0.1.0"

__all__ = [
    "BenchRecord",
    "BenchSpec",
    "Block",
    "Certificate",
    "CertificateScopeError",
    "ConeVerdict",
    "ConicProgram",
    "EnumerationGuardError",
    "HeuristicConfig",
    "HeuristicResult",
    "Instance",
    "OracleResult",
    "ProgramBuilder",
    "RankOneReport",
    "RelaxedSolution",
    "RoundedPoint",
    "SolveOptions",
    "SolveResult",
    "SolveStatus",
    "SparseQcqp",
    "SymMatrix",
    "as_symmatrix",
    "cca_exact",
    "cca_instance",
    "coherence",
    "dop",
    "eig_sym",
    "emit_cdf",
    "eta_constant",
    "exact_region_predicate",
    "generate",
    "greedy_regression",
    "htp",
    "iht",
    "in_Q_rank_one",
    "in_Sbs",
    "in_Sone",
    "in_Sz",
    "in_convQ2",
    "in_dual_convQ",
    "in_dual_spartrahedron",
    "in_spartrahedron",
    "lagrange_multiplier",
    "load_covariance",
    "paley_conference",
    "qcqp_exact_restricted",
    "rank_one_dual_certificate",
    "rank_one_exactness",
    "regression_instance",
    "ridge_exact",
    "ridge_gap_bounds",
    "ridge_threshold",
    "rip_bounds",
    "rip_exact",
    "rip_matrix",
    "round_truncate",
    "run_bench",
    "solve",
    "solve_qcqp",
    "solve_scca",
    "solve_slr",
    "solve_spca",
    "solve_sridge",
    "spca_exact",
    "spca_ratio_bound",
    "spca_shifted_bound",
    "spca_threshold",
    "spiked_wigner",
    "spiked_wishart",
    "stability_certificate",
    "tpca",
    "tpower",
    "truncate_k",
    "write_records",
]
