"""Command line front end.

Subcommands: cone-check, solve, relax, oracle, heuristic, certify, gen,
bench.  Every command reads JSON files, prints JSON to stdout, and exits
nonzero only on malformed inputs or scope errors; numerical outcomes
(including solver iteration caps) are reported in the payload, not the
exit code.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import cones, heuristics, oracles
from .bench import FAMILY_METHODS, BenchSpec, emit_cdf, run_bench, write_records
from .certify import lagrange_multiplier, stability_certificate
from .conic import ConicProgram
from .instances import (
    GENERATORS,
    Instance,
    paley_conference,
    rip_matrix,
)
from .relaxations import (
    METHODS,
    SparseQcqp,
    rip_bounds,
    round_truncate,
    solve_qcqp,
    solve_scca,
    solve_slr,
    solve_spca,
    solve_sridge,
)
from .solver import SolveOptions, solve
from .symmat import SymMatrix, as_symmatrix, matrix_from_dict, matrix_to_dict

_CONE_FNS = {
    "S0": lambda X, k, tol: cones.in_spartrahedron(X, k, tol),
    "S1": lambda X, k, tol: cones.in_Sone(X, k, tol),
    "Sz": lambda X, k, tol: cones.in_Sz(X, k, tol),
    "Sbs": lambda X, k, tol: cones.in_Sbs(X, k, tol),
    "convQ2": lambda X, k, tol: cones.in_convQ2(X, tol),
    "dualS0": lambda X, k, tol: cones.in_dual_spartrahedron(X, k, tol),
    "dualConvQ": lambda X, k, tol: cones.in_dual_convQ(X, k, tol),
}


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_matrix(path) -> SymMatrix:
    """Matrix JSON: either the matrix dict schema or a nested list."""
    obj = _read_json(path)
    if isinstance(obj, dict):
        return matrix_from_dict(obj)
    return as_symmatrix(np.asarray(obj, dtype=float))


def _load_vector(path) -> np.ndarray:
    obj = _read_json(path)
    if isinstance(obj, dict):
        obj = obj["x"]
    v = np.asarray(obj, dtype=float)
    if v.ndim != 1:
        raise ValueError("candidate must be a flat list of reals")
    return v


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _np_clean(obj):
    """Recursively convert numpy scalars/arrays for json.dumps."""
    if isinstance(obj, dict):
        return {k: _np_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_np_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# problem-input loaders: accept generator Instance JSON or raw field dicts


def _as_instance(obj):
    return Instance.from_dict(obj) if isinstance(obj, dict) and "kind" in obj else None


def _spca_input(obj, k_flag):
    inst = _as_instance(obj)
    if inst is not None:
        Sigma = inst.payload["Sigma"]
        k = k_flag if k_flag else int(inst.params["k"])
    else:
        Sigma = matrix_from_dict(obj["Sigma"])
        k = k_flag if k_flag else int(obj["k"])
    return Sigma, k


def _ridge_input(obj, k_flag, alpha_flag):
    inst = _as_instance(obj)
    if inst is not None:
        A, y = inst.payload["A"], inst.payload["y"]
        k = k_flag if k_flag else int(inst.params["k"])
        alpha = alpha_flag
    else:
        A = np.asarray(obj["A"], dtype=float)
        y = np.asarray(obj["y"], dtype=float)
        k = k_flag if k_flag else int(obj["k"])
        alpha = float(obj["alpha"]) if "alpha" in obj and not alpha_flag else alpha_flag
    return A, y, alpha, k


def _rip_input(obj, k_flag):
    inst = _as_instance(obj)
    if inst is not None:
        A = np.asarray(inst.payload["A"], dtype=float)
        k = k_flag
        if not k:
            raise ValueError("rip needs --k (the matrix carries no sparsity level)")
    else:
        A = np.asarray(obj["A"], dtype=float)
        k = k_flag if k_flag else int(obj["k"])
    return A, k


def _cca_input(obj):
    inst = _as_instance(obj)
    if inst is not None:
        return (
            inst.payload["Sxx"],
            inst.payload["Syy"],
            np.asarray(inst.payload["Sxy"], dtype=float),
            int(inst.params["k1"]),
            int(inst.params["k2"]),
        )
    return (
        matrix_from_dict(obj["Sxx"]),
        matrix_from_dict(obj["Syy"]),
        np.asarray(obj["Sxy"], dtype=float),
        int(obj["k1"]),
        int(obj["k2"]),
    )


def _qcqp_input(obj) -> SparseQcqp:
    inst = _as_instance(obj)
    if inst is not None:
        if inst.kind in ("spiked_wigner", "spiked_wishart"):
            Sigma = inst.payload["Sigma"]
            eye = SymMatrix(np.eye(Sigma.n))
            return SparseQcqp(Sigma, ((eye, 1.0),), int(inst.params["k"]), "max")
        raise ValueError(
            f"no canonical sparse QCQP form for instance kind {inst.kind!r}; "
            "supply a problem dict with C/constraints/k/sense"
        )
    return SparseQcqp.from_dict(obj)


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_cone_check(args):
    X = _load_matrix(args.input)
    verdict = _CONE_FNS[args.cone](X, args.k, args.tol)
    _emit(_np_clean(verdict.to_dict()), args.out)
    return 0


def _cmd_solve(args):
    prog = ConicProgram.load_json(args.program)
    opts = SolveOptions(eps=args.eps, max_iter=args.max_iter)
    res = solve(prog, opts)
    out = {
        "status": res.status.value,
        "value": res.value,
        "dual_value": res.dual_value,
        "iterations": res.iterations,
        "residuals": _np_clean(res.residuals),
    }
    if args.out:
        out["x"] = res.x.tolist()
        out["y"] = res.y.tolist()
        out["s"] = res.s.tolist()
    _emit(_np_clean(out), args.out)
    return 0


def _solution_dict(sol, rounded):
    out = {
        "method": sol.source,
        "status": sol.status.value,
        "value": sol.value,
        "X": matrix_to_dict(sol.X),
        "dual_lambda": sol.dual_lambda.tolist(),
        "dual_Z": matrix_to_dict(sol.dual_Z) if sol.dual_Z is not None else None,
        "border": sol.border.tolist() if sol.border is not None else None,
    }
    if rounded is not None:
        out["rounded"] = {
            "x": rounded.x.tolist(),
            "value": rounded.value,
            "support": list(rounded.support),
        }
        if rounded.blocks is not None:
            u, v = rounded.blocks
            out["rounded"]["u"] = u.tolist()
            out["rounded"]["v"] = v.tolist()
    return out


def _cmd_relax(args):
    obj = _read_json(args.input)
    opts = SolveOptions(eps=args.eps, max_iter=args.max_iter)
    problem = args.problem
    if problem == "rip":
        A, k = _rip_input(obj, args.k)
        out = rip_bounds(A, k, opts, args.method)
        out["problem"] = "rip"
        out["method"] = args.method
        _emit(_np_clean(out), args.out)
        return 0
    if problem == "spca":
        Sigma, k = _spca_input(obj, args.k)
        sol = solve_spca(Sigma, k, args.method, opts)
        rounded = round_truncate(sol, "spca", Sigma=Sigma, k=k)
    elif problem == "ridge":
        A, y, alpha, k = _ridge_input(obj, args.k, args.alpha)
        if args.method != "Q":
            raise ValueError("ridge relaxation is implemented for method Q only")
        sol = solve_sridge(A, y, alpha, k, opts)
        rounded = round_truncate(sol, "ridge", A=A, y=y, alpha=alpha, k=k)
    elif problem == "slr":
        A, y, alpha, k = _ridge_input(obj, args.k, 0.0)
        if args.method != "Q":
            raise ValueError("slr relaxation is implemented for method Q only")
        sol = solve_slr(A, y, k, opts)
        rounded = round_truncate(sol, "slr", A=A, y=y, k=k)
    elif problem == "scca":
        Sxx, Syy, Sxy, k1, k2 = _cca_input(obj)
        if args.method != "Q":
            raise ValueError("scca relaxation is implemented for method Q only")
        sol = solve_scca(Sxx, Syy, Sxy, k1, k2, opts)
        rounded = round_truncate(sol, "scca", Sxx=Sxx, Syy=Syy, Sxy=Sxy, k1=k1, k2=k2)
    else:  # qcqp
        p = _qcqp_input(obj)
        sol = solve_qcqp(p, args.method, opts)
        rounded = None
    out = _solution_dict(sol, rounded)
    out["problem"] = problem
    _emit(_np_clean(out), args.out)
    return 0


def _cmd_oracle(args):
    obj = _read_json(args.input)
    problem = args.problem
    if problem == "spca":
        Sigma, k = _spca_input(obj, args.k)
        res = oracles.spca_exact(Sigma, k)
    elif problem == "ridge":
        A, y, alpha, k = _ridge_input(obj, args.k, args.alpha)
        res = oracles.ridge_exact(A, y, alpha, k)
    elif problem == "slr":
        A, y, _, k = _ridge_input(obj, args.k, 0.0)
        res = oracles.ridge_exact(A, y, 0.0, k)
    elif problem == "cca":
        Sxx, Syy, Sxy, k1, k2 = _cca_input(obj)
        res = oracles.cca_exact(Sxx, Syy, Sxy, k1, k2)
    elif problem == "rip":
        A, k = _rip_input(obj, args.k)
        out = oracles.rip_exact(A, k)
        out["problem"] = "rip"
        _emit(_np_clean(out), args.out)
        return 0
    else:  # qcqp, restricted scope
        res = oracles.qcqp_exact_restricted(_qcqp_input(obj))
    out = {
        "problem": problem,
        "value": res.value,
        "support": list(res.support),
        "x": res.x.tolist(),
        "enumerated": res.enumerated,
    }
    if res.blocks is not None:
        u, v = res.blocks
        out["u"] = u.tolist()
        out["v"] = v.tolist()
    _emit(_np_clean(out), args.out)
    return 0


def _cmd_heuristic(args):
    obj = _read_json(args.input)
    method = args.method
    if method in ("tpower", "tpca"):
        Sigma, k = _spca_input(obj, args.k)
        fn = heuristics.tpower if method == "tpower" else heuristics.tpca
        res = fn(Sigma, k)
    else:
        A, y, alpha, k = _ridge_input(obj, args.k, args.alpha)
        fn = {
            "iht": heuristics.iht,
            "htp": heuristics.htp,
            "greedy": heuristics.greedy_regression,
        }[method]
        res = fn(A, y, alpha, k)
    _emit(
        _np_clean(
            {
                "method": method,
                "value": res.value,
                "x": res.x.tolist(),
                "status": res.status,
                "iterations": res.iterations,
            }
        ),
        args.out,
    )
    return 0


def _cmd_certify(args):
    p = _qcqp_input(_read_json(args.input))
    x = _load_vector(args.x)
    lam, residual = lagrange_multiplier(p, x)
    cert = stability_certificate(p, x, lam, tol=args.tol)
    out = cert.to_dict()
    out["stationarity_residual"] = residual
    _emit(_np_clean(out), args.out)
    return 0


def _cmd_gen(args):
    params = json.loads(args.params) if args.params else {}
    kind = args.kind
    if kind == "paley":
        C = paley_conference(int(params["q"]))
        obj = {"kind": "paley", "params": params, "payload": {"C": matrix_to_dict(C)}}
    elif kind == "rip":
        A = rip_matrix(seed=args.seed, **params)
        obj = {
            "kind": "rip",
            "seed": args.seed,
            "params": params,
            "payload": {"A": A.tolist()},
        }
    else:
        inst = GENERATORS[kind](seed=args.seed, **params)
        obj = inst.to_dict()
    text = json.dumps(_np_clean(obj), sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_bench(args):
    spec = BenchSpec.load_json(args.spec)
    out_dir = args.out or spec.out
    if not out_dir:
        raise ValueError("no output directory: pass --out or set \"out\" in the spec")
    records = run_bench(spec)
    paths = write_records(records, out_dir)
    emitted = []
    for col in args.cdf or ("ratio", "value"):
        try:
            emit_cdf(records, col, out_dir)
            emitted.append(col)
        except ValueError:
            if args.cdf:
                raise
    statuses = {}
    for r in records:
        statuses[r.status] = statuses.get(r.status, 0) + 1
    _emit(
        {
            "records": len(records),
            "statuses": statuses,
            "cdf_columns": emitted,
            "out": str(out_dir),
            "files": paths,
        }
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spartra",
        description="Sparsity-constrained QCQP relaxations, certificates, "
        "and benchmarks.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cone-check", help="test cone membership of a matrix")
    p.add_argument("--cone", required=True, choices=sorted(_CONE_FNS))
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--input", required=True, help="matrix JSON (dict or nested list)")
    p.add_argument("--tol", type=float, default=cones.DEFAULT_TOL)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_cone_check)

    p = sub.add_parser("solve", help="solve a serialized conic program")
    p.add_argument("--program", required=True)
    p.add_argument("--eps", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=50000)
    p.add_argument("--out", help="also dump x, y, s")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("relax", help="solve a convex relaxation and round")
    p.add_argument("--method", default="Q", choices=METHODS)
    p.add_argument(
        "--problem",
        required=True,
        choices=("qcqp", "spca", "ridge", "slr", "scca", "rip"),
    )
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.add_argument("--k", type=int, default=0, help="override sparsity level")
    p.add_argument("--alpha", type=float, default=0.0, help="ridge weight")
    p.add_argument("--eps", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=50000)
    p.set_defaults(fn=_cmd_relax)

    p = sub.add_parser("oracle", help="exact optimum by support enumeration")
    p.add_argument(
        "--problem",
        required=True,
        choices=("qcqp", "spca", "ridge", "slr", "cca", "rip"),
    )
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("heuristic", help="fast feasible points")
    p.add_argument(
        "--method", required=True, choices=("tpower", "tpca", "iht", "htp", "greedy")
    )
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.set_defaults(fn=_cmd_heuristic)

    p = sub.add_parser("certify", help="optimality certificate for a candidate")
    p.add_argument("--input", required=True, help="problem JSON (qcqp schema)")
    p.add_argument("--x", required=True, help="candidate vector JSON")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_certify)

    p = sub.add_parser("gen", help="seeded instance generators")
    p.add_argument(
        "--kind",
        required=True,
        choices=tuple(sorted(GENERATORS)) + ("rip", "paley"),
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params", help='generator arguments as JSON, e.g. \'{"n": 50}\'')
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("bench", help="run a benchmark spec end to end")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", help="output directory (overrides spec)")
    p.add_argument(
        "--cdf",
        action="append",
        help="CDF column (repeatable; default: ratio and value where present)",
    )
    p.set_defaults(fn=_cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
