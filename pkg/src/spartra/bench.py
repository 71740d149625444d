"""Batch experiment harness: seeded instance sweeps with CDF summaries.

A BenchSpec names a problem family, a method list, an instance generator
with a parameter grid (list-valued entries are crossed), and a seed range.
run_bench produces one BenchRecord per (instance, method), carrying the
certified bound from the relaxation, the attained objective of the rounded
or heuristic point, the enumeration value when the support count is small
enough to enumerate, and the quality ratio where defined.

Determinism contract: records depend only on the spec, and the CSV writers
format numbers with round-trip repr, so re-running a spec reproduces
records.csv and every cdf_*.csv byte for byte.  Wall-clock timings are
real measurements and therefore live in a separate timings.csv that is
excluded from that contract.  Plot scripts read only the CSV next to them.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from itertools import product
from math import comb
from pathlib import Path

import numpy as np

from . import heuristics, oracles
from .cones import ENUMERATION_GUARD
from .instances import GENERATORS, rip_matrix
from .relaxations import METHODS as SDP_METHODS
from .relaxations import (
    rip_bounds,
    round_truncate,
    solve_scca,
    solve_spca,
    solve_sridge,
)
from .solver import SolveOptions, SolveStatus

FAMILY_METHODS = {
    "spca": ("Q", "Qplus", "S1", "Sbs", "tpower", "tpca"),
    "ridge": ("Q", "greedy", "iht", "htp"),
    "rip": ("Q", "Qplus", "S1", "Sbs"),
    "cca": ("Q",),
}

FAMILY_GENERATORS = {
    "spca": ("spiked_wigner", "spiked_wishart"),
    "ridge": ("regression",),
    "rip": ("rip_matrix",),
    "cca": ("cca",),
}

#: sense of the underlying optimum per family ("rip" records bound pairs)
FAMILY_SENSE = {"spca": "max", "ridge": "min", "rip": "max", "cca": "max"}

_ORACLE_GUARD = ENUMERATION_GUARD


@dataclass(frozen=True)
class BenchSpec:
    """Validated description of one benchmark sweep."""

    family: str
    methods: tuple
    generator: str
    params: dict
    seed_start: int
    seed_count: int
    solver: dict = field(default_factory=dict)
    out: "str | None" = None

    def __post_init__(self):
        if self.family not in FAMILY_METHODS:
            raise ValueError(
                f"unknown family {self.family!r}; known: {sorted(FAMILY_METHODS)}"
            )
        bad = [m for m in self.methods if m not in FAMILY_METHODS[self.family]]
        if bad:
            raise ValueError(
                f"methods {bad} not valid for family {self.family!r}; "
                f"valid: {FAMILY_METHODS[self.family]}"
            )
        if not self.methods:
            raise ValueError("method list is empty")
        if self.generator not in FAMILY_GENERATORS[self.family]:
            raise ValueError(
                f"generator {self.generator!r} not valid for family "
                f"{self.family!r}; valid: {FAMILY_GENERATORS[self.family]}"
            )
        if self.seed_count < 1:
            raise ValueError("seed range is empty")

    @classmethod
    def from_dict(cls, obj: dict) -> "BenchSpec":
        seeds = obj.get("seeds", {})
        return cls(
            family=obj["family"],
            methods=tuple(obj["methods"]),
            generator=obj["generator"],
            params=dict(obj.get("params", {})),
            seed_start=int(seeds.get("start", 0)),
            seed_count=int(seeds.get("count", 1)),
            solver=dict(obj.get("solver", {})),
            out=obj.get("out"),
        )

    @classmethod
    def load_json(cls, path) -> "BenchSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def solve_options(self) -> SolveOptions:
        return SolveOptions(**self.solver) if self.solver else SolveOptions()

    def combos(self):
        """Cross product of list-valued parameters, deterministic order."""
        keys = sorted(self.params)
        lists = [
            self.params[key] if isinstance(self.params[key], list) else [self.params[key]]
            for key in keys
        ]
        for values in product(*lists):
            yield dict(zip(keys, values))


@dataclass(frozen=True)
class BenchRecord:
    """One (instance, method) outcome.

    ``upper`` and ``lower`` are literal numeric bounds on the exact sparse
    optimum whenever present, so upper >= lower regardless of the family's
    sense.  ``value`` is the attained objective of the method's feasible
    point (equal to lower for maximization families, to upper for
    minimization).  ``oracle`` and ``ratio`` appear only when enumeration
    is tractable; the ratio is oracle/value for max families and
    value/oracle for min, so 1 means the method found the optimum.
    """

    instance: str
    method: str
    family: str
    upper: "float | None"
    lower: "float | None"
    value: "float | None"
    oracle: "float | None"
    ratio: "float | None"
    status: str
    wall_time: float


def _downgrade(status: SolveStatus) -> str:
    return "ok" if status == SolveStatus.OPTIMAL else status.value.lower()


def _spca_records(spec, combo, seed, options):
    kind = spec.generator
    inst = GENERATORS[kind](seed=seed, **combo)
    Sigma = inst.payload["Sigma"]
    k = int(combo["k"])
    n = Sigma.n
    oracle = None
    if comb(n, k) <= _ORACLE_GUARD:
        oracle = oracles.spca_exact(Sigma, k).value
    out = []
    for method in spec.methods:
        t0 = time.perf_counter()
        status = "ok"
        upper = lower = value = ratio = None
        try:
            if method in SDP_METHODS:
                sol = solve_spca(Sigma, k, method, options)
                status = _downgrade(sol.status)
                upper = float(sol.value)
                value = float(round_truncate(sol, "spca", Sigma=Sigma, k=k).value)
            elif method == "tpower":
                value = float(heuristics.tpower(Sigma, k).value)
            else:
                value = float(heuristics.tpca(Sigma, k).value)
            lower = value
            if oracle is not None and value:
                ratio = oracle / value
        except Exception:
            status = "error"
        out.append((method, upper, lower, value, oracle, ratio, status, t0))
    return out


def _ridge_records(spec, combo, seed, options):
    gen_args = {key: combo[key] for key in ("m", "n", "k", "sigma")}
    inst = GENERATORS["regression"](seed=seed, **gen_args)
    A, y = inst.payload["A"], inst.payload["y"]
    k = int(combo["k"])
    alpha = float(combo.get("alpha", 0.0))
    n = A.shape[1]
    oracle = None
    if comb(n, k) <= _ORACLE_GUARD:
        oracle = oracles.ridge_exact(A, y, alpha, k).value
    out = []
    for method in spec.methods:
        t0 = time.perf_counter()
        status = "ok"
        upper = lower = value = ratio = None
        try:
            if method == "Q":
                sol = solve_sridge(A, y, alpha, k, options)
                status = _downgrade(sol.status)
                lower = float(sol.value)
                value = float(
                    round_truncate(sol, "ridge", A=A, y=y, alpha=alpha, k=k).value
                )
            else:
                fn = {
                    "greedy": heuristics.greedy_regression,
                    "iht": heuristics.iht,
                    "htp": heuristics.htp,
                }[method]
                value = float(fn(A, y, alpha, k).value)
            upper = value
            if oracle is not None and oracle:
                ratio = value / oracle
        except Exception:
            status = "error"
        out.append((method, upper, lower, value, oracle, ratio, status, t0))
    return out


def _rip_records(spec, combo, seed, options):
    gen_args = {key: combo[key] for key in ("m", "n", "dist")}
    A = rip_matrix(seed=seed, **gen_args)
    k = int(combo["k"])
    n = A.shape[1]
    oracle = None
    if comb(n, k) <= _ORACLE_GUARD:
        ex = oracles.rip_exact(A, k)
        oracle = max(ex["delta_plus_star"], ex["delta_minus_star"])
    out = []
    for method in spec.methods:
        t0 = time.perf_counter()
        status = "ok"
        upper = lower = value = ratio = None
        try:
            bounds = rip_bounds(A, k, options, method)
            if (
                bounds["status_plus"] != SolveStatus.OPTIMAL.value
                or bounds["status_minus"] != SolveStatus.OPTIMAL.value
            ):
                status = "maxiter"
            value = float(max(bounds["delta_plus_bar"], bounds["delta_minus_bar"]))
            upper = value
            lower = oracle
        except Exception:
            status = "error"
        out.append((method, upper, lower, value, oracle, ratio, status, t0))
    return out


def _cca_records(spec, combo, seed, options):
    inst = GENERATORS["cca"](seed=seed, **combo)
    Sxx, Syy, Sxy = inst.payload["Sxx"], inst.payload["Syy"], inst.payload["Sxy"]
    k1, k2 = int(combo["k1"]), int(combo["k2"])
    n1, n2 = Sxx.n, Syy.n
    oracle = None
    if comb(n1, k1) * comb(n2, k2) <= _ORACLE_GUARD:
        oracle = oracles.cca_exact(Sxx, Syy, Sxy, k1, k2).value
    out = []
    for method in spec.methods:
        t0 = time.perf_counter()
        status = "ok"
        upper = lower = value = ratio = None
        try:
            sol = solve_scca(Sxx, Syy, Sxy, k1, k2, options)
            status = _downgrade(sol.status)
            upper = float(sol.value)
            value = float(
                round_truncate(
                    sol, "scca", Sxx=Sxx, Syy=Syy, Sxy=Sxy, k1=k1, k2=k2
                ).value
            )
            lower = value
            if oracle is not None and value:
                ratio = oracle / value
        except Exception:
            status = "error"
        out.append((method, upper, lower, value, oracle, ratio, status, t0))
    return out


_RUNNERS = {
    "spca": _spca_records,
    "ridge": _ridge_records,
    "rip": _rip_records,
    "cca": _cca_records,
}


def _combo_label(combo: dict) -> str:
    return "_".join(f"{key}{combo[key]}" for key in sorted(combo))


def run_bench(spec: BenchSpec, progress=None) -> list:
    """Run the sweep and return records sorted by (instance id, method).

    Per-record solver failures downgrade the record's status ("maxiter",
    "error") and never abort the sweep.  ``progress`` is an optional
    callable receiving (done, total) after each instance.
    """
    options = spec.solve_options()
    runner = _RUNNERS[spec.family]
    records = []
    combos = list(spec.combos())
    total = len(combos) * spec.seed_count
    done = 0
    for combo in combos:
        label = _combo_label(combo)
        for seed in range(spec.seed_start, spec.seed_start + spec.seed_count):
            inst_id = f"{spec.generator}_{label}_s{seed}"
            for method, upper, lower, value, oracle, ratio, status, t0 in runner(
                spec, combo, seed, options
            ):
                records.append(
                    BenchRecord(
                        instance=inst_id,
                        method=method,
                        family=spec.family,
                        upper=upper,
                        lower=lower,
                        value=value,
                        oracle=oracle,
                        ratio=ratio,
                        status=status,
                        wall_time=time.perf_counter() - t0,
                    )
                )
            done += 1
            if progress is not None:
                progress(done, total)
    records.sort(key=lambda r: (r.instance, r.method))
    return records


# ---------------------------------------------------------------------------
# output writers


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


RECORD_COLUMNS = (
    "instance",
    "method",
    "family",
    "upper",
    "lower",
    "value",
    "oracle",
    "ratio",
    "status",
)


def write_records(records, out_dir) -> dict:
    """Write records.csv (deterministic) and timings.csv (not)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rec_path = out / "records.csv"
    with open(rec_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow(
                [
                    r.instance,
                    r.method,
                    r.family,
                    _fmt(r.upper),
                    _fmt(r.lower),
                    _fmt(r.value),
                    _fmt(r.oracle),
                    _fmt(r.ratio),
                    r.status,
                ]
            )
    tim_path = out / "timings.csv"
    with open(tim_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "method", "wall_time"])
        for r in records:
            w.writerow([r.instance, r.method, repr(float(r.wall_time))])
    return {"records": str(rec_path), "timings": str(tim_path)}


def empirical_cdf(values) -> list:
    """Right-continuous empirical CDF as (value, fraction <= value) steps.

    Ties collapse into a single step whose height is the tie count over n.
    """
    vals = sorted(float(v) for v in values)
    n = len(vals)
    steps = []
    for i, v in enumerate(vals):
        if i + 1 < n and vals[i + 1] == v:
            continue
        steps.append((v, (i + 1) / n))
    return steps


def emit_cdf(records, column: str, out_dir) -> dict:
    """Write cdf_<column>.csv (one CDF per method) and its plot script.

    Records missing the column are skipped; an entirely empty selection is
    an error.  The plot script is standalone: it reads only the CSV sitting
    next to it.
    """
    if column not in ("upper", "lower", "value", "oracle", "ratio"):
        raise ValueError(f"no CDF over column {column!r}")
    by_method = {}
    for r in records:
        v = getattr(r, column)
        if v is None:
            continue
        by_method.setdefault(r.method, []).append(float(v))
    if not by_method:
        raise ValueError(f"no records carry column {column!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"cdf_{column}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", column, "cdf"])
        for method in sorted(by_method):
            for v, frac in empirical_cdf(by_method[method]):
                w.writerow([method, repr(v), repr(frac)])
    plot_path = out / f"plot_{column}.py"
    plot_path.write_text(_PLOT_TEMPLATE.format(column=column))
    return {"csv": str(csv_path), "plot": str(plot_path)}


_PLOT_TEMPLATE = '''\
"""Staircase plot of cdf_{column}.csv; run from its directory."""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

series = defaultdict(list)
with open("cdf_{column}.csv") as fh:
    for row in csv.DictReader(fh):
        series[row["method"]].append((float(row["{column}"]), float(row["cdf"])))

fig, ax = plt.subplots(figsize=(6, 4))
for method in sorted(series):
    pts = sorted(series[method])
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    ax.step(xs, ys, where="post", label=method)
ax.set_xlabel("{column}")
ax.set_ylabel("empirical CDF")
ax.legend()
fig.tight_layout()
fig.savefig("cdf_{column}.png", dpi=150)
print("wrote cdf_{column}.png")
'''
