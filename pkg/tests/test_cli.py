"""End-to-end tests of the command line interface, run in process."""
import json

import numpy as np
import pytest

from spartra.cli import main
from spartra.conic import ProgramBuilder
from spartra.instances import spiked_wigner
from spartra.symmat import SymMatrix, matrix_from_dict, matrix_to_dict

from conftest import rng


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture()
def separator_matrix(tmp_path):
    X = [
        [3.0, 0.0, 2.0, -2.0],
        [0.0, 3.0, 2.0, 2.0],
        [2.0, 2.0, 3.0, 0.0],
        [-2.0, 2.0, 0.0, 3.0],
    ]
    return write_json(tmp_path / "sep.json", X)


@pytest.fixture()
def rank_one_instance(tmp_path):
    # covariance with a dominant sparse direction: relaxation comes back
    # rank-one so relax / oracle / heuristic must all agree
    g = rng(2)
    xb = np.zeros(6)
    xb[[0, 3, 5]] = [0.8, -0.5, 0.33166247903554]
    xb /= np.linalg.norm(xb)
    Sig = 6.0 * np.outer(xb, xb) + 0.05 * np.eye(6)
    inst = spiked_wigner(6, 3, 0.0, seed=1)
    d = inst.to_dict()
    d["payload"]["Sigma"] = {"type": "symmatrix", **matrix_to_dict(SymMatrix(Sig))}
    return write_json(tmp_path / "inst.json", d)


class TestConeCheck:
    def test_separator_verdicts(self, capsys, separator_matrix, tmp_path):
        code, out, _ = run_cli(
            capsys, "cone-check", "--cone", "S0", "--k", "2",
            "--input", separator_matrix,
        )
        assert code == 0
        assert json.loads(out)["member"] is True

        outfile = tmp_path / "verdict.json"
        code, out, _ = run_cli(
            capsys, "cone-check", "--cone", "S1", "--k", "2",
            "--input", separator_matrix, "--out", str(outfile),
        )
        assert code == 0
        v = json.loads(outfile.read_text())
        assert v["member"] is False
        assert v["detail"]["condition"] == "l1"

    def test_all_cones_accept_sparse_outer(self, capsys, tmp_path):
        x = np.zeros(5)
        x[[1, 3]] = [0.6, -0.8]
        mat = write_json(tmp_path / "outer.json", np.outer(x, x).tolist())
        for cone in ("S0", "S1", "Sz", "Sbs"):
            code, out, _ = run_cli(
                capsys, "cone-check", "--cone", cone, "--k", "2", "--input", mat
            )
            assert code == 0
            assert json.loads(out)["member"] is True, cone

    def test_malformed_input_exits_nonzero(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run_cli(
            capsys, "cone-check", "--cone", "S0", "--k", "1", "--input", str(bad)
        )
        assert code == 1
        assert "error:" in err


class TestSolve:
    def test_lp_round_trip(self, capsys, tmp_path):
        b = ProgramBuilder()
        i = b.add_block("nonneg", 2)
        b.add_row([(i, 0, 1.0), (i, 1, 1.0)], 1.0)
        b.add_objective(i, 0, 1.0)
        b.add_objective(i, 1, 2.0)
        prog = b.build()
        p = tmp_path / "prog.json"
        prog.save_json(p)
        code, out, _ = run_cli(capsys, "solve", "--program", str(p))
        assert code == 0
        res = json.loads(out)
        assert res["status"] == "Optimal"
        assert res["value"] == pytest.approx(1.0, abs=1e-6)

    def test_missing_file(self, capsys):
        code, _, err = run_cli(capsys, "solve", "--program", "/nonexistent.json")
        assert code == 1
        assert "error:" in err


class TestRelaxOracleHeuristicAgree:
    def test_three_routes_one_value(self, capsys, rank_one_instance, tmp_path):
        code, out, _ = run_cli(
            capsys, "relax", "--method", "Q", "--problem", "spca",
            "--input", rank_one_instance,
        )
        assert code == 0
        relaxed = json.loads(out)
        assert relaxed["status"] == "Optimal"

        code, out, _ = run_cli(
            capsys, "oracle", "--problem", "spca", "--input", rank_one_instance
        )
        assert code == 0
        exact = json.loads(out)

        code, out, _ = run_cli(
            capsys, "heuristic", "--method", "tpower", "--input", rank_one_instance
        )
        assert code == 0
        heur = json.loads(out)

        assert relaxed["value"] == pytest.approx(exact["value"], rel=1e-5)
        assert heur["value"] == pytest.approx(exact["value"], rel=1e-5)
        assert relaxed["rounded"]["support"] == exact["support"]

    def test_rounded_written_to_file(self, capsys, rank_one_instance, tmp_path):
        outfile = tmp_path / "res.json"
        code, _, _ = run_cli(
            capsys, "relax", "--method", "Q", "--problem", "spca",
            "--input", rank_one_instance, "--out", str(outfile),
        )
        assert code == 0
        res = json.loads(outfile.read_text())
        assert set(res) >= {"method", "status", "value", "X", "rounded"}
        assert res["X"]["n"] == 6
        assert len(res["rounded"]["x"]) == 6


class TestCertify:
    def test_valid_certificate(self, capsys, rank_one_instance, tmp_path):
        code, out, _ = run_cli(
            capsys, "oracle", "--problem", "spca", "--input", rank_one_instance
        )
        exact = json.loads(out)

        prob_file = tmp_path / "prob.json"
        code, _, _ = run_cli(
            capsys, "relax", "--method", "Q", "--problem", "spca",
            "--input", rank_one_instance, "--out", str(prob_file),
        )
        # certify wants the qcqp problem JSON; build it from the instance
        inst = json.loads(open(rank_one_instance).read())
        Sig = matrix_from_dict(inst["payload"]["Sigma"])
        n = Sig.n
        prob = {
            "problem": "qcqp",
            "C": matrix_to_dict(Sig),
            "constraints": [
                {"A": matrix_to_dict(SymMatrix(np.eye(n))), "b": 1.0}
            ],
            "k": 3,
            "sense": "max",
        }
        pfile = write_json(tmp_path / "qcqp.json", prob)
        xfile = write_json(tmp_path / "x.json", {"x": exact["x"]})

        code, out, _ = run_cli(capsys, "certify", "--input", pfile, "--x", xfile)
        assert code == 0
        cert = json.loads(out)
        assert cert["valid"] is True
        assert cert["corank"] == 1


class TestGen:
    def test_deterministic_bytes(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            code, out, _ = run_cli(
                capsys, "gen", "--kind", "spiked_wigner", "--seed", "3",
                "--params", '{"n": 10, "k": 3, "beta": 5.0}', "--out", str(path),
            )
            assert code == 0
            assert "wrote" in out
        assert a.read_bytes() == b.read_bytes()

    def test_paley_payload(self, capsys, tmp_path):
        p = tmp_path / "c.json"
        code, _, _ = run_cli(
            capsys, "gen", "--kind", "paley", "--params", '{"q": 5}',
            "--out", str(p),
        )
        assert code == 0
        d = json.loads(p.read_text())
        C = matrix_from_dict(d["payload"]["C"]).full()
        assert C.shape == (6, 6)
        assert np.allclose(C.T @ C, 5 * np.eye(6))

    def test_rip_payload(self, capsys, tmp_path):
        p = tmp_path / "A.json"
        code, _, _ = run_cli(
            capsys, "gen", "--kind", "rip", "--seed", "1",
            "--params", '{"m": 6, "n": 9, "dist": "bern2"}', "--out", str(p),
        )
        assert code == 0
        A = np.array(json.loads(p.read_text())["payload"]["A"])
        assert A.shape == (6, 9)
        assert np.allclose(np.linalg.norm(A, axis=0), 1.0)

    def test_bad_params_exit_code(self, capsys):
        code, _, err = run_cli(
            capsys, "gen", "--kind", "paley", "--params", '{"q": 9}'
        )
        assert code == 1
        assert "error:" in err


class TestBenchCommand:
    def test_end_to_end(self, capsys, tmp_path):
        spec = {
            "family": "spca",
            "methods": ["Q", "tpca"],
            "generator": "spiked_wigner",
            "params": {"n": 8, "k": 2, "beta": 6.0},
            "seeds": {"count": 2},
            "solver": {"eps": 1e-6, "max_iter": 20000},
        }
        sfile = write_json(tmp_path / "bench.json", spec)
        outdir = tmp_path / "results"
        code, out, _ = run_cli(
            capsys, "bench", "--spec", sfile, "--out", str(outdir)
        )
        assert code == 0
        summary = json.loads(out)
        assert summary["records"] == 4
        assert (outdir / "records.csv").exists()
        assert (outdir / "timings.csv").exists()
        assert (outdir / "cdf_ratio.csv").exists()

    def test_spec_error_exit_code(self, capsys, tmp_path):
        sfile = write_json(tmp_path / "bad.json", {"family": "nope"})
        code, _, err = run_cli(capsys, "bench", "--spec", sfile)
        assert code == 1
        assert "error:" in err
