import json
import subprocess
import sys

import numpy as np
import pytest

from lamtopo import campaign as cp
from lamtopo.cli import main, parse_mesh, UsageError

SOLID = "50 25 0 100 25 50 25 0 100 25 50 25 0 100 25 0.5 0 0"
TWO_FRAGMENTS = "20 25 0 40 10 80 25 0 40 10 20 25 0 40 10 0.5 0 0"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_config(path, **extra):
    lines = ['algorithm = "random"', "budget = 20", "[mesh]", "nx = 20", "ny = 10"]
    head = [f"{k} = {json.dumps(v)}" for k, v in extra.items()]
    path.write_text("\n".join(head + lines) + "\n")
    return path


class TestEvaluate:
    def test_solid_fixture_connected(self, capsys):
        code, out, _ = run(capsys, "evaluate", *SOLID.split())
        rec = json.loads(out)
        assert code == 0 and rec["connectivity"]["psi_total"] == 0 and rec["fe_solved"]

    def test_design_file_and_out(self, capsys, tmp_path):
        f = tmp_path / "x.txt"
        f.write_text(TWO_FRAGMENTS.replace(" ", "\n"))
        code, out, _ = run(capsys, "evaluate", "--design", str(f), "--mesh", "40x20", "--out", str(tmp_path / "o"))
        rec = json.loads(out)
        assert code == 0 and not rec["fe_solved"] and rec["mesh"] == [40, 20]
        assert (tmp_path / "o" / "density.csv").exists() and (tmp_path / "o" / "evaluation.json").exists()

    def test_csv_format(self, capsys):
        code, out, _ = run(capsys, "evaluate", "--format", "csv", "--mesh", "20x10", *SOLID.split())
        header, values = out.strip().splitlines()
        assert code == 0 and header.startswith("objective,compliance")

    def test_dumps(self, capsys, tmp_path):
        code, _, _ = run(capsys, "evaluate", "--mesh", "4x2", "--dump-k", str(tmp_path / "k.txt"),
                         "--dump-u", str(tmp_path / "u.txt"), *SOLID.split())
        assert code == 0
        assert np.loadtxt(tmp_path / "u.txt").size == 2 * 5 * 3

    def test_wrong_count(self, capsys):
        code, _, err = run(capsys, "evaluate", "1", "2", "3")
        assert code == 2 and "18 numbers" in err

    def test_out_of_bounds(self, capsys):
        code, _, err = run(capsys, "evaluate", *SOLID.replace("0.5 0 0", "0.5 0 3").split())
        assert code == 2 and "17" in err

    def test_bad_mesh(self, capsys):
        code, _, err = run(capsys, "evaluate", "--mesh", "big", *SOLID.split())
        assert code == 2 and "--mesh" in err

    def test_unreadable_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "evaluate", "--design", str(tmp_path / "none.txt"))
        assert code == 2 and "cannot read" in err

    def test_malformed_file(self, capsys, tmp_path):
        f = tmp_path / "x.txt"
        f.write_text("a b c")
        code, _, _ = run(capsys, "evaluate", "--design", str(f))
        assert code == 2


class TestOptimize:
    def test_same_seed_same_hash(self, capsys, tmp_path):
        cfg = write_config(tmp_path / "run.toml")
        hashes = []
        for _ in range(2):
            code, out, _ = run(capsys, "optimize", "--config", str(cfg), "--seed", "7")
            assert code == 0
            hashes.append(json.loads(out)["trace_sha256"])
        assert hashes[0] == hashes[1]

    def test_trace_and_render(self, capsys, tmp_path):
        cfg = write_config(tmp_path / "run.toml")
        code, out, _ = run(capsys, "optimize", "--config", str(cfg), "--out", str(tmp_path),
                           "--render", "density", "--render", "convergence")
        res = json.loads(out)
        assert code == 0 and res["evaluations"] == 20
        assert (tmp_path / "trace_random_concurrent_seed0.csv").exists()
        assert len(res["graphics"]) == 2

    def test_csv_output(self, capsys, tmp_path):
        cfg = write_config(tmp_path / "run.toml", mode="sequential")
        code, out, _ = run(capsys, "optimize", "--config", str(cfg), "--format", "csv")
        lines = out.strip().splitlines()
        assert code == 0 and len(lines) == 21 and lines[0].startswith("eval,stage")

    def test_bad_config(self, capsys, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("budget = 5\nflavour = 1\n")
        code, _, err = run(capsys, "optimize", "--config", str(p))
        assert code == 2 and "flavour" in err

    def test_negative_seed(self, capsys, tmp_path):
        code, _, _ = run(capsys, "optimize", "--config", str(write_config(tmp_path / "r.toml")), "--seed", "-1")
        assert code == 2


class TestCampaign:
    def test_matrix_accounting(self, capsys, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('algorithms = ["random", "cmaes"]\nmodes = ["concurrent", "sequential"]\nseeds = [0, 1]\n'
                     'budget = 10\n[mesh]\nnx = 20\nny = 10\n')
        out_dir = tmp_path / "out"
        code, out, _ = run(capsys, "campaign", "--config", str(p), "--out", str(out_dir), "--render", "convergence")
        assert code == 0
        assert len(list(out_dir.glob("trace_*.csv"))) == 8
        assert (out_dir / "summary.json").exists() and (out_dir / "convergence.svg").exists()
        assert set(json.loads(out)["cells"]) == {"cmaes/concurrent", "cmaes/sequential",
                                                 "random/concurrent", "random/sequential"}

    def test_csv_table(self, capsys, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('algorithms = ["random"]\nseeds = [0, 1]\nbudget = 6\n[mesh]\nnx = 20\nny = 10\n')
        code, out, _ = run(capsys, "campaign", "--config", str(p), "--format", "csv")
        lines = out.strip().splitlines()
        assert code == 0 and lines[0] == "cell,n_runs,final_median,final_q1,final_q3" and len(lines) == 2

    def test_needs_config(self, capsys):
        code, _, err = run(capsys, "campaign")
        assert code == 2 and "--config" in err


class TestRender:
    def test_from_design(self, capsys, tmp_path):
        f = tmp_path / "x.txt"
        f.write_text(SOLID)
        code, out, _ = run(capsys, "render", "--design", str(f), "--mesh", "20x10", "--out", str(tmp_path),
                           "--render", "v1", "--render", "fiber_l")
        assert code == 0 and len(out.split()) == 2 and (tmp_path / "fiber_l.svg").exists()

    def test_from_trace(self, capsys, tmp_path):
        cfg = cp.RunConfig(strategy=cp.StrategySpec("sequential", 12), algorithm="random", nx=20, ny=10,
                           output_dir=str(tmp_path))
        cp.run(cfg)
        code, out, _ = run(capsys, "render", "--trace", str(cfg.trace_path()), "--mesh", "20x10",
                           "--out", str(tmp_path), "--render", "convergence", "--render", "density")
        assert code == 0 and "convergence.svg" in out and "density.svg" in out

    def test_convergence_needs_trace(self, capsys, tmp_path):
        f = tmp_path / "x.txt"
        f.write_text(SOLID)
        code, _, _ = run(capsys, "render", "--design", str(f), "--render", "convergence")
        assert code == 2

    def test_bad_trace(self, capsys, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("junk\n")
        code, _, err = run(capsys, "render", "--trace", str(p))
        assert code == 2 and "trace" in err


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and out.count("PASS") == 7


def test_unknown_flag(capsys):
    code, _, err = run(capsys, "evaluate", "--frobnicate")
    assert code == 2 and "--frobnicate" in err


def test_parse_mesh():
    assert parse_mesh("100x50") == (100, 50)
    with pytest.raises(UsageError):
        parse_mesh("1x50")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "lamtopo", "evaluate", "--mesh", "20x10", *SOLID.split()],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and json.loads(r.stdout)["fe_solved"]
