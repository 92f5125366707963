import json
import subprocess
import sys
import time

import numpy as np
import pytest

from toricnk import cli
from toricnk.jets import s3s3_phi

BOX = "-0.25,0.25,-0.25,0.25,-0.25,0.25"


def run(*argv):
    return cli.main([str(a) for a in argv])


def load(path):
    return json.loads(path.read_text())


@pytest.fixture
def quadratic(tmp_path):
    path = tmp_path / "r2.txt"
    path.write_text("2 0 0 0.5\n0 2 0 0.5\n0 0 2 0.5\n")
    return path


class TestVerify:
    def test_s3s3_grid(self, tmp_path):
        out = tmp_path / "s.json"
        assert run("verify", "--family", "s3s3", "--box", BOX, "--res", "21,21,21", "--out", out) == 0
        agg = load(out)["aggregates"]
        assert agg["n_points"] == 21**3
        assert agg["admissible_fraction"] > 0
        assert agg["max_residual_U0"] <= 1e-9

    def test_quadratic_fails(self, tmp_path, quadratic):
        out = tmp_path / "q.json"
        assert run("verify", "--family", f"poly:{quadratic}", "--box", BOX, "--res", "3", "--out", out) != 0
        rep = load(out)
        origin = [r for r in rep["records"] if r["y"] == [0, 0, 0]][0]
        assert origin["ma_residual"] == 1.0
        assert rep["aggregates"]["max_ma_residual"] >= 1.0

    def test_shifted_quadratic_fails_on_residual(self, tmp_path):
        path = tmp_path / "r2p1.txt"
        path.write_text("2 0 0 0.5\n0 2 0 0.5\n0 0 2 0.5\n0 0 0 1\n")
        out = tmp_path / "q.json"
        assert run("verify", "--family", f"poly:{path}", "--box", "-0.1,0.1,-0.1,0.1,-0.1,0.1", "--res", "3",
                   "--out", out) == 1
        agg = load(out)["aggregates"]
        assert agg["n_admissible"] > 0 and agg["max_residual_U0"] > 1e-9

    def test_single_point(self, tmp_path):
        out = tmp_path / "o.json"
        assert run("verify", "--family", "s3s3", "--box", "-1,1,-1,1,-1,1", "--res", "1,1,1", "--out", out) == 0
        (rec,) = load(out)["records"]
        assert rec["y"] == [0, 0, 0] and rec["in_U0"] is True

    def test_outside_points_have_null_fields(self, tmp_path):
        out = tmp_path / "o.json"
        run("verify", "--family", "s3s3", "--box", "-1,1,-1,1,-1,1", "--res", "3", "--out", out)
        rep = load(out)
        outside = [r for r in rep["records"] if r["eps2"] <= 0]
        assert outside and all(r["nk1_residual"] is None and r["ma_residual"] is not None for r in outside)
        assert all(not r["in_U0"] for r in outside)

    def test_aggregates_recomputable(self, tmp_path):
        out = tmp_path / "o.json"
        run("verify", "--family", "s3s3", "--box", "-0.6,0.6,-0.6,0.6,-0.6,0.6", "--res", "5", "--out", out)
        rep = load(out)
        recs, agg = rep["records"], rep["aggregates"]
        inside = [r for r in recs if r["in_U0"]]
        assert agg["n_admissible"] == len(inside)
        assert agg["admissible_fraction"] == len(inside) / len(recs)
        worst = max(max(r[k] for k in cli._RESIDUAL_KEYS) for r in inside)
        assert agg["max_residual_U0"] == worst
        assert agg["max_ma_residual"] == max(r["ma_residual"] for r in recs)

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            run("verify", "--family", "s3s3", "--box", BOX, "--res", "4,5,6", "--out", out)
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.json.meta.json").exists()
        assert "seconds" not in a.read_text()

    def test_workers_do_not_change_report(self, tmp_path, monkeypatch):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run("verify", "--family", "s3s3", "--box", BOX, "--res", "13", "--out", a, "--workers", "1")
        monkeypatch.setenv("NK_WORKERS", "2")
        run("verify", "--family", "s3s3", "--box", BOX, "--res", "13", "--out", b)
        assert a.read_bytes() == b.read_bytes()
        assert load(tmp_path / "b.json.meta.json")["workers"] == 2

    def test_worker_precedence(self, monkeypatch):
        monkeypatch.setenv("NK_WORKERS", "3")
        assert cli.worker_count(None) == 3
        assert cli.worker_count(5) == 5
        monkeypatch.delenv("NK_WORKERS")
        assert cli.worker_count(None) == 1

    def test_fd_mode(self, tmp_path):
        out = tmp_path / "fd.json"
        assert run("verify", "--family", "s3s3", "--box", BOX, "--res", "5", "--mode", "fd", "--out", out) == 0
        assert load(out)["config"]["residual_tol"] == 1e-4

    def test_summary_only(self, tmp_path):
        out = tmp_path / "s.json"
        run("verify", "--family", "s3s3", "--box", BOX, "--res", "3", "--out", out, "--summary-only")
        assert "records" not in load(out)

    def test_radial_family(self, tmp_path):
        sweep = tmp_path / "sweep.txt"
        sweep.write_text("1 10 2 1.5\n")
        run("radial", "--sweep", sweep, "--out", tmp_path / "r")
        csv = tmp_path / "r" / "trajectory_line1.csv"
        out = tmp_path / "v.json"
        box = "1.45,1.5,0.1,0.2,0.1,0.2"
        assert run("verify", "--family", f"radial:{csv}", "--box", box, "--res", "3", "--out", out, "--tol", "1e-8") == 0

    @pytest.mark.parametrize(
        "argv",
        [
            ["--family", "nope", "--box", BOX, "--res", "3"],
            ["--family", "poly:/no/such/file", "--box", BOX, "--res", "3"],
            ["--family", "s3s3", "--box", "0,1,0,1", "--res", "3"],
            ["--family", "s3s3", "--box", "1,0,0,1,0,1", "--res", "3"],
            ["--family", "s3s3", "--box", BOX, "--res", "0,3,3"],
            ["--family", "s3s3", "--box", BOX, "--res", "3", "--out", "/no/such/dir/out.json"],
            ["--family", "s3s3", "--box", BOX],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        assert run("verify", *argv) == 2


class TestRadial:
    def test_sweep(self, tmp_path):
        sweep = tmp_path / "sweep.txt"
        sweep.write_text("# demo\n1 10 2 1.5\n1 0.3 0.47 2\n")
        out = tmp_path / "out"
        assert run("radial", "--sweep", sweep, "--out", out) == 0
        summary = load(out / "summary.json")
        good, bad = summary["entries"]
        assert good["status"] == "integrated" and good["max_ode_residual"] <= 1e-8
        assert good["windows"] or good["termination"] != "reached_t_end"
        assert (out / good["csv"]).exists()
        assert bad["status"] == "rejected" and bad["line"] == 3

    def test_t_end_override(self, tmp_path):
        sweep = tmp_path / "sweep.txt"
        sweep.write_text("1 10 2 1.5\n")
        run("radial", "--sweep", sweep, "--t-end", 1.2, "--out", tmp_path / "o")
        assert load(tmp_path / "o" / "summary.json")["entries"][0]["t_final"] == 1.2

    def test_empty(self, tmp_path):
        sweep = tmp_path / "empty.txt"
        sweep.write_text("")
        assert run("radial", "--sweep", sweep, "--t-end", 2, "--out", tmp_path / "o") == 0
        assert load(tmp_path / "o" / "summary.json")["entries"] == []

    def test_missing_sweep(self, tmp_path):
        assert run("radial", "--sweep", tmp_path / "nope.txt", "--out", tmp_path / "o") == 2


class TestGolden:
    def test_passes(self, capsys):
        assert run("golden") == 0
        lines = capsys.readouterr().out.splitlines()
        assert all(line.startswith("PASS") for line in lines)

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "toricnk", "golden", "--points", "50"], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr


class TestJson:
    def test_float_format(self):
        assert cli.to_json(0.1) == "0.10000000000000001"
        assert cli.to_json(float("nan")) == "null"
        assert cli.to_json({"a": [1, 2.5, None, True]}) == '{\n  "a": [1, 2.5, null, true]\n}'

    def test_roundtrip_exact(self, rng):
        vals = rng.normal(size=50).tolist()
        assert json.loads(cli.to_json(vals)) == vals

    def test_grid_midpoint(self):
        cfg = cli.ScanConfig("s3s3", ((0.0, 1.0), (-1.0, 1.0), (2.0, 4.0)), (1, 1, 1))
        np.testing.assert_array_equal(cfg.points(), [[0.5, 0.0, 3.0]])


class TestThroughput:
    def test_projected_million_points(self):
        # 5·10⁴ points measured, projected linearly to 10⁶ single-threaded
        fam = s3s3_phi()
        ys = np.random.default_rng(0).uniform(-0.25, 0.25, (50_000, 3))
        start = time.perf_counter()
        for i in range(0, len(ys), cli.CHUNK):
            cli.evaluate_points(fam, ys[i:i + cli.CHUNK])
        projected = (time.perf_counter() - start) * 20
        assert projected < 60.0, f"projected {projected:.1f} s for 1e6 points"
