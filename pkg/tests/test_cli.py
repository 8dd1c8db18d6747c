import json
from pathlib import Path

import numpy as np
import pytest

from barrierfw.cli import EXIT_INVALID, EXIT_OK, main


def run(args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def pet_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("inst") / "pet.json"
    assert run(["gen", "--type", "pet", "--n", "25", "--m", "25",
                "--seed", "9", "--out", path]) == EXIT_OK
    return path


class TestGen:
    def test_writes_instance_and_manifest(self, pet_file):
        assert pet_file.exists()
        manifest = json.loads(Path(str(pet_file) + ".manifest.json").read_text())
        assert manifest["config"]["seed"] == 9
        doc = json.loads(pet_file.read_text())
        assert doc["type"] == "pet"
        assert doc["seed"] == 9

    def test_dopt_and_loginvest(self, tmp_path):
        assert run(["gen", "--type", "dopt", "--n", "3", "--m", "10",
                    "--seed", "1", "--out", tmp_path / "d.json"]) == EXIT_OK
        assert run(["gen", "--type", "loginvest", "--n", "3", "--m", "6",
                    "--seed", "1", "--out", tmp_path / "l.json"]) == EXIT_OK

    def test_bad_type_fails(self, tmp_path, capsys):
        assert run(["gen", "--type", "pet", "--n", "5", "--m", "5",
                    "--seed", "1", "--out", tmp_path / "x.json"]) == EXIT_INVALID
        assert "error" in capsys.readouterr().err


class TestSolve:
    def test_gap_rule_reaches_eps(self, pet_file, tmp_path):
        out = tmp_path / "t.csv"
        assert run(["solve", pet_file, "--method", "fw-adapt", "--eps", "1e-4",
                    "--trace-out", out]) == EXIT_OK
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "k,F,G,D,alpha,branch,elapsed_ms"
        last = lines[-1].split(",")
        assert float(last[2]) <= 1e-4
        assert Path(str(out) + ".manifest.json").exists()

    def test_methods_run(self, pet_file, tmp_path):
        for method in ("fw-exact", "rsgm-fixed", "rsgm-ls", "em"):
            out = tmp_path / f"{method}.csv"
            assert run(["solve", pet_file, "--method", method, "--max-iters", "20",
                        "--trace-out", out]) == EXIT_OK

    def test_md_writes_dual_schema(self, pet_file, tmp_path):
        out = tmp_path / "md.csv"
        assert run(["solve", pet_file, "--method", "md", "--eps", "1e-3",
                    "--trace-out", out]) == EXIT_OK
        assert out.read_text().splitlines()[0] == "k,d,Gbar,gamma,elapsed_ms"

    def test_deterministic_traces_are_byte_identical(self, pet_file, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert run(["solve", pet_file, "--method", "fw-adapt", "--eps", "1e-3",
                        "--trace-out", out, "--deterministic"]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_custom_start(self, pet_file, tmp_path):
        start = tmp_path / "z0.json"
        start.write_text(json.dumps((np.full(25, 1.0 / 25)).tolist()))
        assert run(["solve", pet_file, "--method", "fw-adapt", "--eps", "1e-2",
                    "--start", "custom", "--start-file", start,
                    "--trace-out", tmp_path / "c.csv"]) == EXIT_OK

    def test_baseline_on_dopt_rejected(self, tmp_path, capsys):
        d = tmp_path / "d.json"
        run(["gen", "--type", "dopt", "--n", "3", "--m", "9", "--seed", "2", "--out", d])
        assert run(["solve", d, "--method", "em",
                    "--trace-out", tmp_path / "x.csv"]) == EXIT_INVALID

    def test_missing_instance_fails(self, tmp_path):
        assert run(["solve", tmp_path / "nope.json", "--method", "fw-adapt"]) == EXIT_INVALID


class TestCompare:
    def test_outputs(self, pet_file, tmp_path):
        out_dir = tmp_path / "cmp"
        assert run(["compare", pet_file, "--methods", "fw-adapt,fw-exact,em",
                    "--budget", "40", "--out-dir", out_dir, "--summary"]) == EXIT_OK
        summary = json.loads((out_dir / "summary.json").read_text())
        assert set(summary) == {"fw-adapt", "fw-exact", "em"}
        for m in summary:
            assert (out_dir / f"{m}.csv").exists()
            assert summary[m]["iterations"] == 40
        assert (out_dir / "manifest.json").exists()
        assert (out_dir / "compare_gap_vs_iterations.png").exists()
        assert (out_dir / "compare_gap_vs_time.png").exists()

    def test_no_plots(self, pet_file, tmp_path):
        out_dir = tmp_path / "cmp2"
        assert run(["compare", pet_file, "--methods", "fw-adapt", "--budget", "10",
                    "--out-dir", out_dir, "--no-plots"]) == EXIT_OK
        assert not (out_dir / "compare_gap_vs_iterations.png").exists()

    def test_md_rejected(self, pet_file, tmp_path):
        assert run(["compare", pet_file, "--methods", "md", "--budget", "5",
                    "--out-dir", tmp_path / "cmp3"]) == EXIT_INVALID


class TestBounds:
    def test_surrogate_report(self, pet_file, tmp_path):
        out = tmp_path / "b.json"
        assert run(["bounds", pet_file, "--eps", "1e-2", "--delta0", "g0",
                    "--out", out]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["inputs"]["delta0_source"] == "g0-surrogate"
        assert doc["K_eps"] >= doc["K_Lin"]
        assert doc["FWGAP_eps"] >= doc["K_Lin"]

    def test_measured_then_large_eps_collapses(self, pet_file, tmp_path):
        out = tmp_path / "b2.json"
        assert run(["bounds", pet_file, "--eps", "1e9", "--delta0", "measured",
                    "--out", out]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["inputs"]["delta0_source"] == "measured"
        assert doc["K_eps"] == doc["K_Lin"]


class TestConfigPrecedence:
    def test_flags_beat_config_file(self, pet_file, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"eps": 1e-1, "max_iters": 7}))
        out = tmp_path / "t.csv"
        assert run(["--config", cfg, "solve", pet_file, "--method", "fw-adapt",
                    "--max-iters", "3", "--trace-out", out]) == EXIT_OK
        manifest = json.loads(Path(str(out) + ".manifest.json").read_text())
        assert manifest["config"]["max_iters"] == 3   # flag wins
        assert manifest["config"]["eps"] == 1e-1      # config file beats default


def test_verify_builtin_suite(capsys):
    assert run(["verify", "--builtin-suite"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
