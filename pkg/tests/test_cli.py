import csv
import subprocess
import sys

import pytest

from priority_asep.cli import main


def summary_rows(path):
    with open(path) as fh:
        lines = [l for l in fh if not l.startswith("#")]
    return {row["quantity"]: row for row in csv.DictReader(lines)}


def header_lines(path):
    return [l.rstrip("\n") for l in open(path) if l.startswith("#")]


def test_verify_full_suite(tmp_path):
    assert main(["verify", "--n", "2", "--L", "4", "--q", "3/2", "--checks", "all", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(l for l in open(tmp_path / "verify.csv") if not l.startswith("#")))
    assert {r["check"] for r in rows} >= {"detailed-balance", "partition", "symmetry", "duality",
                                           "intertwining", "shock-evolution", "currents"}
    assert all(r["status"] == "pass" and r["max_violation"] == "0" for r in rows)
    assert all((r["n"], r["L"], r["q"]) == ("2", "4", "3/2") for r in rows)


def test_verify_single_check(tmp_path):
    assert main(["verify", "--n", "1", "--L", "2", "--q", "2", "--checks", "duality", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(l for l in open(tmp_path / "verify.csv") if not l.startswith("#")))
    assert [(r["check"], r["max_violation"]) for r in rows] == [("duality", "0")]


def test_verify_dimension_cap(tmp_path):
    assert main(["verify", "--n", "3", "--L", "12", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("argv", [
    ["verify", "--q", "1.5"],
    ["verify", "--checks", "nonsense"],
    ["verify", "--n", "two"],
    ["simulate-shock", "--q", "3/2"],
    ["bogus"],
    ["verify", "--unknown-flag", "1"],
])
def test_config_errors(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 64


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# exact run\nn = 2\nL = 3\nq = 3/2\nchecks = symmetry\n")
    assert main(["verify", "--config", str(cfg), "--L", "2", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(l for l in open(tmp_path / "verify.csv") if not l.startswith("#")))
    assert [(r["check"], r["n"], r["L"], r["q"]) for r in rows] == [("symmetry", "2", "2", "3/2")]
    assert "# L=2" in header_lines(tmp_path / "verify.csv")


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = 3\n")
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 64
    assert main(["verify", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 64


def test_shock_simulation_velocity(tmp_path):
    argv = ["simulate-shock", "--lambda", "1", "--q", "2", "--t-max", "1000", "--replicas", "100",
            "--seed", "1", "--out", str(tmp_path)]
    assert main(argv) == 0
    rows = summary_rows(tmp_path / "summary.csv")
    assert abs(float(rows["v_1"]["z"])) < 3
    assert float(rows["v_1"]["predicted"]) == pytest.approx(-0.45)
    heads = header_lines(tmp_path / "summary.csv")
    for item in ("# command=simulate-shock", "# lambda=1", "# q=2", "# t-max=1000", "# replicas=100", "# seed=1"):
        assert item in heads


def test_shock_simulation_margin_discard(tmp_path):
    argv = ["simulate-shock", "--lambda", "3", "--window", "-5,5", "--margin", "2", "--t-max", "200",
            "--replicas", "5", "--out", str(tmp_path)]
    assert main(argv) == 3


def test_asep_stationary_and_determinism(tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        argv = ["simulate-asep", "--n", "1", "--L", "4", "--counts", "2", "--q", "2", "--t-max", "2000",
                "--seed", "5", "--out", str(out)]
        assert main(argv) == 0
        outs.append(out)
    for name in ("summary.csv", "trajectory.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    rows = summary_rows(outs[0] / "summary.csv")
    assert float(rows["tv_stationary"]["estimate"]) < 0.02


def test_report_prints_predictions(tmp_path, capsys):
    assert main(["report", "--q", "2", "--lambda", "1", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "-9/20" in text and "41/40" in text
    assert (tmp_path / "predictions.csv").exists()


def test_shock_theorem_small_run(tmp_path):
    argv = ["shock-theorem", "--window", "-30,30", "--t-max", "2", "--replicas", "100", "--margin", "5",
            "--lambda", "1", "--seed", "1", "--out", str(tmp_path)]
    code = main(argv)
    assert code in (0, 1)
    rows = summary_rows(tmp_path / "summary.csv")
    assert (code == 0) == (float(rows["max_abs_z"]["estimate"]) <= 3)
    assert (tmp_path / "profile.csv").exists() and (tmp_path / "profile_absolute.csv").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "priority_asep", "verify", "--n", "1", "--L", "2",
                          "--checks", "symmetry", "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0
