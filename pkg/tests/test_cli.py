import subprocess
import sys

from abstain_lab.cli import main
from abstain_lab.harness import read_table


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_schedule_prints(capsys):
    code, out, err = run(capsys, "schedule", "--regime", "oblivious", "--d", "1", "--T", "1000",
                         "--alpha", "0.25")
    assert code == 0
    keys = {line.split(" = ")[0] for line in out.splitlines()}
    assert {"epsilon", "m", "N", "s_max", "M"} <= keys
    assert "vacuous" in err


def test_schedule_missing_D_is_input_error(capsys):
    code, _, err = run(capsys, "schedule", "--regime", "adaptive", "--d", "1", "--T", "100",
                       "--alpha", "0.2")
    assert code == 1 and "D" in err


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "simulate", "--bogus")[0] == 1
    assert run(capsys, "schedule", "--regime", "desk")[0] == 1
    assert run(capsys, "simulate", "--set", "alpha=7")[0] == 1


def test_simulate_oracle_has_zero_error(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--set", "learner=oracle", "--set", "adversary=none",
                       "--set", "T=50", "--out", str(tmp_path))
    assert code == 0
    _, rows = read_table(out)
    assert (rows[0]["mis_err"], rows[0]["abs_err"]) == ("0", "0")
    assert (tmp_path / "run.trace").exists() and (tmp_path / "run.csv").exists()


def test_sweep_emits_one_row_per_run(capsys, tmp_path):
    cfg = tmp_path / "sweep.txt"
    cfg.write_text("learner = \"majority\"\nseeds = 2\ngrid.alpha = [0.1, 0.2]\n"
                   "grid.T = [30, 60, 90]\n")
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--out", str(tmp_path / "o"),
                       "--threads", "2")
    assert code == 0
    _, cells = read_table(out)
    assert len(cells) == 6
    _, rows = read_table((tmp_path / "o" / "runs.csv").read_text())
    assert len(rows) == 12
    assert len({(r["alpha"], r["T"], r["seed_index"]) for r in rows}) == 12


def test_estimate_complexity_lowerbound(capsys):
    code, out, _ = run(capsys, "estimate", "--constraint", "0.3:1", "--trials", "20",
                       "--format", "jsonl")
    assert code == 0 and '"exact_rho"' in out
    code, out, _ = run(capsys, "complexity", "--set", "spec=rectangles", "--set", "spec.p=1",
                       "--n", "6", "--l", "2")
    assert code == 0
    assert read_table(out)[1][0]["count"] == "154"
    code, out, _ = run(capsys, "lowerbound", "--T", "40", "--A", "1", "--trials", "2")
    assert code == 0 and read_table(out)[1][0]["ok"] == "True"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "abstain_lab", "--help"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "simulate" in proc.stdout
