from __future__ import annotations

import csv
import subprocess
import sys

import numpy as np
import pytest

from robust_bridge.cli import EXIT_BLOW_UP, EXIT_ERROR, EXIT_OK, main
from robust_bridge.core import DEFAULT_PARAMS, TimeGrid
from robust_bridge.montecarlo import simulate


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_bound_upper(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code = main(["bound", "--case", "upper", "--psi", "10", "--fast", "--out", str(out),
                 "--a-out", str(tmp_path / "a.csv")])
    assert code == EXIT_OK
    (row,) = rows(out)
    assert float(row["kappa"]) == pytest.approx(0.113, rel=0.01)
    assert float(row["count_ratio"]) == pytest.approx(2.57, rel=0.01)
    assert row["blow_up"] == "false"
    assert (tmp_path / "a.csv").read_text().startswith("t,A\n")
    assert "kappa=0.1127" in capsys.readouterr().out


def test_bound_psi_zero(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bound", "--case", "lower", "--psi", "0", "--n-steps", "10000",
                 "--out", str(out)]) == EXIT_OK
    (row,) = rows(out)
    assert float(row["kappa"]) == 0.0 and float(row["count_ratio"]) == 1.0


def test_bound_blow_up(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bound", "--case", "upper", "--psi", "16", "--n-steps", "10000",
                 "--out", str(out)]) == EXIT_BLOW_UP
    (row,) = rows(out)
    assert row["blow_up"] == "true"


def test_usage_errors_exit_1(tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    assert main(["bound", "--case", "upper", "--psi", "-1", "--out", out]) == EXIT_ERROR
    assert main(["bound", "--case", "upper", "--psi", "1", "--n-steps", "5", "--out", out]) == EXIT_ERROR
    assert main(["bound", "--case", "upper", "--psi", "1", "--params", str(tmp_path / "none"),
                 "--out", out]) == EXIT_ERROR
    with pytest.raises(SystemExit) as exc:
        main(["bound", "--case", "sideways", "--psi", "1", "--out", out])
    assert exc.value.code == EXIT_ERROR
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_ERROR
    assert "error" in capsys.readouterr().err


def test_params_file(tmp_path):
    pf = tmp_path / "p.txt"
    pf.write_text(f"a={2 * 0.03673}\nr=0.71\nsigma=0.7252\n")
    out = tmp_path / "b.csv"
    assert main(["bound", "--params", str(pf), "--case", "lower", "--psi", "0",
                 "--n-steps", "10000", "--out", str(out)]) == EXIT_OK
    (row,) = rows(out)
    assert float(row["count_ratio"]) == 1.0
    assert float(row["bound"]) == pytest.approx(2 * 0.03673 / (2 * 1.71), rel=1e-6)


def test_tables(tmp_path):
    assert main(["tables", "--fast", "--out-dir", str(tmp_path)]) == EXIT_OK
    t1, t2 = rows(tmp_path / "table1.csv"), rows(tmp_path / "table2.csv")
    assert list(t1[0]) == ["psi", "kappa", "count_ratio"]
    assert [float(r["psi"]) for r in t1] == [5, 10, 50, 100, 400]
    assert [float(r["psi"]) for r in t2] == [5, 10, 13, 14, 15]
    assert float(t1[-1]["kappa"]) == pytest.approx(0.451, rel=0.02)
    assert float(t1[-1]["count_ratio"]) == pytest.approx(0.132, rel=0.02)
    assert float(t2[3]["kappa"]) == pytest.approx(0.962, rel=0.02)
    assert float(t2[3]["count_ratio"]) == pytest.approx(8.75, rel=0.02)


def test_sweep_monotone_until_blow_up(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--case", "upper", "--psi-min", "0", "--psi-max", "16",
                 "--psi-step", "0.5", "--n-steps", "10000", "--out", str(out)]) == EXIT_OK
    data = rows(out)
    assert len(data) == 33 and float(data[-1]["psi"]) == 16.0
    flags = [r["blow_up"] == "true" for r in data]
    first = flags.index(True)
    assert all(flags[first:]) and 15.5 <= float(data[first]["psi"]) <= 16.1
    bounds = [float(r["bound"]) for r in data[:first]]
    assert bounds == sorted(bounds)


def test_sweep_bad_step(tmp_path):
    assert main(["sweep", "--case", "upper", "--psi-max", "1", "--psi-step", "0",
                 "--out", str(tmp_path / "s.csv")]) == EXIT_ERROR


def test_simulate_summary_and_determinism(tmp_path, capsys):
    args = ["simulate", "--case", "upper", "--psi", "5", "--paths", "500", "--seed", "3",
            "--n-steps", "1000", "--epsilon", "0.001"]
    assert main(args + ["--out", str(tmp_path / "a.csv"), "--trace-out", str(tmp_path / "t.csv")]) == 0
    first = capsys.readouterr().out
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    assert capsys.readouterr().out == first
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert "mean_integral=" in first and "entropy=" in first
    assert (tmp_path / "t.csv").read_text().startswith("t,x\n")


def test_simulate_benchmark_matches_library(capsys):
    assert main(["simulate", "--case", "benchmark", "--paths", "300", "--seed", "1",
                 "--n-steps", "1000"]) == EXIT_OK
    line = capsys.readouterr().out
    ens = simulate(DEFAULT_PARAMS, None, 0.0, None, 300, 1, TimeGrid(1000), 1e-4)
    assert f"mean_integral={ens.mean_integral()[0]:.6g}" in line


def test_simulate_errors(tmp_path):
    assert main(["simulate", "--case", "upper", "--psi", "16", "--paths", "10",
                 "--n-steps", "1000"]) == EXIT_BLOW_UP
    assert main(["simulate", "--case", "benchmark", "--paths", "10",
                 "--epsilon", "0.5"]) == EXIT_ERROR


def test_check(capsys):
    assert main(["check", "--psi", "0.5", "--n-steps", "10000"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "sufficient: yes (threshold 0.675)"
    low, high = out[1].split("(")[1].split(")")[0].split(", ")
    assert float(low) == pytest.approx(0.021, abs=1e-3) and float(high) == pytest.approx(4.597, abs=1e-3)
    assert out[2].startswith("novikov: comparison holds")


def test_check_outside_regime(capsys):
    assert main(["check", "--psi", "16", "--n-steps", "10000"]) == EXIT_BLOW_UP
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("sufficient: no") and "none" in out[1]


def test_calibrate(tmp_path, capsys):
    g = TimeGrid(1000)
    ens = simulate(DEFAULT_PARAMS, None, 0.0, None, 2000, 4, g, epsilon=1e-3,
                   trace_paths=2000, trace_points=101)
    tt = ens.trace_t[1:-1]
    lines = ["day,t,count"]
    for d, path in enumerate(ens.traces[:, 1:-1]):
        lines += [f"d{d},{t:.6f},{x:.8g}" for t, x in zip(tt, path)]
    data = tmp_path / "counts.csv"
    data.write_text("\n".join(lines) + "\n")
    out = tmp_path / "fit.csv"
    assert main(["calibrate", "--data", str(data), "--bins", "10", "--out", str(out)]) == EXIT_OK
    (row,) = rows(out)
    assert float(row["r"]) == pytest.approx(0.71, rel=0.15)
    assert row["n_bins_used"] == "10"
    assert "equal mean/std weights" in capsys.readouterr().out


def test_calibrate_bad_file(tmp_path):
    data = tmp_path / "bad.csv"
    data.write_text("day,t,count\nd,1.5,2\n")
    assert main(["calibrate", "--data", str(data), "--out", str(tmp_path / "f.csv")]) == EXIT_ERROR


def test_module_entry_point(tmp_path):
    out = tmp_path / "b.csv"
    res = subprocess.run([sys.executable, "-m", "robust_bridge", "bound", "--case", "lower",
                          "--psi", "5", "--n-steps", "1000", "--out", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    text = out.read_text()
    assert text.endswith("\n") and "," in text and ";" not in text
