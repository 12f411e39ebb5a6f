"""
Command line: Test Suite.

 Group 1: classify
   1.  Borderline curve, region A and the uncovered gap
   2.  Invalid input exits 2

 Group 2: solve
   3.  Closed-form annulus case through the oracle
   4.  Zero source exits 0 with the zero field
   5.  max-iter 1 exits 3 after writing the partial solution
   6.  JSON report keys
   7.  Overflowing theta = 1 ball solve exits 3

 Group 3: sequence, estimates, exponents
   8.  Bounded-source sequence CSV
   9.  BAR ledger from seed 0; empty id list exits 2
  10.  Regular source reports no blow-up

 Group 4: phase-diagram, config and determinism
  11.  CSV header and row count
  12.  Config file values and flag precedence
  13.  Identical flags give identical bytes
"""
import csv
import io
import json

import numpy as np
import pytest
from click.testing import CliRunner

from degen.cli import cli

ANNULUS_FLAGS = ["--N", "3", "--theta", "0.75", "--gamma", "2.5", "--mode", "annulus",
                 "--rmin", "0.01"]


@pytest.fixture
def runner(monkeypatch):
    monkeypatch.setenv("DEGEN_WORKERS", "1")
    return CliRunner()


def _csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


# ═══════════════════════════════════════════════════════════════════════════════
# Group 1: classify
# ═══════════════════════════════════════════════════════════════════════════════

@pytest.mark.parametrize("m, region", [("1.2", "CurveThm1"), ("2", "A")])
def test_classify_regions(runner, m, region):
    result = runner.invoke(cli, ["classify", "--N", "3", "--theta", "0.75", "--m", m])
    assert result.exit_code == 0, result.output
    out = json.loads(result.stdout)
    assert out["region"] == region
    if region == "CurveThm1":
        assert out["space"] == "W^{1,1}"


def test_classify_gap_and_llogl(runner):
    gap = runner.invoke(cli, ["classify", "--N", "3", "--theta", "0.2", "--m", "1.1"])
    assert json.loads(gap.stdout)["region"] == "Uncovered"
    point = runner.invoke(cli, ["classify", "--N", "3", "--theta", "1/2", "--m", "1", "--llogl"])
    assert json.loads(point.stdout)["region"] == "PointThm2"


@pytest.mark.parametrize("args", [
    ["classify", "--N", "2", "--theta", "0.5", "--m", "1"],
    ["classify", "--N", "3", "--theta", "0.5", "--m", "0.5"],
    ["classify", "--N", "3", "--theta", "abc", "--m", "1"],
])
def test_classify_invalid(runner, args):
    assert runner.invoke(cli, args).exit_code == 2


# ═══════════════════════════════════════════════════════════════════════════════
# Group 2: solve
# ═══════════════════════════════════════════════════════════════════════════════

def test_solve_annulus_oracle(runner):
    result = runner.invoke(cli, ["solve", *ANNULUS_FLAGS, "--M", "2048", "--method", "oracle"])
    assert result.exit_code == 0, result.output
    header, rows = _csv(result.stdout)
    assert header == ["r", "u", "w", "flux"]
    data = np.array(rows, dtype=float)
    r, u = data[:, 0], data[:, 1]
    exact = r ** -2 - 1.0
    assert np.max(np.abs(u - exact) / np.maximum(exact, 1.0)) < 1e-3
    assert len(rows) == 2049


def test_solve_zero_source(runner):
    result = runner.invoke(cli, ["solve", "--amp", "0", "--M", "64"])
    assert result.exit_code == 0, result.output
    _, rows = _csv(result.stdout)
    assert all(float(row[1]) == 0.0 for row in rows)


def test_solve_nonconvergence_exit(runner, tmp_path):
    report = tmp_path / "report.json"
    result = runner.invoke(cli, ["solve", "--M", "64", "--max-iter", "1", "--report", str(report)])
    assert result.exit_code == 3
    assert result.stdout.startswith("r,u,w,flux\n")
    assert json.loads(report.read_text())["converged"] is False


def test_solve_json_report(runner):
    result = runner.invoke(cli, ["solve", "--gamma", "1", "--M", "64", "--format", "json"])
    assert result.exit_code == 0, result.output
    out = json.loads(result.stdout)
    assert {"spec", "mesh", "iterations", "final_update", "residual_norm", "norms"} <= set(out)
    assert out["mesh"]["cells"] == 64


def test_solve_overflow_exit(runner, tmp_path):
    report = tmp_path / "report.json"
    result = runner.invoke(cli, ["solve", "--theta", "1", "--gamma", "2.4", "--M", "64",
                                 "--report", str(report)])
    assert result.exit_code == 3, result.output
    assert json.loads(report.read_text())["converged"] is False


# ═══════════════════════════════════════════════════════════════════════════════
# Group 3: sequence, estimates, exponents
# ═══════════════════════════════════════════════════════════════════════════════

def test_sequence_csv(runner):
    result = runner.invoke(cli, ["sequence", "--gamma", "1", "--mode", "annulus", "--rmin", "0.5",
                                 "--M", "64", "--schedule", "4,8", "--workers", "1"])
    assert result.exit_code == 0, result.output
    header, rows = _csv(result.stdout)
    assert header == ["n", "iterations", "converged", "w11", "lebesgue",
                      "w11_difference", "flux_difference"]
    assert [row[0] for row in rows] == ["4", "8"]
    assert rows[0][5] == "" and float(rows[1][5]) == 0.0


def test_estimates_bar(runner):
    result = runner.invoke(cli, ["estimates", "--ids", "BAR", "--samples", "5000", "--seed", "0"])
    assert result.exit_code == 0, result.output
    header, rows = _csv(result.stdout)
    assert header == ["estimate", "k", "p", "rho", "n", "lhs", "rhs", "allowance", "passed"]
    assert rows[0][0] == "BAR" and rows[0][-1] == "true"


def test_estimates_empty_ids(runner):
    assert runner.invoke(cli, ["estimates", "--ids", ""]).exit_code == 2
    assert runner.invoke(cli, ["estimates", "--ids", "BOGUS"]).exit_code == 2


def test_exponents_regular(runner):
    result = runner.invoke(cli, ["exponents", "--gamma", "1", "--M", "256",
                                 "--refinements", "64,128,256"])
    assert result.exit_code == 0, result.output
    out = json.loads(result.stdout)
    assert out["decay"]["blow_up"] is False
    assert out["threshold"]["blow_up"] is False
    assert out["distributional_residual"] < 1e-2


# ═══════════════════════════════════════════════════════════════════════════════
# Group 4: phase-diagram, config and determinism
# ═══════════════════════════════════════════════════════════════════════════════

def test_phase_diagram_csv(runner):
    result = runner.invoke(cli, ["phase-diagram", "--N", "3", "--grid", "10", "--no-curve"])
    assert result.exit_code == 0, result.output
    header, rows = _csv(result.stdout)
    assert header == ["theta", "m", "region"]
    assert len(rows) == 100
    assert "\r" not in result.stdout


def test_config_file_and_precedence(runner, tmp_path):
    conf = tmp_path / "lab.conf"
    conf.write_text("# study\nproblem.theta = 0.5\nmesh.M = 32\nproblem.amp = 0\n")
    from_file = runner.invoke(cli, ["--config", str(conf), "solve", "--format", "json"])
    assert from_file.exit_code == 0, from_file.output
    out = json.loads(from_file.stdout)
    assert out["spec"]["theta"] == 0.5 and out["mesh"]["cells"] == 32
    flagged = runner.invoke(cli, ["--config", str(conf), "solve", "--format", "json",
                                  "--theta", "0.25"])
    assert json.loads(flagged.stdout)["spec"]["theta"] == 0.25


def test_invalid_config(runner, tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("mesh.M = 2\n")
    assert runner.invoke(cli, ["--config", str(conf), "solve"]).exit_code == 2
    conf.write_text("just words\n")
    assert runner.invoke(cli, ["--config", str(conf), "solve"]).exit_code == 2


def test_determinism(runner):
    args = ["solve", "--gamma", "1.5", "--M", "128"]
    first = runner.invoke(cli, args)
    second = runner.invoke(cli, args)
    assert first.exit_code == 0, first.output
    assert first.stdout == second.stdout
