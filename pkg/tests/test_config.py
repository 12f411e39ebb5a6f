"""
Configuration and export: Test Suite.

 Group 1: Config files
   1.  key = value lines, comments and typed scalars
   2.  Malformed lines and missing files raise ConfigurationError
   3.  YAML files merge over the defaults

 Group 2: ConfigManager
   4.  get / set / override leave DEFAULT_CONFIG untouched
   5.  Worker count from config, environment and CPU count

 Group 3: Validation
   6.  Out-of-range values and unknown sections are reported

 Group 4: Export formatting
   7.  Reals, booleans and missing values
   8.  Ledger placeholders and sorted JSON
"""
import json

import numpy as np
import pytest

from degen.config import DEFAULT_CONFIG, WORKERS_ENV, ConfigManager, parse_pairs
from degen.core.errors import ConfigurationError
from degen.integrations.export import TableExporter, format_value, ledger_table, write_json
from degen.utils.validation import validate_config


# ═══════════════════════════════════════════════════════════════════════════════
# Group 1: Config files
# ═══════════════════════════════════════════════════════════════════════════════

def test_parse_pairs():
    text = "\n".join([
        "# borderline study",
        "problem.theta = 0.75   # on the curve",
        "problem.mode = annulus",
        "mesh.M = 1024",
        "solver.tol_update = 1e-10",
        "sequence.schedule = [1, 2, 4]",
        "",
    ])
    config = parse_pairs(text)
    assert config["problem"] == {"theta": 0.75, "mode": "annulus"}
    assert config["mesh"]["M"] == 1024 and isinstance(config["mesh"]["M"], int)
    assert config["solver"]["tol_update"] == 1e-10
    assert config["sequence"]["schedule"] == [1, 2, 4]


@pytest.mark.parametrize("text", ["theta 0.75", " = 3", "mesh.M = [1, 2"])
def test_parse_pairs_errors(text):
    with pytest.raises(ConfigurationError):
        parse_pairs(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        ConfigManager(tmp_path / "absent.conf")


def test_yaml_file(tmp_path):
    path = tmp_path / "lab.yaml"
    path.write_text("problem:\n  gamma: 2.9\nsolver:\n  tol_update: 1e-8\n")
    cfg = ConfigManager(path)
    assert cfg.get("problem.gamma") == 2.9
    assert cfg.get("solver.tol_update") == 1e-8
    assert cfg.get("problem.theta") == DEFAULT_CONFIG["problem"]["theta"]


# ═══════════════════════════════════════════════════════════════════════════════
# Group 2: ConfigManager
# ═══════════════════════════════════════════════════════════════════════════════

def test_get_set_override():
    cfg = ConfigManager()
    assert cfg.get("mesh.M") == 512
    assert cfg.get("problem.inner_value", 7.0) == 7.0
    assert cfg.get("mesh.M.cells", "none") == "none"
    cfg.set("mesh.M", 64)
    cfg.override({"mesh.grading": None, "problem.theta": 0.5})
    assert cfg.get("mesh.M") == 64
    assert cfg.get("mesh.grading") == 3.0
    assert cfg.get("problem.theta") == 0.5
    assert ConfigManager().get("mesh.M") == 512
    assert DEFAULT_CONFIG["mesh"]["M"] == 512
    assert DEFAULT_CONFIG["problem"]["theta"] == 0.75


def test_workers(monkeypatch):
    cfg = ConfigManager()
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert cfg.workers() == 3
    cfg.set("sequence.workers", 2)
    assert cfg.workers() == 2
    cfg.set("sequence.workers", None)
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigurationError):
        cfg.workers()
    monkeypatch.delenv(WORKERS_ENV)
    assert cfg.workers() >= 1


# ═══════════════════════════════════════════════════════════════════════════════
# Group 3: Validation
# ═══════════════════════════════════════════════════════════════════════════════

def test_defaults_are_valid():
    assert validate_config(ConfigManager().config) == []


@pytest.mark.parametrize("key, value, fragment", [
    ("mesh.M", 2, "mesh.M"),
    ("problem.theta", 2.0, "problem.theta"),
    ("problem.N", 2, "problem.N"),
    ("solver.damping", 0.0, "solver.damping"),
    ("sequence.schedule", [4.0, 2.0], "strictly increasing"),
    ("analysis.refinements", [256, 512], "analysis.refinements"),
    ("output.format", "xml", "output.format"),
    ("plotting.dpi", 300, "unknown configuration section"),
])
def test_validation_errors(key, value, fragment):
    cfg = ConfigManager()
    cfg.set(key, value)
    errors = validate_config(cfg.config)
    assert len(errors) == 1 and fragment in errors[0], errors


# ═══════════════════════════════════════════════════════════════════════════════
# Group 4: Export formatting
# ═══════════════════════════════════════════════════════════════════════════════

def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(np.float64(2.0)) == "2"
    assert format_value(True) == "true"
    assert format_value(np.bool_(False)) == "false"
    assert format_value(None) == ""
    assert format_value(np.int64(7)) == "7"


class _Ledger:
    def rows(self):
        return [{"estimate": "STIMA", "k": None, "p": 1.5, "rho": None, "n": None,
                 "lhs": 3.0, "rhs": None, "allowance": 0.0, "passed": None}]


def test_ledger_placeholders(tmp_path):
    path = tmp_path / "ledger.csv"
    ledger_table(_Ledger()).export_csv(path)
    lines = path.read_text().splitlines()
    assert lines[1] == "STIMA,,1.5,,,3,C,0,n/a"


def test_sorted_json(tmp_path):
    path = tmp_path / "out.json"
    write_json({"b": np.float64(1.5), "a": [np.int64(1), float("inf")]}, path)
    text = path.read_text()
    assert text.endswith("}\n")
    assert list(json.loads(text)) == ["a", "b"]
    assert json.loads(text)["a"] == [1, "inf"]
    table = TableExporter(["x", "y"])
    table.add_row({"x": 1, "z": 2})
    assert table.rows == [{"x": 1, "y": None}]
