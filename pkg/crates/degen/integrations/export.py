"""CSV and JSON export of solutions, sequences, ledgers and phase diagrams"""
import csv
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

SOLUTION_FIELDS = ["r", "u", "w", "flux"]
SEQUENCE_FIELDS = ["n", "iterations", "converged", "w11", "lebesgue",
                   "w11_difference", "flux_difference"]
LEDGER_FIELDS = ["estimate", "k", "p", "rho", "n", "lhs", "rhs", "allowance", "passed"]
PHASE_FIELDS = ["theta", "m", "region"]

Output = Union[str, Path]


def format_value(value: Any) -> str:
    """17 significant digits for reals, lowercase booleans, empty for missing"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _plain(value: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, non-finite reals as strings"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


@contextmanager
def _open(output: Output):
    if str(output) == "-":
        yield sys.stdout
        sys.stdout.flush()
        return
    with open(output, "w", newline="", encoding="utf-8") as f:
        yield f


# TableExporter collects rows under a fixed header.
class TableExporter:
    """Exports a table of records as CSV or JSON"""

    # Initialize the TableExporter
    def __init__(self, fieldnames: Sequence[str]):
        self.fieldnames = list(fieldnames)
        self.rows: List[Dict[str, Any]] = []

    # Add one record
    def add_row(self, row: Dict[str, Any]):
        """Add a row; unknown keys are dropped, missing ones left empty"""
        self.rows.append({name: row.get(name) for name in self.fieldnames})

    def add_rows(self, rows: Iterable[Dict[str, Any]]):
        for row in rows:
            self.add_row(row)

    # Export table as CSV
    def export_csv(self, output: Output):
        """Export as CSV with LF line endings"""
        with _open(output) as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(self.fieldnames)
            for row in self.rows:
                writer.writerow([format_value(row[name]) for name in self.fieldnames])

    # Export table as JSON
    def export_json(self, output: Output):
        """Export as a JSON list of records"""
        write_json(self.rows, output)


def write_json(payload: Any, output: Output):
    """Sorted keys, two-space indent, trailing newline"""
    with _open(output) as f:
        f.write(json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n")


def solution_table(result) -> TableExporter:
    """Nodal r, u, w and flux of a SolveResult"""
    from ..core.solver import nodal_flux

    table = TableExporter(SOLUTION_FIELDS)
    flux = nodal_flux(result)
    for r, u, w, q in zip(result.mesh.nodes, result.u.values, result.w.values, flux):
        table.add_row({"r": r, "u": u, "w": w, "flux": q})
    return table


def sequence_table(sequence) -> TableExporter:
    table = TableExporter(SEQUENCE_FIELDS)
    table.add_rows(sequence.rows())
    return table


def ledger_table(ledger) -> TableExporter:
    table = TableExporter(LEDGER_FIELDS)
    for row in ledger.rows():
        row = dict(row)
        if row["rhs"] is None:
            row["rhs"] = "C"
        if row["passed"] is None:
            row["passed"] = "n/a"
        table.add_row(row)
    return table


def phase_table(grid: Iterable[tuple]) -> TableExporter:
    table = TableExporter(PHASE_FIELDS)
    for theta, m, region in grid:
        table.add_row({"theta": theta, "m": m, "region": region})
    return table
