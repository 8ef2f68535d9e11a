"""Report containers and the exponent/ratio pass rules shared by all sweeps."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np


def fit_exponent(x, y):
    """Least-squares slope of log(y) against log(x); needs >= 3 points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3:
        raise ValueError("exponent fit needs at least 3 sweep points")
    if np.any(y <= 0):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def ratio_spread(values):
    """max/min over a sequence of positive ratios."""
    v = np.asarray(values, dtype=float)
    lo = v.min()
    if lo <= 0:
        return float("inf")
    return float(v.max() / lo)


@dataclass
class EstimateReport:
    """Measured LHS/RHS ratios over a sweep plus fitted exponents.

    rows: one dict per sweep point (parameters and measured ratios).
    fitted_exponent: mapping of series name to its log-log slope.
    passed: the aggregate verdict under the recorded tolerances.
    """

    rows: list
    fitted_exponent: dict
    passed: bool
    tolerance: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(
            {
                "rows": [_jsonable(r) for r in self.rows],
                "fitted_exponent": _jsonable(self.fitted_exponent),
                "passed": self.passed,
                "tolerance": _jsonable(self.tolerance),
            },
            indent=2,
            sort_keys=True,
        )

    def write_csv(self, path):
        if not self.rows:
            raise ValueError("cannot write an empty report")
        keys = sorted({k for row in self.rows for k in row})
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(keys)
            for row in self.rows:
                writer.writerow([_csv_cell(row.get(k)) for k in keys])


def exponent_ok(fitted, target, tol=0.1):
    return abs(fitted - target) <= tol


def bounded_ok(values, spread=10.0):
    return ratio_spread(values) <= spread


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _csv_cell(v):
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+}j"
    return v


def read_report_csv(path):
    """Round-trip reader for report CSVs: returns the list of row dicts."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for rec in reader:
            if not rec or rec[0].startswith("#"):
                continue
            if header is None:
                header = rec
                continue
            row = {}
            for k, cell in zip(header, rec):
                row[k] = _parse_cell(cell)
            rows.append(row)
    return rows


def _parse_cell(cell):
    try:
        return float(cell)
    except ValueError:
        pass
    try:
        return complex(cell)
    except ValueError:
        return cell
