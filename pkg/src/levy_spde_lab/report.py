"""Experiment reports and CSV/JSON artifact writers."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["CSV_HEADER", "Check", "ExperimentReport", "write_curve", "read_curve", "to_jsonable"]

CSV_HEADER = "# levy-spde-lab v1"

PASS, FAIL, INCONCLUSIVE, SKIPPED, INFO = "pass", "fail", "inconclusive", "skipped", "info"


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


@dataclass
class Check:
    """One pass/fail decision: a confidence bound compared to a theoretical bound."""

    name: str
    status: str
    empirical: float | None = None
    ci_bound: float | None = None
    theoretical_bound: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "status": self.status,
            "empirical": self.empirical,
            "ci_bound": self.ci_bound,
            "theoretical_bound": self.theoretical_bound,
            "details": self.details,
        }


def upper_check(name, empirical, ci_bound, theoretical, **details) -> Check:
    """Pass when the upper confidence bound does not exceed the theoretical one."""
    status = PASS if ci_bound <= theoretical else FAIL
    return Check(name, status, empirical, ci_bound, theoretical, details)


def lower_check(name, empirical, ci_bound, theoretical, **details) -> Check:
    """Pass when the lower confidence bound is at least the theoretical one."""
    status = PASS if ci_bound >= theoretical else FAIL
    return Check(name, status, empirical, ci_bound, theoretical, details)


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    runtime_seconds: float = 0.0
    artifacts: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def counts(self) -> dict:
        out = {PASS: 0, FAIL: 0, INCONCLUSIVE: 0, SKIPPED: 0, INFO: 0}
        for c in self.checks:
            out[c.status] = out.get(c.status, 0) + 1
        return out

    @property
    def status(self) -> str:
        c = self.counts()
        if c[FAIL]:
            return FAIL
        if c[INCONCLUSIVE]:
            return INCONCLUSIVE
        return PASS

    @property
    def exit_code(self) -> int:
        return {PASS: 0, FAIL: 2, INCONCLUSIVE: 3}[self.status]

    def to_dict(self, include_runtime: bool = True) -> dict:
        out = {
            "experiment": self.experiment,
            "status": self.status,
            "summary": self.counts(),
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "results": self.results,
            "notes": self.notes,
            "provenance": self.provenance,
            "artifacts": self.artifacts,
        }
        if include_runtime:
            out["runtime_seconds"] = self.runtime_seconds
        return to_jsonable(out)

    def summary_lines(self) -> list[str]:
        lines = [f"{self.experiment}: {self.status.upper()}"]
        for c in self.checks:
            if c.status == INFO:
                continue
            lines.append(
                f"  [{c.status:>12}] {c.name}: empirical={_fmt(c.empirical)} "
                f"ci={_fmt(c.ci_bound)} bound={_fmt(c.theoretical_bound)}"
            )
        return lines

    def write(self, out_dir, fmt: str = "csv") -> list[str]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        files = []
        for name, columns in self.curves.items():
            path = out_dir / f"{name}.{fmt}"
            write_curve(path, columns, fmt)
            files.append(path.name)
        self.artifacts = files + ["report.json"]
        with open(out_dir / "report.json", "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        return self.artifacts


def _fmt(x):
    if x is None:
        return "-"
    if isinstance(x, (int, float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


def write_curve(path, columns: dict, fmt: str = "csv"):
    """Write named equal-length columns as CSV (with version header) or JSON."""
    names = list(columns)
    rows = list(zip(*[np.asarray(columns[k], dtype=float).tolist() for k in names]))
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(to_jsonable({"format": CSV_HEADER[2:], "columns": names, "rows": rows}), fh, indent=1)
        return
    if fmt != "csv":
        raise ValueError(f"unknown curve format {fmt!r}")
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def read_curve(path) -> dict:
    """Inverse of :func:`write_curve` for the CSV flavour."""
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != CSV_HEADER:
            raise ValueError(f"{path}: missing header {CSV_HEADER!r}")
        reader = csv.reader(fh)
        names = next(reader)
        cols = {k: [] for k in names}
        for row in reader:
            for k, v in zip(names, row):
                cols[k].append(float(v))
    return {k: np.array(v) for k, v in cols.items()}
