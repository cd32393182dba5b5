"""Run reports: machine-readable pass/fail checks plus data tables.

summary.json and the CSV tables are byte-identical for identical
(spec, seed, version) regardless of worker count; manifest.json also
records wall-clock time and the active kernel path and is exempt from
that guarantee.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .. import __version__
from ..accel import active_path


@dataclass
class Check:
    """One acceptance check: observed value against a threshold."""

    name: str
    passed: bool
    observed: float
    threshold: float
    comparison: str  # "<=", ">=", "abs<=", ...
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "observed": float(self.observed),
            "threshold": float(self.threshold),
            "comparison": self.comparison,
            "detail": self.detail,
        }


@dataclass
class Table:
    header: list
    rows: list


@dataclass
class RunReport:
    experiment: str
    seed: int
    params: dict
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    notes: list = field(default_factory=list)
    spec_source: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add_check(self, check: Check):
        self.checks.append(check)

    def add_table(self, name: str, header, rows):
        self.tables[name] = Table(header=list(header), rows=[list(r) for r in rows])

    def summary_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "version": __version__,
            "params": _jsonable(self.params),
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
            "notes": list(self.notes),
            "tables": sorted(self.tables),
        }


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):
        return value.item()
    return value


def write_outputs(report: RunReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = report.summary_dict()
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    manifest = dict(summary)
    manifest["wall_time_s"] = report.wall_time_s
    manifest["kernel_path"] = active_path()
    manifest["spec"] = _jsonable(report.spec_source)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for name, table in report.tables.items():
        with open(out / f"{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(table.header)
            for row in table.rows:
                writer.writerow([_format_cell(c) for c in row])
    return out


def _format_cell(c):
    if hasattr(c, "item"):
        c = c.item()
    if isinstance(c, float):
        return repr(c)
    return c


def print_report(report: RunReport) -> None:
    print(f"experiment {report.experiment} (seed {report.seed})")
    for c in report.checks:
        mark = "PASS" if c.passed else "FAIL"
        extra = f" [{c.detail}]" if c.detail else ""
        print(f"  {mark} {c.name}: observed {c.observed:.6g} {c.comparison} {c.threshold:.6g}{extra}")
    print(f"result: {'PASS' if report.passed else 'FAIL'} ({report.wall_time_s:.1f} s)")
