"""Pass/fail reports: human-readable tables, versioned JSON and RFC 4180 CSV."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

SCHEMA_VERSION = "1.0"

COMPARATORS = {
    "<": lambda v, t: v < t,
    "<=": lambda v, t: v <= t,
    ">=": lambda v, t: v >= t,
    ">": lambda v, t: v > t,
    "==": lambda v, t: v == t,
}


@dataclass(frozen=True)
class Check:
    """One acceptance row: ``value <comparator> tolerance``."""

    name: str
    value: float
    tolerance: float
    comparator: str = "<"
    detail: str = ""

    @property
    def passed(self) -> bool:
        if isinstance(self.value, float) and math.isnan(self.value):
            return False
        return bool(COMPARATORS[self.comparator](self.value, self.tolerance))

    def as_dict(self) -> dict:
        return {"name": self.name, "value": _clean(self.value), "tolerance": _clean(self.tolerance),
                "comparator": self.comparator, "passed": self.passed, "detail": self.detail}


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list]


@dataclass
class Report:
    kind: str
    config: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    tables: list[Table] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def add(self, name: str, value, tolerance, comparator: str = "<", detail: str = "") -> Check:
        c = Check(name, float(value), float(tolerance), comparator, detail)
        self.checks.append(c)
        return c

    def to_json(self, files: dict | None = None) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "passed": self.passed,
            "config": self.config,
            "checks": [c.as_dict() for c in self.checks],
            "summary": _clean(self.summary),
            "tables": {t.name: {"columns": t.columns, "rows": len(t.rows),
                                "file": (files or {}).get(t.name)} for t in self.tables},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def render(self) -> str:
        """Fixed-width table with one line per check."""
        lines = [f"{self.kind}: {'PASS' if self.passed else 'FAIL'}"]
        if not self.checks:
            lines.append("  (no checks)")
            return "\n".join(lines) + "\n"
        width = max(len(c.name) for c in self.checks)
        for c in self.checks:
            flag = "pass" if c.passed else "FAIL"
            detail = f"  {c.detail}" if c.detail else ""
            lines.append(f"  [{flag}] {c.name:<{width}}  {c.value:.6g} {c.comparator} {c.tolerance:.6g}{detail}")
        return "\n".join(lines) + "\n"


def _clean(v):
    """Make values JSON-safe (NaN and inf become strings, numpy scalars become Python)."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):
        return _cell(v.item())
    return str(v)


def table_csv(table: Table) -> str:
    """RFC 4180 CSV text (CRLF line endings, minimal quoting)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_report(report: Report, out_dir: str, stem: str) -> dict[str, str]:
    """Write ``<stem>.json`` and one ``<stem>-<table>.csv`` per table into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    for t in report.tables:
        name = f"{stem}-{t.name}.csv"
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(table_csv(t))
        files[t.name] = name
    path = os.path.join(out_dir, f"{stem}.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json(files))
    files["json"] = f"{stem}.json"
    return files
