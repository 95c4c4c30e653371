"""Check records, suite reports and their JSON/CSV serialization.

JSON reports carry ``"schema": 1``.  Floats are written with Python's
shortest round-trip representation, so parsing a report reproduces every
number bit for bit; non-finite values are written as the strings ``"inf"``,
``"-inf"`` and ``"nan"``.  Everything that varies between runs (the UTC time
and the wall-clock duration) sits under the single key ``"timestamp"``, so two
runs with the same configuration give identical documents once that key is
removed.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import scipy

SCHEMA = 1
CSV_FIELDS = ("suite", "check", "anchor", "value", "threshold", "pass")


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return value


@dataclass
class CheckRecord:
    """One verified property.

    Parameters
    ----------
    name : str
        Short identifier of the check.
    anchor : str
        Label of the identity or result the check exercises.
    value : float, list or dict
        Measured quantity.
    threshold : float or str
        Bound the value is compared against.
    passed : bool
    note : str
        Free-form context (method, sizes).
    """

    name: str
    anchor: str
    value: Any
    threshold: Any
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "value": _plain(self.value),
                "threshold": _plain(self.threshold), "pass": bool(self.passed), "note": self.note}


def environment() -> dict:
    """Interpreter and library versions recorded with each report."""
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "platform": sys.platform}


@dataclass
class Report:
    """Outcome of one suite; it passes when every check passes."""

    suite: str
    config: dict = field(default_factory=dict)
    checks: list[CheckRecord] = field(default_factory=list)
    timestamp: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, record: CheckRecord) -> CheckRecord:
        self.checks.append(record)
        return record

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "suite": self.suite,
            "config": _plain(self.config),
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "environment": environment(),
            "timestamp": _plain(self.timestamp),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for c in self.checks:
            writer.writerow([self.suite, c.name, c.anchor, json.dumps(_plain(c.value)),
                             json.dumps(_plain(c.threshold)), "true" if c.passed else "false"])
        return buf.getvalue()

    @classmethod
    def from_json(cls, text: str) -> "Report":
        data = json.loads(text)
        if data.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        checks = [CheckRecord(c["name"], c["anchor"], c["value"], c["threshold"], c["pass"], c.get("note", ""))
                  for c in data["checks"]]
        return cls(data["suite"], data["config"], checks, data.get("timestamp", {}))


def emit(report: Report, fmt: str = "json", path: str | Path | None = None) -> str:
    """Serialize ``report`` as ``"json"`` or ``"csv"`` and write it to ``path`` if given.

    Raises
    ------
    ValueError
        For an unknown format.
    OSError
        If the file cannot be written.
    """
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        text = report.to_csv()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def strip_timestamp(document: str) -> dict:
    """Parsed JSON report without its ``timestamp`` entry (for determinism checks)."""
    data = json.loads(document)
    data.pop("timestamp", None)
    return data
