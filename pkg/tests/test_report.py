import csv
import io
import json

import numpy as np
import pytest

from hyperbloch.report import SCHEMA, CheckRecord, Report, emit, strip_timestamp


@pytest.fixture
def report():
    rep = Report("demo", {"n": 3, "seed": np.int64(2)}, timestamp={"utc": "2026-01-01T00:00:00+00:00", "wall_time": 1.5})
    rep.add(CheckRecord("exact", "MobiusIdnt", np.float64(0.1 + 0.2), 1e-12, False, "rounding"))
    rep.add(CheckRecord("vector", "Lunbdd", [1.0, np.inf], "true", True))
    rep.add(CheckRecord("missing", "NormR", np.nan, 3.0, False))
    return rep


class TestReport:
    def test_json_round_trip(self, report):
        text = report.to_json()
        data = json.loads(text)
        assert data["schema"] == SCHEMA and data["passed"] is False
        back = Report.from_json(text)
        assert back.to_json() == text

    def test_floats_bit_exact(self, report):
        data = json.loads(report.to_json())
        assert data["checks"][0]["value"] == 0.1 + 0.2

    def test_non_finite_values(self, report):
        data = json.loads(report.to_json())
        assert data["checks"][1]["value"] == [1.0, "inf"]
        assert data["checks"][2]["value"] == "nan"

    def test_csv(self, report):
        rows = list(csv.reader(io.StringIO(report.to_csv())))
        assert rows[0] == ["suite", "check", "anchor", "value", "threshold", "pass"]
        assert len(rows) == 1 + len(report.checks)
        assert rows[1][5] == "false" and rows[2][5] == "true"

    def test_strip_timestamp(self, report):
        other = Report(report.suite, report.config, report.checks, {"utc": "later", "wall_time": 9.0})
        assert strip_timestamp(report.to_json()) == strip_timestamp(other.to_json())
        assert report.to_json() != other.to_json()

    def test_emit(self, report, tmp_path):
        path = tmp_path / "r.csv"
        text = emit(report, "csv", path)
        assert path.read_text() == text
        with pytest.raises(ValueError):
            emit(report, "xml")

    def test_schema_check(self):
        with pytest.raises(ValueError):
            Report.from_json(json.dumps({"schema": 99, "suite": "x", "checks": []}))

    def test_passed(self):
        rep = Report("ok", checks=[CheckRecord("a", "x", 0.0, 1.0, True)])
        assert rep.passed
