import csv
import io
import json

import pytest

from hyperbloch.cli import main
from hyperbloch.lattice import Lattice


class TestSuiteCommand:
    def test_json_report(self, capsys):
        assert main(["--suite", "geometry", "--n", "2", "--samples", "500"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["suite"] == "geometry" and data["passed"]
        assert data["config"]["n"] == 2

    def test_csv_to_file(self, tmp_path):
        out = tmp_path / "q.csv"
        assert main(["--suite", "quadrature", "--format", "csv", "--out", str(out)]) == 0
        rows = list(csv.reader(io.StringIO(out.read_text())))
        assert rows[0][0] == "suite" and all(row[5] == "true" for row in rows[1:])

    def test_failing_threshold_sets_exit_status(self, capsys):
        assert main(["--suite", "geometry", "--samples", "200", "--tol", "mobius_identity=1e-30"]) == 1
        data = json.loads(capsys.readouterr().out)
        failing = [c["name"] for c in data["checks"] if not c["pass"]]
        assert failing == ["mobius_identity"]

    def test_usage_errors(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["--suite", "nonexistent"])
        assert err.value.code == 2
        assert main(["--suite", "geometry", "--tol", "novalue"]) == 2
        assert main(["--suite", "geometry", "--n", "1"]) == 2


class TestLatticeAndDecompose:
    def test_coarse_lattice_is_refused(self, tmp_path, capsys):
        path = tmp_path / "lat.txt"
        assert main(["lattice", "--n", "2", "--r", "0.3", "--r-max", "0.6", "--seed", "1", "--out", str(path)]) == 0
        lat = Lattice.load(path)
        assert lat.n == 2 and len(lat) > 0
        out = tmp_path / "dec.json"
        assert main(["decompose", "--lattice", str(path), "--function", "constant", "--out", str(out)]) == 1
        assert "RefusalError" in capsys.readouterr().err
        assert not out.exists()

    def test_decompose_report(self, tmp_path):
        out = tmp_path / "dec.json"
        status = main(["decompose", "--n", "2", "--r", "0.2", "--r-max", "0.7", "--seed", "2",
                       "--function", "poisson", "--out", str(out)])
        doc = json.loads(out.read_text())
        assert status == (0 if doc["converged"] else 1)
        assert doc["config"]["mode"] == "kernel-bloch"
        assert len(doc["lambda"]) == doc["lattice"]["count"]
        assert doc["iterations"] == len(doc["residual_history"]) - 1
        assert doc["reconstruction_error"] < 0.05
