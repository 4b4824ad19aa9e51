"""
Tests for the psdo command line
===============================
"""

import json
import os
import sys

import pytest
from click.testing import CliRunner

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app import main

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def golden(name):
    with open(os.path.join(GOLDEN, name), "r", encoding="utf-8") as handle:
        return json.load(handle)


def golden_text(name):
    with open(os.path.join(GOLDEN, name), "r", encoding="utf-8") as handle:
        return handle.read()


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for key in ("PSDO_N", "PSDO_XMAX", "PSDO_DFLOOR", "PSDO_SEED", "PSDO_OUTPUT"):
        monkeypatch.delenv(key, raising=False)


class TestOperatorCommands:
    """Test cases for the operator algebra subcommands"""

    def setup_method(self):
        """Setup for each test method"""
        self.runner = CliRunner()

    def invoke(self, *args):
        return self.runner.invoke(main, list(args))

    def test_mul(self):
        """Test mul d1 x1 prints x1*d1 + 1"""
        result = self.invoke("mul", "d1", "x1")
        assert result.exit_code == 0
        assert result.output.strip() == "x1*d1 + 1"

    def test_res(self):
        """Test res of x1^-1 d1^-1"""
        result = self.invoke("res", "x1^-1*d1^-1")
        assert result.exit_code == 0
        assert result.output.strip() == "1"

    def test_ord(self):
        """Test the order of d1^2 + x1"""
        result = self.invoke("ord", "d1^2 + x1")
        assert result.exit_code == 0
        assert result.output.strip() == "2"

    def test_nu(self):
        """Test d2 outranks d1"""
        result = self.invoke("--n", "2", "nu", "d1 + d2")
        assert result.output.strip() == "[0, 1]"

    def test_split(self):
        """Test the standard projections"""
        result = self.invoke("split", "d1 + x1 + d1^-1")
        assert result.exit_code == 0
        assert result.output.splitlines() == ["plus: d1 + x1", "minus: d1^-1"]

    def test_comm(self):
        """Test [d1, x1^2] = 2 x1"""
        result = self.invoke("comm", "d1", "x1^2")
        assert result.output.strip() == "2*x1"

    def test_order_of_zero(self):
        """Test a mathematical error exits with 1"""
        result = self.invoke("ord", "x1 - x1")
        assert result.exit_code == 1
        assert "ZeroOperator" in result.output


class TestConjugacyCommands:
    """Test cases for dressing and conjugacy subcommands"""

    def setup_method(self):
        """Setup for each test method"""
        self.runner = CliRunner()

    def test_residue_obstruction(self):
        """Test d1 and d1 + x1^-1 d1^-1 are reported as not conjugate"""
        result = self.runner.invoke(main, ["conj1d", "d1", "d1 + x1^-1*d1^-1"])
        assert result.exit_code == 1
        assert "ResidueObstruction" in result.output

    def test_dress_generator(self):
        """Test the generator dresses to S = 1"""
        result = self.runner.invoke(main, ["--json", "dress", "d1"])
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report["verified"] is True
        assert report["text"] == "1"

    def test_dress_needs_n_operators(self):
        """Test a tuple of the wrong length is a usage error"""
        result = self.runner.invoke(main, ["--n", "2", "dress", "d1"])
        assert result.exit_code == 2

    def test_hamiltonian_flow(self):
        """Test the H_2 flow of d1 + x1^-1 d1^-1"""
        result = self.runner.invoke(main, ["hamflow", "--k", "2", "d1 + x1^-1*d1^-1"])
        assert result.exit_code == 0
        assert result.output.strip() == "(-2*x1^-2*d1^-1)"


class TestReports:
    """Test cases for errors, JSON reports and configuration"""

    def setup_method(self):
        """Setup for each test method"""
        self.runner = CliRunner()

    def test_syntax_error(self):
        """Test a parse error exits with 2"""
        result = self.runner.invoke(main, ["mul", "d1 +"])
        assert result.exit_code == 2
        assert result.output.startswith("error: SyntaxError")

    def test_unknown_variable(self):
        """Test x2 with one variable"""
        result = self.runner.invoke(main, ["res", "x2"])
        assert result.exit_code == 2
        assert "UnknownVariable" in result.output

    def test_json_report(self):
        """Test the schema and term list of a JSON report"""
        result = self.runner.invoke(main, ["--json", "mul", "d1", "x1"])
        report = json.loads(result.output)
        assert report["schema"] == 1
        assert report["command"] == "mul"
        assert report["text"] == "x1*d1 + 1"
        assert report["terms"] == [
            {"x": [1], "d": [1], "c": "1"},
            {"x": [0], "d": [0], "c": "1"},
        ]

    def test_json_is_deterministic(self):
        """Test two runs give byte-identical output"""
        args = ["--json", "--n", "2", "mul", "d1 + x2", "d2^-1 + x1"]
        first = self.runner.invoke(main, args)
        second = self.runner.invoke(main, args)
        assert first.exit_code == 0
        assert first.output == second.output

    @pytest.mark.parametrize(
        "args, name",
        [
            (["--json", "res", "x1^-1*d1^-1"], "res.json"),
            (["--json", "ord", "d1^2 + x1"], "ord.json"),
            (["--json", "conj1d", "d1", "d1 + x1^-1*d1^-1"], "conj1d_obstruction.json"),
        ],
    )
    def test_golden_reports(self, args, name):
        """Test reports against stored golden files"""
        result = self.runner.invoke(main, args)
        assert json.loads(result.output) == golden(name)

    def test_config_file(self, tmp_path):
        """Test n is read from a config file"""
        path = tmp_path / "session.json"
        path.write_text(json.dumps({"n": 2, "dfloor": [-4]}))
        result = self.runner.invoke(main, ["--config", str(path), "mul", "d1", "x2"])
        assert result.exit_code == 0
        assert result.output.strip() == "x2*d1"

    def test_flags_override_config(self, tmp_path):
        """Test --n wins over the file"""
        path = tmp_path / "session.json"
        path.write_text(json.dumps({"n": 2}))
        result = self.runner.invoke(main, ["--config", str(path), "--n", "1", "res", "x2"])
        assert result.exit_code == 2

    def test_bad_config(self, tmp_path):
        """Test unknown keys and positive floors are refused"""
        path = tmp_path / "session.json"
        path.write_text(json.dumps({"variables": 2}))
        assert self.runner.invoke(main, ["--config", str(path), "res", "x1"]).exit_code == 2
        assert self.runner.invoke(main, ["--dfloor", "1", "res", "x1"]).exit_code == 2

    def test_environment(self, monkeypatch):
        """Test PSDO_N sets the variable count"""
        monkeypatch.setenv("PSDO_N", "2")
        result = self.runner.invoke(main, ["mul", "d2", "x2"])
        assert result.output.strip() == "x2*d2 + 1"

    def test_check_suite(self):
        """Test a small run of the property suite passes"""
        result = self.runner.invoke(
            main, ["--json", "check", "--scale", "0.05", "--only", "roundtrip", "--only", "pairing_symmetric"]
        )
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert set(report["properties"]) == {"roundtrip", "pairing_symmetric"}

    def test_golden_text_report(self):
        """Test d1^-1 x1 = x1 d1^-1 - d1^-2 byte for byte"""
        result = self.runner.invoke(main, ["mul", "d1^-1", "x1"])
        assert result.exit_code == 0
        assert result.output == golden_text("mul_inverse_d.txt")
        report = json.loads(self.runner.invoke(main, ["--json", "mul", "d1^-1", "x1"]).output)
        assert report["terms"] == [
            {"x": [1], "d": [-1], "c": "1"},
            {"x": [0], "d": [-2], "c": "-1"},
        ]
