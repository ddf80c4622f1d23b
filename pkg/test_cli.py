#!/usr/bin/env python3
"""
Runner Tests

Experiment configs, the `ma` commands, result files and the verdict ledger.
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pandas as pd
import pytest

from fields.grid import UniformGrid
from fields.scalar_field import ScalarField
from geometry.domains import disk
from main import build_problem, main
from utils.config import THREADS_ENV, boundary_function, load_config, parse_config, threads_from_env
from utils.errors import ConfigError
from utils.heatmap import emit_heatmap
from utils.keyvalue import format_value, parse_lines, read_key_values, write_key_values
from utils.verdicts import VerdictRunner

SOLVE_CONFIG = """
# small symmetric run
domain = disk
rhs = linear
grid_h = 1/16
boundary.u = 0
boundary.v = 0
check.samples = 2000
sweep.lambda_count = 16
sweep.heatmaps = -0.5
"""


def write_config(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def manifest(directory):
    return read_key_values(directory / "manifest.txt")


class TestConfig:

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        config = parse_config("", command="solve")
        assert config.domain == "disk"
        assert config.h == pytest.approx(1.0 / 32.0)
        assert config.sweep.lambda_count == 64
        assert config.sweep.threads == 1

    def test_fractions_and_sections(self):
        config = parse_config(
            "command = validate\n"
            "grid_h = 1/8, 1/16\n"
            "solve.newton_tol = 1e-10\n"
            "solve.init_strategy = poisson\n"
            "validate.cases = radial-decoupled, exp-radial-coupled\n"
            "check.u = -1, 1\n"
        )
        assert config.grid_h == (0.125, 0.0625)
        assert config.solve.newton_tol == 1e-10
        assert config.solve.init_strategy.value == "poisson"
        assert config.validate_cases == ("radial-decoupled", "exp-radial-coupled")
        assert config.check_box == {"u": (-1.0, 1.0)}

    def test_command_line_overrides(self, tmp_path):
        config = parse_config("command = solve\nseed = 3\n", command="check", output_dir=tmp_path, seed=9)
        assert config.command == "check"
        assert config.seed == 9
        assert config.output_dir == tmp_path

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError, match=r"<string>:2: unknown key 'solve.tolerance'"):
            parse_config("command = solve\nsolve.tolerance = 1e-9\n")

    @pytest.mark.parametrize("text", [
        "command = solve\ngrid_h = 1/0\n",
        "command = solve\ngrid_h = 1/32, 1/64\n",
        "command = solve\nsolve.beta = 2\n",
        "command = solve\nsweep.lambda_count = many\n",
        "command = solve\nsweep.u_field = u.csv\n",
        "command = solve\ncommand = sweep\n",
        "command = fly\n",
        "command solve\n",
    ])
    def test_malformed_values(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg", command="solve")

    def test_threads_from_environment(self, monkeypatch):
        assert threads_from_env({}) == 1
        assert threads_from_env({THREADS_ENV: "4"}) == 4
        with pytest.raises(ConfigError):
            threads_from_env({THREADS_ENV: "zero"})
        monkeypatch.setenv(THREADS_ENV, "-2")
        with pytest.raises(ConfigError):
            parse_config("", command="sweep")

    def test_boundary_functions(self):
        assert boundary_function("2.5")(0.3, 0.4) == 2.5
        assert boundary_function("quadratic")(0.6, 0.8) == pytest.approx(0.5)
        assert boundary_function("gaussian")(0.0, 0.0) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            boundary_function("wavy")

    def test_case_overrides_problem_keys(self):
        config = parse_config("command = solve\ncase = radial-coupled-exp\nrhs = negexp\n")
        domain, rhs, boundary_u, _ = build_problem(config)
        assert domain.name == "disk"
        assert rhs.name == "radial-coupled-exp"
        assert boundary_u(1.0, 0.0) == pytest.approx(0.5)

    def test_superellipse_domain(self):
        config = parse_config("command = solve\ndomain = superellipse\ndomain.semi_axes = 1, 0.5\n"
                              "domain.exponent = 4\n")
        domain, _, _, _ = build_problem(config)
        assert domain.contains(0.95, 0.0)
        assert not domain.contains(0.0, 0.55)


class TestKeyValue:

    def test_format_value(self):
        assert format_value(True) == "true"
        assert format_value(np.float64(0.1)) == "0.1"
        assert format_value((1.0, 2)) == "1.0, 2"

    def test_round_trip(self, tmp_path):
        path = write_key_values(tmp_path / "m.txt", {"a": 1, "b.c": 0.25, "flag": False})
        assert read_key_values(path) == {"a": "1", "b.c": "0.25", "flag": "false"}

    def test_duplicate_key(self):
        with pytest.raises(ValueError, match="duplicate key"):
            parse_lines("a = 1\na = 2\n")


class TestVerdicts:

    def test_ledger(self):
        ledger = VerdictRunner()
        ledger.record("converged", True)
        ledger.record("planes", False, "lambda_bar=-1")
        assert not ledger.passed
        assert ledger.exit_status == 1
        assert ledger.summary() == {"verdict.converged": "pass", "verdict.planes": "fail", "verdict": "fail"}
        report = ledger.generate_report()
        assert "1/2 passed" in report
        assert "lambda_bar=-1" in report

    def test_run_check_records_report(self):
        class Report:
            passed = True

        ledger = VerdictRunner()
        assert isinstance(ledger.run_check("p1_symmetry", lambda: Report()), Report)
        assert ledger.exit_status == 0
        assert VerdictRunner().generate_report() == "No verdicts recorded"


class TestHeatmap:

    def test_zero_field_renders(self, tmp_path):
        grid = UniformGrid.build(disk(), 1.0 / 8.0)
        path = emit_heatmap(ScalarField(grid, np.zeros(grid.n), lambda x1, x2: 0.0 * x1), tmp_path / "z.svg")
        assert path.read_text(encoding="utf-8").lstrip().startswith("<?xml")

    def test_output_is_deterministic(self, tmp_path):
        grid = UniformGrid.build(disk(), 1.0 / 8.0)
        field = ScalarField.from_function(grid, lambda x1, x2: x1 - x2 ** 2)
        first = emit_heatmap(field, tmp_path / "a.svg", title="w")
        second = emit_heatmap(field, tmp_path / "b.svg", title="w")
        assert first.read_bytes() == second.read_bytes()

    def test_empty_array_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_heatmap(np.empty((0, 0)), tmp_path / "e.svg")


class TestCommands:

    def test_check_flags_negexp(self, tmp_path):
        cfg = write_config(tmp_path, "rhs = negexp\ncheck.samples = 2000\n")
        out = tmp_path / "check"
        assert main(["check", "--config", cfg, "--out", str(out)]) == 1
        entries = manifest(out)
        assert entries["verdict.cross_monotonicity"] == "fail"
        assert entries["verdict.p1_symmetry"] == "pass"
        assert entries["verdict"] == "fail"
        table = pd.read_csv(out / "hypotheses.csv")
        assert table["check"].tolist() == ["p1_symmetry", "cross_monotonicity"]

    def test_barrier_table(self, tmp_path):
        cfg = write_config(tmp_path, "barrier.m = 1, 2\nbarrier.samples = 200\n")
        out = tmp_path / "barrier"
        assert main(["barrier", "--config", cfg, "--out", str(out)]) == 0
        table = pd.read_csv(out / "barrier.csv")
        assert len(table) == 2
        assert table["epsilon0"].iloc[0] == pytest.approx(0.1734, abs=1e-3)
        assert table["passed"].all()
        assert manifest(out)["verdict.barrier"] == "pass"

    def test_solve_then_sweep_loaded_fields(self, tmp_path):
        solved = tmp_path / "solve"
        cfg = write_config(tmp_path, SOLVE_CONFIG)
        assert main(["solve", "--config", cfg, "--out", str(solved)]) == 0
        entries = manifest(solved)
        assert entries["verdict.converged"] == "pass"
        assert entries["verdict.convexity"] == "pass"
        assert entries["verdict.boundary_condition"] == "pass"
        for name in ("u.csv", "v.csv", "u.meta", "residuals.csv", "u.svg", "v.svg"):
            assert (solved / name).exists()

        loaded_cfg = write_config(tmp_path, SOLVE_CONFIG + f"sweep.u_field = {solved / 'u.csv'}\n"
                                  f"sweep.v_field = {solved / 'v.csv'}\n", name="loaded.cfg")
        out = tmp_path / "loaded"
        assert main(["sweep", "--config", loaded_cfg, "--out", str(out)]) == 0
        entries = manifest(out)
        assert entries["verdict.boundary_condition"] == "pass"
        assert entries["verdict.symmetry"] == "pass"

    def test_sweep_writes_tables_and_is_reproducible(self, tmp_path):
        cfg = write_config(tmp_path, SOLVE_CONFIG)
        first, second = tmp_path / "first", tmp_path / "second"
        assert main(["sweep", "--config", cfg, "--out", str(first), "--seed", "5"]) == 0
        assert main(["sweep", "--config", cfg, "--out", str(second), "--seed", "5"]) == 0

        entries = manifest(first)
        for name in ("planes", "monotonicity", "p1_symmetry", "cross_monotonicity", "symmetry"):
            assert entries[f"verdict.{name}"] == "pass"
        assert entries["seed"] == "5"
        assert float(entries["sweep.lambda_bar"]) == 0.0

        table = pd.read_csv(first / "sweep.csv")
        assert list(table.columns) == ["lambda", "max_U", "max_V", "argmax_x1", "argmax_x2", "cap_nodes",
                                       "min_inequality_g", "min_inequality_f"]
        assert len(table) == 16
        assert len(pd.read_csv(first / "violations.csv")) == 0
        assert (first / "U_0.svg").exists()

        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_validate_quadratic_case(self, tmp_path):
        cfg = write_config(tmp_path, "grid_h = 1/8, 1/16\nvalidate.cases = radial-coupled-linear\n")
        out = tmp_path / "validate"
        assert main(["validate", "--config", cfg, "--out", str(out)]) == 0
        table = pd.read_csv(out / "convergence.csv")
        assert table["h"].tolist() == [0.125, 0.0625]
        assert (table["error"] <= 1e-8).all()
        assert manifest(out)["verdict.convergence.radial-coupled-linear"] == "pass"

    def test_errors_exit_with_status_two(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "rhs = cubic\n")
        assert main(["check", "--config", cfg, "--out", str(tmp_path / "bad")]) == 2
        assert "error=UnknownRHS reason=" in capsys.readouterr().err

        cfg = write_config(tmp_path, "grid_h = -1\n", name="neg.cfg")
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / "neg")]) == 2
        assert "error=ConfigError" in capsys.readouterr().err
