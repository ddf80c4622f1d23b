#!/usr/bin/env python3
"""
Solver Tests

Residual, Jacobian, Newton iteration and the manufactured catalog.
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pandas as pd
import pytest

from fields.grid import UniformGrid
from fields.scalar_field import ScalarField, constant_trace
from fields.sym2 import det2
from geometry.domains import disk
from nonlinearity.coupled_rhs import CoupledRHS, get_rhs
from solver.discretization import assemble_jacobian, jacobian_apply, residual, residual_vectors
from solver.manufactured import (
    CATALOG,
    EXACTNESS_FLOOR,
    RATIO_BAND,
    convergence_study,
    convergence_verdict,
    manufactured_case,
    solution_errors,
    solve_case,
)
from solver.newton import InitStrategy, SolveConfig, boundary_monotonicity_report, initial_guess, newton_solve
from utils.errors import DidNotConverge, UnknownCase


def half_square(x1, x2):
    return 0.5 * (x1 ** 2 + x2 ** 2)


@pytest.fixture(scope="module")
def grid():
    return UniformGrid.build(disk(), 1.0 / 16.0)


class TestDiscretization:

    def test_exact_quadratic_has_zero_residual(self, grid):
        u = ScalarField.from_function(grid, half_square)
        v = ScalarField.from_function(grid, half_square)
        r_u, r_v = residual_vectors(u, v, get_rhs("linear"))
        assert np.max(np.abs(r_u)) < 1e-8
        assert np.max(np.abs(r_v)) < 1e-8
        field_u, _ = residual(u, v, get_rhs("linear"))
        assert np.array_equal(field_u.values, r_u)

    def test_assembled_matrix_matches_directional_derivative(self, grid):
        rng = np.random.default_rng(2)
        rhs = get_rhs("gaussian")
        u = ScalarField.from_function(grid, lambda x1, x2: np.exp(half_square(x1, x2)))
        v = ScalarField.from_function(grid, lambda x1, x2: 1.0 + half_square(x1, x2))
        zero = constant_trace(0.0)
        du = ScalarField(grid, rng.standard_normal(grid.n), zero)
        dv = ScalarField(grid, rng.standard_normal(grid.n), zero)

        jac = assemble_jacobian(u, v, rhs)
        assert jac.shape == (2 * grid.n, 2 * grid.n)
        stacked = jac @ np.concatenate([du.values, dv.values])
        d_ru, d_rv = jacobian_apply(u, v, rhs, du, dv)
        assert np.allclose(stacked[:grid.n], d_ru.values, atol=1e-8)
        assert np.allclose(stacked[grid.n:], d_rv.values, atol=1e-8)

    def test_directional_derivative_matches_difference_quotient(self, grid):
        rng = np.random.default_rng(4)
        rhs = get_rhs("radial-coupled-exp")
        u = ScalarField.from_function(grid, half_square)
        v = ScalarField.from_function(grid, lambda x1, x2: half_square(x1, x2) + 0.1 * x1)
        zero = constant_trace(0.0)
        du = ScalarField(grid, rng.uniform(-1.0, 1.0, grid.n), zero)
        dv = ScalarField(grid, rng.uniform(-1.0, 1.0, grid.n), zero)

        eps = 1e-6
        plus = residual_vectors(u.axpy(eps, du), v.axpy(eps, dv), rhs)
        minus = residual_vectors(u.axpy(-eps, du), v.axpy(-eps, dv), rhs)
        d_ru, d_rv = jacobian_apply(u, v, rhs, du, dv)
        scale = 1.0 + np.max(np.abs(d_ru.values))
        assert np.max(np.abs((plus[0] - minus[0]) / (2 * eps) - d_ru.values)) < 1e-5 * scale
        assert np.max(np.abs((plus[1] - minus[1]) / (2 * eps) - d_rv.values)) < 1e-5 * scale

    def test_fields_on_different_grids_rejected(self, grid):
        other = UniformGrid.build(disk(), 1.0 / 8.0)
        u = ScalarField.from_function(grid, half_square)
        v = ScalarField.from_function(other, half_square)
        with pytest.raises(ValueError):
            residual_vectors(u, v, get_rhs("linear"))


class TestSolveConfig:

    @pytest.mark.parametrize("kwargs", [
        {"newton_tol": 0.0},
        {"beta": 1.0},
        {"max_iters": 0},
        {"min_step": 0.0},
        {"linear_solver_tol": -1.0},
    ])
    def test_invalid_parameters(self, kwargs):
        with pytest.raises(ValueError):
            SolveConfig(**kwargs)

    def test_strategy_from_string(self):
        assert SolveConfig(init_strategy="Poisson").init_strategy is InitStrategy.POISSON


class TestNewton:

    @pytest.mark.parametrize("name", [n for n in CATALOG if manufactured_case(n).polynomial])
    def test_quadratic_cases_are_exact(self, name):
        case = manufactured_case(name)
        result = solve_case(case, 1.0 / 16.0)
        assert result.converged
        assert max(solution_errors(case, result)) <= EXACTNESS_FLOOR
        assert result.convexity_report.passed
        assert result.boundary_monotonicity_report.passed

    def test_quadratic_guess_determinant_matches_rhs(self, grid):
        nine = CoupledRHS(name="nine", g_value=lambda u, v, p1, p2: -9.0 + 0.0 * u,
                          f_value=lambda u, v, p1, p2: -9.0 + 0.0 * v)
        bowl = ScalarField.from_function(grid, lambda x1, x2: 3.0 * half_square(x1, x2))
        u, v = initial_guess(grid, nine, bowl, bowl)
        # kappa = 3, not 9: det D^2 u = kappa^2 = -g
        assert np.allclose(u.values, bowl.values, atol=1e-10)
        assert np.allclose(det2(u.hessian_field()), 9.0, atol=1e-6)
        assert np.allclose(det2(v.hessian_field()), 9.0, atol=1e-6)

    def test_poisson_start_on_quadratic_case(self):
        case = manufactured_case("radial-coupled-linear")
        result = solve_case(case, 1.0 / 16.0, config=SolveConfig(init_strategy=InitStrategy.POISSON))
        assert max(solution_errors(case, result)) <= EXACTNESS_FLOOR

    def test_gaussian_case_converges(self):
        case = manufactured_case("exp-radial-coupled")
        result = solve_case(case, 1.0 / 16.0)
        assert result.converged
        assert result.iterations <= 25
        assert result.final_residual <= 1e-9
        assert len(result.step_lengths) == result.iterations
        history = np.array(result.residual_history)
        assert np.all(np.diff(history) < 0.0)
        assert max(solution_errors(case, result)) < 5e-2

    def test_symmetric_data_gives_symmetric_solution(self, grid):
        result = newton_solve(disk(), grid, get_rhs("exp"), constant_trace(0.0), constant_trace(0.0))
        mirrored = result.u.sample_points(grid.points * np.array([-1.0, 1.0]))[0]
        assert np.allclose(mirrored, result.u.values, atol=1e-7)
        assert np.all(result.u.values < 0.0)

    def test_iteration_cap(self):
        case = manufactured_case("exp-radial-coupled")
        with pytest.raises(DidNotConverge) as info:
            solve_case(case, 1.0 / 8.0, config=SolveConfig(max_iters=1))
        assert info.value.iterations == 1
        assert "iterations=1" in info.value.reason()

    def test_boundary_report_flags_bump(self, grid):
        bump = ScalarField.from_function(grid, lambda x1, x2: np.exp(-8.0 * (x1 ** 2 + x2 ** 2)),
                                         trace=constant_trace(0.0))
        report = boundary_monotonicity_report(bump, bump)
        assert not report.passed
        assert report.interior_margin_u < 0.0
        assert report.witness_u is not None


def _error_table(hs, errors):
    table = pd.DataFrame({"case": "synthetic", "h": hs, "error": errors})
    ratio = table["error"].shift(1) / table["error"]
    table["ratio"] = ratio
    table["order"] = np.log(ratio) / np.log(table["h"].shift(1) / table["h"])
    return table


class TestConvergence:

    def test_gaussian_case_ratio_in_band(self):
        table = convergence_study("exp-radial-coupled", [1.0 / 32.0, 1.0 / 64.0])
        assert list(table.columns[:5]) == ["case", "h", "error_u", "error_v", "error"]
        assert table["h"].tolist() == [1.0 / 32.0, 1.0 / 64.0]
        assert np.isnan(table["ratio"].iloc[0])
        assert RATIO_BAND[0] <= table["ratio"].iloc[1] <= RATIO_BAND[1]
        assert (table["iterations"] <= 25).all()
        assert (table["final_residual"] <= 1e-9).all()
        assert convergence_verdict(table)
        assert not convergence_verdict(table, band=(5.0, 6.0))

    def test_verdict_rejects_first_order_ratio(self):
        # order 1.5 gives ratio 2.83, below the band
        table = _error_table([1.0 / 32.0, 1.0 / 64.0], [1e-3, 1e-3 / 2.0 ** 1.5])
        assert not convergence_verdict(table)
        assert convergence_verdict(_error_table([1.0 / 32.0, 1.0 / 64.0], [1e-3, 2.5e-4]))

    def test_verdict_ignores_coarse_pairs(self):
        table = _error_table([1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0], [1e-1, 5e-2, 1e-2, 2.5e-3])
        assert convergence_verdict(table)
        # only pairs with h > 1/32: nothing certifies the order
        assert not convergence_verdict(table.iloc[:3].reset_index(drop=True))

    def test_verdict_on_uneven_refinement(self):
        assert convergence_verdict(_error_table([1.0 / 32.0, 1.0 / 128.0], [1.6e-3, 1e-4]))
        assert not convergence_verdict(_error_table([1.0 / 32.0, 1.0 / 128.0], [1.6e-3, 4e-4]))

    @pytest.mark.slow
    @pytest.mark.parametrize("name", list(CATALOG))
    def test_finest_spacing_converges(self, name):
        case = manufactured_case(name)
        result = solve_case(case, 1.0 / 128.0)
        assert result.converged
        assert result.iterations <= 25
        assert result.final_residual <= 1e-9

    def test_quadratic_case_passes_by_exactness(self):
        table = convergence_study("radial-decoupled", [1.0 / 8.0, 1.0 / 16.0])
        assert table["order"].isna().all()
        assert convergence_verdict(table)

    def test_unknown_case(self):
        with pytest.raises(UnknownCase):
            manufactured_case("cubic")
