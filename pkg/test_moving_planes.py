#!/usr/bin/env python3
"""
Moving Planes Tests

Reflected differences, the sweep, monotonicity, the linearized inequality
and the narrow-strip barrier.
"""

import math
import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from fields.grid import UniformGrid
from fields.scalar_field import ScalarField, constant_trace
from geometry.domains import disk, egg
from moving_planes.barrier import (
    BarrierParams,
    barrier_epsilon0,
    barrier_psi,
    barrier_ratio_bound,
    sample_barrier_ratios,
)
from moving_planes.inequality import inequality_residual
from moving_planes.sweep import (
    SweepConfig,
    default_sign_tol,
    monotonicity_check,
    plane_positions,
    reflect_difference,
    sweep,
    symmetry_defect,
)
from nonlinearity.coupled_rhs import Which, get_rhs
from solver.manufactured import manufactured_case, solve_case
from solver.newton import newton_solve
from utils.errors import BarrierDomainError, LambdaOutOfRange, NoEpsilonFound

H = 1.0 / 32.0


def half_square(x1, x2):
    return 0.5 * (x1 ** 2 + x2 ** 2)


@pytest.fixture(scope="module")
def grid():
    return UniformGrid.build(disk(), H)


@pytest.fixture(scope="module")
def bowl(grid):
    return ScalarField.from_function(grid, half_square)


@pytest.fixture(scope="module")
def ramp(grid):
    return ScalarField.from_function(grid, lambda x1, x2: x1 + 0.0 * x2)


class TestReflectDifference:

    def test_linear_field(self, ramp):
        cap = reflect_difference(ramp, -0.3)
        assert len(cap) > 0
        assert np.allclose(cap.values, 2.0 * (-0.3 - cap.points[:, 0]), atol=1e-12)
        assert np.all(cap.values > 0.0)

    def test_quadratic_field(self, grid, bowl):
        lam = -0.25
        cap = reflect_difference(bowl, lam)
        expected = 2.0 * lam * (lam - cap.points[:, 0])
        assert np.all(np.abs(cap.values - expected) <= H * H)
        k = int(grid.index_at(*grid.nearest_node(-0.5, 0.0)))
        at = np.flatnonzero(cap.indices == k)[0]
        assert cap.values[at] == pytest.approx(-0.125, abs=1e-12)

    def test_cap_maximum_and_grid_array(self, grid, ramp):
        cap = reflect_difference(ramp, -0.5)
        value, where = cap.max()
        assert value == pytest.approx(2.0 * (-0.5 - np.min(cap.points[:, 0])))
        assert where[0] == pytest.approx(np.min(cap.points[:, 0]))
        array = cap.to_grid_array(grid)
        assert array.shape == grid.shape
        assert np.count_nonzero(np.isfinite(array)) == len(cap) + len(cap.plane_indices)

    def test_empty_cap_at_minus_a(self, bowl):
        cap = reflect_difference(bowl, -1.0)
        assert len(cap) == 0
        assert cap.max() == (-np.inf, None)

    def test_plane_out_of_range(self, bowl):
        with pytest.raises(LambdaOutOfRange):
            reflect_difference(bowl, 0.25)


class TestSweep:

    def test_planes_end_at_zero(self, grid):
        lams = plane_positions(grid, 64)
        assert len(lams) == 64
        assert lams[-1] == 0.0
        assert np.all(np.diff(lams) > 0.0)
        assert lams[0] > np.min(grid.points[:, 0])

    def test_symmetric_convex_pair(self, bowl):
        report = sweep(bowl, bowl, config=SweepConfig(lambda_count=32), rhs=get_rhs("linear"))
        assert report.a == pytest.approx(1.0, abs=1e-8)
        assert report.sign_tol == pytest.approx(default_sign_tol(bowl, bowl))
        assert report.all_planes_pass
        assert report.lambda_bar == 0.0
        assert report.monotonicity_pass
        assert report.symmetry_defect_u <= 1e-12
        assert report.symmetry_defect_v <= 1e-12

        table = report.to_frame()
        assert len(table) == 32
        assert list(table.columns) == ["lambda", "max_U", "max_V", "argmax_x1", "argmax_x2", "cap_nodes",
                                       "min_inequality_g", "min_inequality_f"]
        assert (table["max_U"] <= report.sign_tol).all()
        assert table["cap_nodes"].is_monotonic_increasing
        finite = table["min_inequality_g"][np.isfinite(table["min_inequality_g"])]
        assert (finite.abs() <= 1e-6).all()

        summary = report.summary()
        assert summary["violation_count"] == 0
        assert summary["lambda_bar"] == 0.0

    def test_increasing_field_fails_from_first_plane(self, ramp):
        config = SweepConfig(lambda_count=16, sign_tol=1e-6)
        report = sweep(ramp, ramp, config=config)
        assert report.lambda_bar == pytest.approx(-report.a)
        assert not report.all_planes_pass
        assert set(report.violations["field"]) == {"U", "V"}
        assert report.violations["lambda"].nunique() == 16
        assert (report.violations["value"] > 1e-6).all()
        assert not report.monotonicity_pass
        assert report.monotonicity_u.witness is not None

    def test_threads_do_not_change_the_result(self, bowl):
        serial = sweep(bowl, bowl, config=SweepConfig(lambda_count=16))
        pooled = sweep(bowl, bowl, config=SweepConfig(lambda_count=16, threads=4))
        assert serial.to_frame().equals(pooled.to_frame())
        assert serial.lambda_bar == pooled.lambda_bar

    def test_asymmetric_domain(self):
        grid = UniformGrid.build(egg(), 1.0 / 32.0)
        w = ScalarField.from_function(grid, half_square)
        report = sweep(w, w, config=SweepConfig(lambda_count=16))
        assert report.a == pytest.approx(0.8, abs=1e-8)
        assert report.all_planes_pass
        assert report.symmetry_defect_u <= report.sign_tol

    @pytest.mark.parametrize("kwargs", [
        {"lambda_count": 1},
        {"sign_tol": 0.0},
        {"interior_margin": -1.0},
        {"threads": 0},
    ])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ValueError):
            SweepConfig(**kwargs)


class TestMonotonicity:

    def test_bowl_is_decreasing_on_the_left(self, bowl):
        report = monotonicity_check(bowl)
        assert report.passed
        assert report.checked > 0
        assert report.max_derivative == pytest.approx(-H, abs=1e-9)
        assert report.witness is None

    def test_ramp_fails_with_witness(self, ramp):
        report = monotonicity_check(ramp, sign_tol=1e-3)
        assert not report.passed
        assert report.max_derivative == pytest.approx(1.0)
        assert report.worst_margin < 0.0
        assert report.witness[0] <= -H

    def test_decreasing_ramp_passes(self, grid):
        w = ScalarField.from_function(grid, lambda x1, x2: -x1 + 0.0 * x2)
        assert monotonicity_check(w, config=SweepConfig(sign_tol=1e-3)).passed

    def test_symmetry_defect_of_tilted_field(self, grid):
        w = ScalarField.from_function(grid, lambda x1, x2: half_square(x1, x2) + 0.1 * x1)
        assert symmetry_defect(w) == pytest.approx(0.2 * (1.0 - H), abs=1e-9)


class TestInequality:

    def test_exact_pair_has_vanishing_residual(self, grid, bowl):
        rhs = get_rhs("linear")
        result = inequality_residual(bowl, bowl, -0.25, rhs, Which.G)
        assert np.any(result.valid)
        values = result.values[result.valid]
        assert np.all(np.isfinite(values))
        assert np.max(np.abs(values)) <= 1e-6
        assert np.all(np.isnan(result.values[~result.valid]))
        scale = 2.0 * bowl.max_abs()
        assert result.min_value() >= -50.0 * H * H * scale

    def test_precondition_masks_increasing_reflection(self, bowl):
        result = inequality_residual(bowl, bowl, -0.25, get_rhs("linear"), Which.F)
        # d/dx1 u(2 lambda - x1, x2) = x1 - 2 lambda, positive for x1 > -0.5
        assert np.all(result.points[result.valid, 0] <= -0.5 + H + 1e-12)

    def test_interior_values_respect_standoff(self, bowl):
        result = inequality_residual(bowl, bowl, -0.25, get_rhs("linear"))
        near = result.interior_values(0.0)
        far = result.interior_values(4 * H)
        assert len(far) <= len(near)

    def test_empty_cap(self, bowl):
        result = inequality_residual(bowl, bowl, -1.0, get_rhs("linear"))
        assert len(result) == 0
        assert result.min_value() == math.inf


class TestBarrier:

    def test_psi_endpoints(self):
        params = BarrierParams(m=1.0, C0=1.0, a=1.0, epsilon=0.1)
        assert barrier_psi(-1.0, params) == pytest.approx(math.e - 1.0)
        assert barrier_psi(-0.9, params) == pytest.approx(math.e - math.sqrt(math.e))
        values = barrier_psi(np.linspace(-1.0, -0.9, 11), params)
        assert np.all(np.diff(values) < 0.0)
        with pytest.raises(BarrierDomainError):
            barrier_psi(-0.5, params)

    def test_ratio_bound(self):
        assert barrier_ratio_bound(BarrierParams(m=1.0, C0=1.0, epsilon=0.01)) == pytest.approx(-1423.7, abs=0.1)
        assert barrier_ratio_bound(BarrierParams(m=1.0, C0=1.0, epsilon=1.0)) == math.inf

    def test_epsilon0_reference_value(self):
        eps0 = barrier_epsilon0(1.0, 1.0, 1.0, 1.0)
        assert eps0 == pytest.approx(0.1734, abs=1e-3)
        assert barrier_ratio_bound(BarrierParams(m=1.0, C0=1.0, epsilon=eps0)) == pytest.approx(-1.0, abs=1e-6)

    def test_epsilon0_grows_with_ellipticity(self):
        widths = [barrier_epsilon0(m, 1.0) for m in (0.5, 1.0, 2.0)]
        assert widths[0] < widths[1] < widths[2]

    def test_epsilon0_shrinks_with_coupling(self):
        assert barrier_epsilon0(1.0, 1.0, 4.0, 4.0) < barrier_epsilon0(1.0, 1.0, 1.0, 1.0)

    def test_sampled_ratios_pass_inside_epsilon0(self):
        eps0 = barrier_epsilon0(1.0, 1.0)
        params = BarrierParams(m=1.0, C0=1.0, epsilon=0.5 * eps0)
        sample = sample_barrier_ratios(params, samples=2000, seed=3)
        assert sample.passed
        assert sample.max_ratio_1 <= sample.bound + 1e-9
        assert sample.max_ratio_2 <= sample.bound + 1e-9
        assert sample.product > 1.0

    def test_sampled_ratios_fail_on_wide_strip(self):
        sample = sample_barrier_ratios(BarrierParams(m=1.0, C0=1.0, epsilon=0.9), samples=500)
        assert not sample.passed

    @pytest.mark.parametrize("kwargs", [
        {"m": 0.0, "C0": 1.0},
        {"m": 1.0, "C0": -1.0},
        {"m": 1.0, "C0": 1.0, "epsilon": 2.0},
        {"m": 1.0, "C0": 1.0, "epsilon": 0.0},
    ])
    def test_invalid_params(self, kwargs):
        with pytest.raises(BarrierDomainError):
            BarrierParams(**kwargs)

    def test_no_epsilon_for_huge_coupling(self):
        with pytest.raises(NoEpsilonFound):
            barrier_epsilon0(1e-6, 1.0, 1e30, 1e30)


class TestSolvedFields:
    h = 1.0 / 64.0

    @pytest.fixture(scope="class")
    def egg_solution(self):
        domain = egg()
        grid = UniformGrid.build(domain, self.h)
        return newton_solve(domain, grid, get_rhs("linear"), constant_trace(0.5), constant_trace(0.5))

    @pytest.fixture(scope="class", params=["radial-coupled-linear", "exp-radial-coupled"])
    def manufactured(self, request):
        case = manufactured_case(request.param)
        return case, solve_case(case, self.h)

    def test_egg_solution_is_monotone_but_not_symmetric(self, egg_solution):
        u, v = egg_solution.u, egg_solution.v
        tol = default_sign_tol(u, v)
        assert monotonicity_check(u, sign_tol=tol).passed
        assert monotonicity_check(v, sign_tol=tol).passed
        assert symmetry_defect(u) > 10.0 * tol
        assert symmetry_defect(v) > 10.0 * tol

    def test_egg_sweep_has_no_violations(self, egg_solution):
        report = sweep(egg_solution.u, egg_solution.v, config=SweepConfig(lambda_count=16),
                       rhs=get_rhs("linear"))
        assert report.a == pytest.approx(0.8, abs=1e-8)
        assert report.all_planes_pass
        assert len(report.violations) == 0
        table = report.to_frame()
        assert (table["max_U"] <= report.sign_tol).all()
        assert (table["max_V"] <= report.sign_tol).all()

    @pytest.mark.parametrize("which", [Which.G, Which.F])
    def test_inequality_on_solved_case(self, manufactured, which):
        case, result = manufactured
        u, v = result.u, result.v
        scale = u.max_abs() + v.max_abs()
        checked = 0
        for lam in (-0.75, -0.5, -0.25):
            res = inequality_residual(u, v, lam, case.rhs, which)
            values = res.interior_values(2.0 * self.h)
            assert np.all(np.isfinite(values))
            assert res.min_value(2.0 * self.h) >= -50.0 * self.h ** 2 * scale
            checked += len(values)
        # the reflected gradient precondition leaves nodes only for lam >= -0.5
        assert checked > 0
