#!/usr/bin/env python3
"""
Geometry Tests

Domains, the half width a, reflections and cap regions.
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest
from hypothesis import given, seed
from hypothesis import strategies as st

from fields.grid import UniformGrid
from geometry.domains import (
    BUILTIN_DOMAINS,
    Domain2D,
    builtin_domain,
    crescent,
    disk,
    egg,
    ellipse,
    superellipse,
)
from geometry.reflection import cap_region, check_reflection_containment, half_width_a, reflect
from utils.errors import InvalidDomain, LambdaOutOfRange, NonPositiveA


@pytest.mark.parametrize("name, expected", [
    ("disk", 1.0),
    ("ellipse", 2.0),
    ("rect", 1.0),
    ("stadium", 1.0),
    ("egg", 0.8),
])
def test_half_width_a_builtin(name, expected):
    assert half_width_a(builtin_domain(name)) == pytest.approx(expected, abs=1e-8)


def test_half_width_a_egg_matches_dense_sampling():
    domain = egg()
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.85, 0.0, (1_000_000, 2)) * np.array([1.0, 0.2 / 0.85])
    inside = domain.contains(pts[:, 0], pts[:, 1])
    sampled = -pts[inside, 0].min()
    a = half_width_a(domain)
    assert sampled <= a + 1e-12
    assert a - sampled < 1e-3


def test_half_width_a_rejects_domain_right_of_origin():
    shifted = Domain2D(
        name="shifted",
        inside=lambda x1, x2: np.hypot(x1 - 2.0, x2) < 1.0,
        bbox=(0.9, 3.1, -1.1, 1.1),
        boundary_distance=lambda x1, x2: np.hypot(x1 - 2.0, x2) - 1.0,
    )
    with pytest.raises(NonPositiveA):
        half_width_a(shifted)


def test_unknown_domain_name():
    with pytest.raises(InvalidDomain):
        builtin_domain("torus")


@pytest.mark.parametrize("name", sorted(BUILTIN_DOMAINS))
def test_builtin_domains_contain_origin(name):
    assert builtin_domain(name).contains(0.0, 0.0)


@pytest.mark.parametrize("name", ["disk", "ellipse", "stadium"])
def test_mirror_keeps_half_width_of_symmetric_domains(name):
    domain = builtin_domain(name)
    assert half_width_a(domain.mirror()) == pytest.approx(half_width_a(domain), abs=1e-9)


def test_reflect_examples():
    assert reflect((-0.3, 0.2), -0.1) == pytest.approx((0.1, 0.2))
    assert reflect((-0.25, 0.7), -0.25) == (-0.25, 0.7)


@seed(7)
@given(
    x1=st.floats(min_value=-4.0, max_value=4.0),
    x2=st.floats(min_value=-4.0, max_value=4.0),
    lam=st.sampled_from([0.0, -0.125, -0.25, -0.5, -0.75, -1.0]),
)
def test_reflect_is_an_involution(x1, x2, lam):
    x1 = np.round(x1 * 64) / 64
    back = reflect(reflect((x1, x2), lam), lam)
    assert back[0] == x1
    assert back[1] == x2


@pytest.mark.parametrize("name, expected", [
    ("disk", True),
    ("ellipse", True),
    ("stadium", True),
    ("egg", True),
])
def test_reflection_containment_builtin(name, expected):
    report = check_reflection_containment(builtin_domain(name), samples=2000)
    assert report.passed is expected
    assert report.witness is None


def test_reflection_containment_fails_on_crescent():
    report = check_reflection_containment(crescent(), samples=2000)
    assert not report.passed
    point, middle = report.witness
    assert point[0] < 0.0
    assert point[0] < middle[0] < -point[0]
    assert not crescent().contains(*middle)


def test_superellipse_parameters():
    domain = superellipse(center=(0.1, 0.0), semi_axes=(1.0, 0.5), exponent=4.0, skew=0.3)
    assert half_width_a(domain) == pytest.approx(0.9, abs=1e-8)
    assert check_reflection_containment(domain, samples=1000).passed
    with pytest.raises(InvalidDomain):
        superellipse(semi_axes=(0.0, 1.0))


class TestCapRegion:
    h = 1.0 / 64.0

    @pytest.fixture(scope="class")
    def grid(self):
        return UniformGrid.build(disk(), self.h)

    def test_thin_sliver_near_left_boundary(self, grid):
        # nodes sit on multiples of h, so the first nonempty cap lies past -1 + h
        assert cap_region(disk(), grid, -1.0 + self.h / 2, a=1.0).is_empty
        cap = cap_region(disk(), grid, -1.0 + 1.5 * self.h, a=1.0)
        assert not cap.is_empty
        radius = np.hypot(cap.points[:, 0], cap.points[:, 1])
        assert np.all(1.0 - radius <= self.h + 1e-12)

    def test_empty_at_minus_a(self, grid):
        assert cap_region(disk(), grid, -1.0).is_empty

    def test_left_half_at_zero(self, grid):
        cap = cap_region(disk(), grid, 0.0)
        left = np.flatnonzero(grid.points[:, 0] < 0.0)
        assert np.array_equal(np.sort(cap.indices), left)
        assert len(cap.plane_indices) > 0
        assert np.all(grid.points[cap.plane_indices, 0] == 0.0)

    def test_reflected_nodes_stay_in_closure(self, grid):
        for lam in (-0.9, -0.5, -0.1):
            cap = cap_region(disk(), grid, lam)
            r1, r2 = reflect((cap.points[:, 0], cap.points[:, 1]), lam)
            assert np.all(disk().in_closure(r1, r2))

    def test_monotone_in_lambda(self, grid):
        lams = [-0.9, -0.6, -0.3, 0.0]
        caps = [set(cap_region(disk(), grid, lam).indices.tolist()) for lam in lams]
        for small, large in zip(caps, caps[1:]):
            assert small <= large

    @pytest.mark.parametrize("lam", [0.1, -1.5])
    def test_out_of_range(self, grid, lam):
        with pytest.raises(LambdaOutOfRange):
            cap_region(disk(), grid, lam)


def test_ellipse_factory_semi_axes():
    domain = ellipse()
    assert domain.contains(1.9, 0.0)
    assert not domain.contains(0.0, 1.01)
