"""
Geometry Module

Bounded planar domains convex in the x1 direction, their reflection
structure and the cap regions used by the moving-plane sweep.

Available Objects:
- Domain2D and the builtin domains (disk, ellipse, rect, stadium, egg, crescent)
- Superellipse custom domains
- half_width_a, reflect, cap_region, check_reflection_containment
"""

from .domains import (
    BUILTIN_DOMAINS,
    Domain2D,
    builtin_domain,
    crescent,
    disk,
    egg,
    ellipse,
    rectangle,
    stadium,
    superellipse,
)
from .reflection import (
    CapRegion,
    ContainmentReport,
    cap_region,
    check_reflection_containment,
    half_width_a,
    reflect,
)

__all__ = [
    'BUILTIN_DOMAINS',
    'Domain2D',
    'builtin_domain',
    'crescent',
    'disk',
    'egg',
    'ellipse',
    'rectangle',
    'stadium',
    'superellipse',
    'CapRegion',
    'ContainmentReport',
    'cap_region',
    'check_reflection_containment',
    'half_width_a',
    'reflect',
]
