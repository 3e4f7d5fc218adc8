"""Shared test settings"""

import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "quermassflow",
    derandomize=True,
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("quermassflow")


@pytest.fixture
def axisym_grid():
    """n=2 axisym grid, 256 colatitudes"""
    from core.surface import build_grid

    return build_grid("axisym", 2, 256)


@pytest.fixture
def perturbed_n2(axisym_grid):
    """pi/4 + 0.05 P_2(cos theta) on the n=2 axisym grid"""
    from core.surface import perturbed_sphere

    return perturbed_sphere(axisym_grid, math.pi / 4, 0.05, 2)
