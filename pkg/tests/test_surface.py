"""Grids, radial graphs and pointwise geometry"""

import math

import numpy as np
import pytest


def test_grid_measures():
    """Weights integrate the round sphere exactly"""
    from core.surface import build_grid

    assert build_grid("full2d", 2, (64, 128)).total_measure() == pytest.approx(4 * math.pi, abs=1e-10)
    assert build_grid("axisym", 3, 512).total_measure() == pytest.approx(2 * math.pi**2, rel=1e-12)
    assert build_grid("axisym", 2, 256).total_measure() == pytest.approx(4 * math.pi, rel=1e-12)


def test_grid_rejects_bad_requests():
    """Unknown modes, full2d outside n=2, coarse or odd resolutions"""
    from core.errors import DomainError
    from core.surface import build_grid

    with pytest.raises(DomainError):
        build_grid("icosahedral", 2, 64)
    with pytest.raises(DomainError):
        build_grid("full2d", 3, 64)
    with pytest.raises(DomainError):
        build_grid("axisym", 2, 8)
    with pytest.raises(DomainError):
        build_grid("full2d", 2, (32, 63))


def test_full2d_default_longitudes():
    """A single count gives twice as many longitudes"""
    from core.surface import build_grid

    grid = build_grid("full2d", 2, 32)
    assert grid.shape == (32, 64)
    assert grid.min_spacing() < grid.h_theta


def test_geodesic_sphere_range(axisym_grid):
    """Open hemisphere: 0 and pi/2 rejected, tiny radii accepted"""
    from core.errors import DomainError
    from core.surface import geodesic_sphere

    g = geodesic_sphere(axisym_grid, math.pi / 4)
    assert np.all(g.rho == math.pi / 4)
    assert geodesic_sphere(axisym_grid, 1e-9).rho.min() > 0.0
    with pytest.raises(DomainError):
        geodesic_sphere(axisym_grid, 0.0)
    with pytest.raises(DomainError):
        geodesic_sphere(axisym_grid, math.pi / 2)


def test_perturbed_sphere(axisym_grid):
    """eps = 0 is the sphere; the P_2 bump peaks at the poles"""
    from core.errors import DomainError
    from core.surface import geodesic_sphere, perturbed_sphere

    flat = perturbed_sphere(axisym_grid, math.pi / 4, 0.0, 2)
    np.testing.assert_array_equal(flat.rho, geodesic_sphere(axisym_grid, math.pi / 4).rho)

    g = perturbed_sphere(axisym_grid, math.pi / 4, 0.05, 2)
    # poles are not nodes, the first node sits h/2 away
    assert g.rho.max() == pytest.approx(math.pi / 4 + 0.05, abs=1e-5)
    assert perturbed_sphere(axisym_grid, math.pi / 4, 0.4, 2).rho.max() < math.pi / 2
    with pytest.raises(DomainError):
        perturbed_sphere(axisym_grid, math.pi / 4, 0.05, 0)
    with pytest.raises(DomainError):
        perturbed_sphere(axisym_grid, math.pi / 4, 0.05, 2, order=1)


def test_radial_graph_validation(axisym_grid):
    """Wrong shapes and out-of-range radii are rejected"""
    from core.errors import DomainError
    from core.surface import RadialGraph

    with pytest.raises(DomainError):
        RadialGraph(axisym_grid, np.full(10, 0.5))
    rho = np.full(axisym_grid.shape, 0.5)
    rho[3] = math.pi / 2
    with pytest.raises(DomainError):
        RadialGraph(axisym_grid, rho)


def test_radial_graph_save_load(tmp_path):
    """Saved graphs reload onto the same grid"""
    from core.surface import RadialGraph, build_grid, perturbed_sphere

    g = perturbed_sphere(build_grid("full2d", 2, 16), 0.6, 0.03, 2, order=2)
    g.save(tmp_path / "g.json")
    back = RadialGraph.load(tmp_path / "g.json")
    assert back.grid.shape == g.grid.shape
    np.testing.assert_array_equal(back.rho, g.rho)


@pytest.mark.parametrize("mode,n", [("axisym", 2), ("axisym", 4), ("full2d", 2)])
def test_sphere_geometry(mode, n):
    """Constant radius: u = sin rho, kappa = cot rho, v = 1"""
    from core.surface import build_grid, compute_geometry, geodesic_sphere

    grid = build_grid(mode, n, 32)
    f = compute_geometry(geodesic_sphere(grid, math.pi / 3))
    np.testing.assert_allclose(f.u, math.sqrt(3) / 2, rtol=1e-14)
    np.testing.assert_allclose(f.v, 1.0, rtol=1e-14)
    f = compute_geometry(geodesic_sphere(grid, math.pi / 4))
    assert f.kappa.shape == grid.shape + (n,)
    np.testing.assert_allclose(f.kappa, 1.0, rtol=1e-13)
    assert f.is_convex


def test_integrate_sphere_closed_forms():
    """Area and total mean curvature of B_rho for n = 2"""
    from core.surface import build_grid, compute_geometry, geodesic_sphere, integrate

    for mode in ("axisym", "full2d"):
        f = compute_geometry(geodesic_sphere(build_grid(mode, 2, 64), math.pi / 4))
        assert integrate(f, 1.0) == pytest.approx(2 * math.pi, abs=1e-10)
        assert integrate(f, 0.0) == 0.0
        rho = math.pi / 4
        expected = 2 * 4 * math.pi * math.cos(rho) * math.sin(rho)
        assert integrate(f, f.sigma[..., 1]) == pytest.approx(expected, rel=1e-12)


def test_minkowski_residual_on_spheres():
    """Both sides agree on geodesic spheres for every k"""
    from core.errors import DomainError
    from core.surface import build_grid, compute_geometry, geodesic_sphere, integrate
    from core.surface import minkowski_residual

    for n in (2, 3, 4):
        f = compute_geometry(geodesic_sphere(build_grid("axisym", n, 64), 0.9))
        for k in range(n):
            rhs = (n - k) * integrate(f, f.phi_prime * f.sigma[..., k])
            assert abs(minkowski_residual(f, k)) <= 1e-10 * abs(rhs)
        with pytest.raises(DomainError):
            minkowski_residual(f, n)


def test_support_gradient_residual_on_sphere():
    """Constant radius: both sides vanish"""
    from core.surface import build_grid, compute_geometry, geodesic_sphere
    from core.surface import support_gradient_residual

    for mode in ("axisym", "full2d"):
        f = compute_geometry(geodesic_sphere(build_grid(mode, 2, 32), 0.7))
        assert support_gradient_residual(f) == 0.0


def test_support_gradient_residual_small(perturbed_n2):
    """u_theta = h(grad Phi) up to the stencil error"""
    from core.surface import compute_geometry, support_gradient_residual

    assert support_gradient_residual(compute_geometry(perturbed_n2)) < 1e-4


def test_full2d_matches_axisym_curvatures():
    """An axisymmetric shape has the same curvatures on both grids"""
    from core.surface import build_grid, compute_geometry, perturbed_sphere

    full = compute_geometry(perturbed_sphere(build_grid("full2d", 2, 48), 0.7, 0.05, 2))
    axi = compute_geometry(perturbed_sphere(build_grid("axisym", 2, 48), 0.7, 0.05, 2))
    for lon in (0, 17, 60):
        np.testing.assert_allclose(full.kappa[:, lon, :], axi.kappa, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(full.dmu.sum(axis=1), axi.dmu, rtol=1e-12)


def test_convexity_flag():
    """A strong ell=4 bump on a large sphere loses convexity"""
    from core.surface import build_grid, compute_geometry, perturbed_sphere

    grid = build_grid("axisym", 2, 128)
    assert compute_geometry(perturbed_sphere(grid, math.pi / 4, 0.02, 2)).is_convex
    f = compute_geometry(perturbed_sphere(grid, 1.2, 0.3, 6))
    assert not f.is_convex
    assert f.min_curvature < 0.0


def test_polar_filter():
    """High longitude modes vanish near the poles and survive at the equator"""
    from core.surface import build_grid, polar_filter

    grid = build_grid("full2d", 2, 32)
    field = np.cos(8 * grid.lon)[None, :] * np.ones(grid.shape)
    out = polar_filter(field, grid)
    np.testing.assert_allclose(out[0], 0.0, atol=1e-13)
    np.testing.assert_allclose(out[16], field[16], atol=1e-13)

    zonal = np.cos(grid.theta)[:, None] * np.ones(grid.shape)
    np.testing.assert_allclose(polar_filter(zonal, grid), zonal, atol=1e-13)
    assert grid.longitude_cutoffs().min() == 1

    axi = build_grid("axisym", 2, 32)
    values = np.arange(32.0)
    assert polar_filter(values, axi) is values
