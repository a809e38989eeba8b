import numpy as np
import pytest

from runtumble.fields import (bessel_potential_integrable, bessel_potential_norms,
                              calderon_zygmund_check, gradient_bound_check,
                              newtonian_potential, solve_field, split_short_long)
from runtumble.grid import GridSpec, SpatialField, build_grid


def make_grid(dim=2, L=4.0, nx=32):
    return build_grid(GridSpec(dim=dim, box_half_length=L, nx=nx, nv=4))


def manufactured(grid, beta):
    """S = product of low-mode cosines; rho = beta*S - Lap S analytically."""
    mesh = grid.x_mesh()
    L = grid.spec.box_half_length
    kx = np.pi / L  # one full period over the box per factor
    S = np.ones(grid.x_shape)
    for m in mesh:
        S = S * np.cos(kx * m)
    lap = -grid.dim * kx**2 * S
    rho = beta * S - lap
    return S, SpatialField(grid, rho)


@pytest.mark.parametrize("dim,beta", [(1, 1), (2, 1), (2, 0), (3, 1), (3, 0)])
def test_spectral_solver_manufactured_solution(dim, beta):
    grid = make_grid(dim=dim, nx=32 if dim < 3 else 16)
    S_exact, rho = manufactured(grid, beta)
    sol = solve_field(rho, beta=beta, want=("S", "grad", "hess"))
    assert np.abs(sol["S"].values - S_exact).max() <= 1e-10
    # spectral derivatives of a single-mode product are exact too
    L = grid.spec.box_half_length
    kx = np.pi / L
    mesh = grid.x_mesh()
    dS0 = -kx * np.sin(kx * mesh[0])
    for m in mesh[1:]:
        dS0 = dS0 * np.cos(kx * m)
    assert np.abs(sol["grad"][0].values - dS0).max() <= 1e-10
    lap = sum(sol["hess"][a][a].values for a in range(dim))
    assert np.abs(lap - (-dim * kx**2 * S_exact)).max() <= 1e-9


def test_beta0_mean_handling():
    grid = make_grid(dim=2, nx=16)
    rho = SpatialField(grid, np.ones(grid.x_shape) + 0.1 * np.cos(np.pi / 4.0 * grid.x_mesh()[0]))
    out = solve_field(rho, beta=0)
    assert out["removed_mean"] == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        solve_field(rho, beta=0, project_mean=False)
    with pytest.raises(ValueError):
        solve_field(SpatialField(make_grid(dim=1), np.zeros(32)), beta=0)


def _random_rho3(L=4.0, nx=16, seed=0):
    grid = build_grid(GridSpec(dim=3, box_half_length=L, nx=nx, nv=4))
    rng = np.random.default_rng(seed)
    mesh = grid.x_mesh()
    r2 = sum(m**2 for m in mesh)
    vals = rng.random(grid.x_shape) * np.exp(-r2)
    return grid, SpatialField(grid, vals)


def test_newtonian_split_reconstruction():
    grid, rho = _random_rho3()
    full = newtonian_potential(rho, order=0)
    short, long_ = split_short_long(rho, order=0)
    err = np.abs(short.values + long_.values - full.values).max()
    assert err <= 1e-8 * np.abs(full.values).max()


def test_long_range_part_bounded_by_mass():
    grid, rho = _random_rho3(seed=1)
    mass = float(grid.x_weight * rho.values.sum())
    _, long_ = split_short_long(rho, order=0)
    assert np.abs(long_.values).max() <= mass / (4.0 * np.pi) * (1.0 + 1e-6)


def test_newtonian_far_field():
    # potential of a compact blob approaches M / (4 pi |x|) away from it
    grid, rho = _random_rho3(L=8.0, nx=32, seed=2)
    mass = float(grid.x_weight * rho.values.sum())
    S = newtonian_potential(rho, order=0)
    i = np.searchsorted(grid.x, 5.0)
    mid = grid.spec.nx // 2
    r = abs(grid.x[i])
    assert S.values[i, mid, mid] == pytest.approx(mass / (4 * np.pi * r), rel=0.05)


def test_split_requires_d3_and_wide_box():
    grid = make_grid(dim=2, nx=16)
    with pytest.raises(ValueError):
        split_short_long(SpatialField(grid, np.ones(grid.x_shape)))
    narrow = build_grid(GridSpec(dim=3, box_half_length=1.5, nx=16, nv=4))
    with pytest.raises(ValueError):
        split_short_long(SpatialField(narrow, np.ones(narrow.x_shape)))


def test_bessel_integrability_thresholds():
    assert bessel_potential_integrable(2.9, 0, 3)
    assert not bessel_potential_integrable(3.0, 0, 3)
    assert bessel_potential_integrable(1.4, 1, 3)
    assert not bessel_potential_integrable(1.5, 1, 3)
    with pytest.raises(ValueError):
        bessel_potential_norms(3.0, order=0, d=3)
    with pytest.raises(ValueError):
        bessel_potential_norms(1.5, order=1, d=3)


def test_bessel_norm_quadrature_converges():
    for p, order in ((2.0, 0), (9.0 / 7.0, 1)):
        coarse = bessel_potential_norms(p, order=order, d=3, n_radial=400)
        fine = bessel_potential_norms(p, order=order, d=3, n_radial=800)
        assert abs(fine - coarse) / fine < 0.005


def test_bessel_l1_norm_closed_form():
    # the Gaussian substitution closes the s-integral of the kernel exactly:
    # int G = 2^d for this radial normalization
    for d in (2, 3):
        assert bessel_potential_norms(1.0, order=0, d=d) == pytest.approx(2.0**d, rel=5e-3)


def test_gradient_bound_check():
    grid, rho = _random_rho3(seed=3)
    out = gradient_bound_check(rho, p=9.0 / 7.0)
    assert out["passed"]
    with pytest.raises(ValueError):
        gradient_bound_check(rho, p=2.0)


def test_calderon_zygmund_constant_stable_under_refinement():
    ratios = []
    for nx in (16, 32):
        grid = build_grid(GridSpec(dim=2, box_half_length=4.0, nx=nx, nv=4))
        rng = np.random.default_rng(5)
        mesh = grid.x_mesh()
        vals = rng.random(grid.x_shape) * np.exp(-sum(m**2 for m in mesh))
        ratios.append(calderon_zygmund_check(SpatialField(grid, vals), p=1.5)["ratio"])
    assert ratios[0] > 0
    assert abs(ratios[1] - ratios[0]) / ratios[0] < 0.2
    with pytest.raises(ValueError):
        calderon_zygmund_check(SpatialField(grid, vals), p=1.0)
