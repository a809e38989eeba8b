import numpy as np
import pytest

from runtumble.grid import (DistributionField, GridSpec, boundary_shell_mass, build_grid,
                            density, field_from_compact, total_mass)


def make_grid(dim=1, L=4.0, nx=16, nv=4, shape="ball", r_min=0.0, r_max=1.0, dt=0.01):
    return build_grid(GridSpec(dim=dim, box_half_length=L, nx=nx, nv=nv,
                               velocity_shape=shape, r_min=r_min, r_max=r_max, dt=dt))


@pytest.mark.parametrize("bad", [
    dict(dim=4, box_half_length=1.0, nx=16, nv=4),
    dict(dim=1, box_half_length=-1.0, nx=16, nv=4),
    dict(dim=1, box_half_length=1.0, nx=12, nv=4),
    dict(dim=1, box_half_length=1.0, nx=16, nv=6),
    dict(dim=1, box_half_length=1.0, nx=16, nv=4, velocity_shape="cube"),
    dict(dim=1, box_half_length=1.0, nx=16, nv=4, r_min=0.5),
    dict(dim=1, box_half_length=1.0, nx=16, nv=4, velocity_shape="shell",
         r_min=0.8, r_max=0.5),
    dict(dim=1, box_half_length=1.0, nx=16, nv=4, dt=0.0),
])
def test_spec_validation_rejects(bad):
    with pytest.raises(ValueError):
        GridSpec(**bad).validate()


def test_d1_ball_measure_exact():
    grid = make_grid(dim=1, nv=8, r_max=1.0)
    assert grid.velocity_measure == pytest.approx(2.0, abs=1e-14)


def test_d1_shell_measure_exact_on_aligned_radii():
    # radii on cell edges: nv=8 over [-1, 1] has edges at multiples of 0.25
    grid = make_grid(dim=1, nv=8, shape="shell", r_min=0.5, r_max=1.0)
    assert grid.velocity_measure == pytest.approx(1.0, abs=1e-14)
    assert np.all(np.abs(grid.vnodes) >= 0.5)


def test_ball_measure_converges_d2():
    errs = []
    for nv in (8, 16, 32, 64):
        grid = make_grid(dim=2, nv=nv)
        errs.append(abs(grid.velocity_measure - np.pi))
    assert errs[-1] < errs[0]
    assert errs[-1] / np.pi < 0.02


def test_alignment_time_gives_integer_cell_shifts():
    for k in (1, 2, 5):
        grid = make_grid(dim=2, nv=8)
        t = grid.alignment_time(k)
        cells = t * grid.vnodes / grid.dx
        assert np.allclose(cells, np.rint(cells), atol=1e-12)


def test_compact_roundtrip():
    grid = make_grid(dim=2, nx=8, nv=4)
    rng = np.random.default_rng(0)
    vals = rng.random(grid.x_shape + grid.v_shape) * grid.vmask
    f = DistributionField(grid, vals)
    f.validate()
    back = field_from_compact(grid, f.compact())
    assert np.array_equal(back.values, f.values)


def test_field_validation():
    grid = make_grid(dim=1, nx=8, nv=4)
    good = DistributionField(grid, np.ones(grid.x_shape + grid.v_shape))
    good.masked().validate()
    with pytest.raises(ValueError):
        DistributionField(grid, -np.ones(grid.x_shape + grid.v_shape)).validate()
    with pytest.raises(ValueError):
        DistributionField(grid, np.ones((4,) + grid.v_shape)).validate()


def test_density_and_mass_of_uniform_data():
    grid = make_grid(dim=2, nx=8, nv=8)
    f = DistributionField(grid, np.ones(grid.x_shape + grid.v_shape)).masked()
    rho = density(f)
    assert np.allclose(rho.values, grid.velocity_measure)
    # total mass = |box| * |V| for f = 1 on the support
    L = grid.spec.box_half_length
    assert total_mass(f) == pytest.approx((2 * L) ** 2 * grid.velocity_measure, rel=1e-13)


def test_boundary_shell_mass_sees_only_the_rim():
    grid = make_grid(dim=1, nx=16, nv=4)
    vals = np.zeros(grid.x_shape + grid.v_shape)
    vals[8, :] = 1.0  # interior cell
    f = DistributionField(grid, vals).masked()
    assert boundary_shell_mass(f, width_cells=2) == 0.0
    vals[0, :] = 1.0  # rim cell
    f = DistributionField(grid, vals).masked()
    assert boundary_shell_mass(f, width_cells=2) > 0.0
