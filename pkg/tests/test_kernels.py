import numpy as np
import pytest

from runtumble.fields import solve_field
from runtumble.grid import DistributionField, GridSpec, SpatialField, build_grid, density
from runtumble.kernels import (KernelSpec, evaluate_kernel, kernel_components,
                               kernel_mixed_norm, loss_rate, mixed_norm_bound_report,
                               scattering_apply)


def make_scene(dim=1, L=4.0, nx=16, nv=2, seed=0, beta=1):
    grid = build_grid(GridSpec(dim=dim, box_half_length=L, nx=nx, nv=nv))
    rng = np.random.default_rng(seed)
    mesh = grid.x_mesh()
    rho_vals = rng.random(grid.x_shape) * np.exp(-sum(m**2 for m in mesh))
    fields = solve_field(SpatialField(grid, rho_vals), beta=beta,
                         want=("S", "grad", "hess"))
    f_vals = rng.random(grid.x_shape + grid.v_shape) * grid.vmask
    f = DistributionField(grid, f_vals)
    return grid, fields, f, rng


def test_spec_validation():
    KernelSpec(family="hyp3", signs=(1, -1, 1, -1)).validate()
    with pytest.raises(ValueError):
        KernelSpec(family="nope").validate()
    with pytest.raises(ValueError):
        KernelSpec(coefficient=-1.0).validate()
    with pytest.raises(ValueError):
        KernelSpec(family="hyp3", signs=(1, 2, 1, -1)).validate()


def test_missing_fields_rejected():
    grid, fields, f, _ = make_scene()
    with pytest.raises(ValueError):
        kernel_components(KernelSpec(family="hyp1"), {"S": fields["S"]}, grid)


def _dense_matrix(A, B, grid):
    """T[x..., j, j'] = A[x..., j] + B[x..., j'] as an explicit array."""
    K = grid.n_vnodes
    shape = grid.x_shape
    Af = A if isinstance(A, np.ndarray) else np.full(shape + (K,), float(A))
    Bf = B if isinstance(B, np.ndarray) else np.full(shape + (K,), float(B))
    return Af[..., :, None] + Bf[..., None, :]


@pytest.mark.parametrize("family", ["constant", "hyp1", "hyp2", "hyp3"])
def test_scattering_matches_dense_oracle(family):
    grid, fields, f, _ = make_scene(nv=2)
    spec = KernelSpec(family=family, coefficient=0.4, epsilon=1.0)
    A, B = kernel_components(spec, fields, grid)
    T = _dense_matrix(A, B, grid)
    w = grid.hv ** grid.dim
    fm = f.compact()
    gain = w * np.einsum("...jk,...k->...j", T, fm)
    loss = fm * (w * T.sum(axis=-2))
    dt = 0.01
    oracle = fm + dt * (gain - loss)
    out = scattering_apply(f, spec, fields, dt)
    assert np.abs(out.compact() - oracle).max() <= 1e-14 * max(1.0, np.abs(oracle).max())


@pytest.mark.parametrize("family", ["constant", "hyp1", "hyp2", "hyp3"])
def test_scattering_mass_neutral_pointwise(family):
    grid, fields, f, _ = make_scene(dim=2, nx=8, nv=4, seed=3)
    spec = KernelSpec(family=family, coefficient=0.3)
    out = scattering_apply(f, spec, fields, 0.02)
    rho_before = density(f).values
    rho_after = density(out).values
    assert np.abs(rho_after - rho_before).max() <= 1e-12 * max(1.0, rho_before.max())


def test_scattering_positivity_and_dt_guard():
    grid, fields, f, _ = make_scene(nv=4, seed=4)
    spec = KernelSpec(family="hyp2", coefficient=1.0)
    rate = loss_rate(spec, fields, grid)
    dt_ok = 0.5 / float(rate.max())
    out = scattering_apply(f, spec, fields, dt_ok)
    assert out.values.min() >= 0.0
    with pytest.raises(ValueError):
        scattering_apply(f, spec, fields, 2.0 / float(rate.max()))


def test_evaluate_kernel_matches_components_at_nodes():
    # epsilon chosen so every offset eps * v lands on grid nodes
    grid, fields, f, _ = make_scene(dim=1, L=4.0, nx=16, nv=2, seed=5)
    eps = grid.dx / grid.hv * 2.0  # eps * v_j is a whole number of cells
    for family in ("constant", "hyp1", "hyp2", "hyp3"):
        spec = KernelSpec(family=family, coefficient=0.7, epsilon=eps)
        A, B = kernel_components(spec, fields, grid)
        T = _dense_matrix(A, B, grid)
        for i in (0, 5, 11):
            for j in range(grid.n_vnodes):
                for jp in range(grid.n_vnodes):
                    val = evaluate_kernel(spec, fields, grid, [grid.x[i]],
                                          grid.vnodes[j], grid.vnodes[jp])
                    assert val == pytest.approx(T[i, j, jp], abs=1e-12)


def test_saturation_caps_kernel():
    grid, fields, f, _ = make_scene(seed=6)
    spec = KernelSpec(family="hyp1", coefficient=5.0, saturation=0.3)
    A, B = kernel_components(spec, fields, grid)
    T = _dense_matrix(A, B, grid)
    assert T.max() <= 0.3 + 1e-14


def test_mixed_norm_rejects_bad_exponent_order():
    grid, fields, f, _ = make_scene()
    spec = KernelSpec(family="hyp3")
    with pytest.raises(ValueError):
        kernel_mixed_norm(spec, fields, grid, 1.5, 2.0, 1.0)


def test_mixed_norm_constant_kernel_analytic():
    grid, fields, f, _ = make_scene(dim=1, L=2.0, nx=16, nv=4)
    spec = KernelSpec(family="constant", coefficient=0.9)
    got = kernel_mixed_norm(spec, fields, grid, 2.0, 1.0, 1.0)
    expect = 0.9 * grid.velocity_measure**2 * (2 * grid.spec.box_half_length) ** 0.5
    assert got == pytest.approx(expect, rel=1e-12)


def test_mixed_norm_bound_report():
    grid, fields, f, _ = make_scene(dim=2, nx=16, nv=4, seed=7)
    spec = KernelSpec(family="hyp3", coefficient=0.5)
    rep = mixed_norm_bound_report(spec, fields, grid, 4.5, 1.8, 4.5)
    assert rep["passed"] and rep["ratio"] <= 1.05
    with pytest.raises(ValueError):
        mixed_norm_bound_report(KernelSpec(family="hyp1"), fields, grid, 4.5, 1.8, 4.5)
