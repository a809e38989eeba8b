"""Chemoattractant field solves and the potential-theory bounds.

The screened/unscreened equation beta*S - Lap S = rho is solved spectrally
on the periodic box. For the unscreened d=3 case the Newtonian potential is
also available as a direct convolution with the tabulated kernel
1/(4 pi |x|), split into its short (|x| <= 1) and long (|x| >= 1) parts;
the truncated kernels are bounded by 1/(4 pi), which is what makes the long
parts a-priori bounded by the mass.
"""

import numpy as np
from scipy.integrate import quad

from runtumble.grid import PhaseGrid, SpatialField
from runtumble.norms import spatial_norm

_SPHERE_AREA = {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}


def _k_squared(grid):
    d = grid.dim
    k = grid.k
    mesh = np.meshgrid(*([k] * d), indexing="ij")
    return mesh, sum(c * c for c in mesh)


def solve_field(rho: SpatialField, beta, want=("S",), project_mean=True) -> dict:
    """Spectral solve of beta*S - Lap S = rho with requested derivatives.

    want is a subset of {"S", "grad", "hess"}. For beta=0 the zero mode is
    projected out (torus solvability); with project_mean=False a nonzero-mean
    rho is rejected instead. Returns a dict with "S", optionally "grad"
    (list of d components) and "hess" (d x d nested list).
    """
    grid = rho.grid
    if beta not in (0, 1):
        raise ValueError("beta must be 0 or 1")
    if beta == 0 and grid.dim < 2:
        raise ValueError("beta=0 is only supported for d >= 2")
    unknown = set(want) - {"S", "grad", "hess"}
    if unknown:
        raise ValueError(f"unknown derivative requests {sorted(unknown)}")

    rho_hat = np.fft.fftn(rho.values)
    kmesh, k2 = _k_squared(grid)
    denom = beta + k2
    if beta == 0:
        mean = rho_hat.flat[0].real / rho.values.size
        if not project_mean:
            if abs(mean) > 1e-13 * max(1.0, np.abs(rho.values).max()):
                raise ValueError(
                    f"beta=0 with nonzero-mean rho (mean={mean:.3e}): "
                    "the torus problem is unsolvable without zero-mode projection")
        rho_hat.flat[0] = 0.0
        denom = denom.copy()
        denom.flat[0] = 1.0

    s_hat = rho_hat / denom
    out = {}
    if "S" in want:
        out["S"] = SpatialField(grid, np.fft.ifftn(s_hat).real, tag="S")
    if "grad" in want:
        out["grad"] = [
            SpatialField(grid, np.fft.ifftn(1j * kmesh[a] * s_hat).real, tag=f"gradS_{a}")
            for a in range(grid.dim)
        ]
    if "hess" in want:
        out["hess"] = [
            [
                SpatialField(grid, np.fft.ifftn(-kmesh[a] * kmesh[b] * s_hat).real,
                             tag=f"hessS_{a}{b}")
                for b in range(grid.dim)
            ]
            for a in range(grid.dim)
        ]
    if beta == 0:
        out["removed_mean"] = mean
    return out


def _radius_mesh(grid):
    """Min-image offset radius indexed in FFT order (index 0 = zero offset)."""
    n = grid.spec.nx
    off = grid.dx * np.fft.fftfreq(n, d=1.0 / n)
    mesh = np.meshgrid(*([off] * grid.dim), indexing="ij")
    return np.sqrt(sum(c * c for c in mesh))


def _newton_kernel(grid, order, part):
    """Tabulated d=3 kernel 1/(4 pi |x|^(1+order)) restricted to a radial part.

    part is "short" (|x| <= 1), "long" (|x| >= 1) or "full". The origin cell
    gets the cell average over the equal-volume ball, keeping the quadrature
    error of the singular cell O(h).
    """
    r = _radius_mesh(grid)
    h = grid.dx
    with np.errstate(divide="ignore"):
        if order == 0:
            ker = 1.0 / (4.0 * np.pi * r)
        else:
            ker = 1.0 / (4.0 * np.pi * r * r)
    a_eq = (3.0 * h**3 / (4.0 * np.pi)) ** (1.0 / 3.0)
    # cell averages of the integrable singularity over the equal-volume ball
    ker[tuple([0] * 3)] = (a_eq**2 / 2.0 if order == 0 else a_eq) / h**3
    if part == "short":
        ker = np.where(r <= 1.0, ker, 0.0)
    elif part == "long":
        # strict inequality so grid offsets exactly on the cutoff sphere are
        # not counted twice; short + long then partitions the full kernel
        ker = np.where(r > 1.0, ker, 0.0)
    elif part != "full":
        raise ValueError(f"unknown kernel part {part!r}")
    return ker


def _convolve(rho_values, kernel, grid):
    return np.fft.ifftn(np.fft.fftn(rho_values) * np.fft.fftn(kernel)).real * grid.x_weight


def _check_split_box(grid):
    if grid.dim != 3:
        raise ValueError("short/long potential split is specific to d = 3")
    if grid.spec.box_half_length <= 2.0:
        raise ValueError("short/long split needs box_half_length > 2 to resolve the |x| <= 1 cutoff")


def newtonian_potential(rho: SpatialField, order=0) -> SpatialField:
    """Convolution of rho with the full tabulated kernel 1/(4 pi |x|^(1+order)), d=3."""
    _check_split_box(rho.grid)
    ker = _newton_kernel(rho.grid, order, "full")
    tag = "S" if order == 0 else "gradS_mag"
    return SpatialField(rho.grid, _convolve(rho.values, ker, rho.grid), tag=tag)


def split_short_long(rho: SpatialField, order=0):
    """Short-range and long-range parts of the d=3 Newtonian potential.

    order 0 splits S; order 1 splits the radial bound on grad S (kernel
    1/(4 pi |x|^2)). The parts sum to the full tabulated-kernel potential
    exactly (same FFTs, linearity).
    """
    _check_split_box(rho.grid)
    grid = rho.grid
    rho_hat = np.fft.fftn(rho.values)
    parts = []
    for part in ("short", "long"):
        ker = _newton_kernel(grid, order, part)
        vals = np.fft.ifftn(rho_hat * np.fft.fftn(ker)).real * grid.x_weight
        tag = ("S_short" if part == "short" else "S_long") if order == 0 else f"gradS_{part}"
        parts.append(SpatialField(grid, vals, tag=tag))
    return tuple(parts)


def _bessel_radial(r, order, d, s_tol=1e-11):
    """The radial Bessel-type kernel G (order 0) or |G'| (order 1) at radii r.

    G(x) = (1/4pi) int_0^inf exp(-pi |x|^2/(4s) - s/(4pi)) s^((2-d)/2) ds/s,
    evaluated by adaptive quadrature of the one-dimensional integral.
    """
    out = np.empty_like(r)
    for i, ri in enumerate(r):
        if order == 0:
            def integrand(s, ri=ri):
                return np.exp(-np.pi * ri**2 / (4.0 * s) - s / (4.0 * np.pi)) * s ** ((2.0 - d) / 2.0 - 1.0)
        else:
            def integrand(s, ri=ri):
                return (np.pi * ri / (2.0 * s)) * np.exp(
                    -np.pi * ri**2 / (4.0 * s) - s / (4.0 * np.pi)) * s ** ((2.0 - d) / 2.0 - 1.0)
        val, _ = quad(integrand, 0.0, np.inf, epsabs=s_tol, epsrel=s_tol, limit=200)
        out[i] = val / (4.0 * np.pi)
    return out


def bessel_potential_integrable(p, order, d):
    """Whether the L^p norm of G (order 0) or grad G (order 1) is finite."""
    if order == 0:
        return True if d <= 2 else p < d / (d - 2.0)
    return p < d / (d - 1.0)


def bessel_potential_norms(p, order=0, d=3, n_radial=400, r_min=1e-6, r_max=80.0) -> float:
    """Numerical L^p norm of the Bessel-type kernel G or of |grad G|.

    Radial quadrature (trapezoid in log r) of the one-dimensional integral
    formula; rejects exponents at or beyond the integrability threshold.
    Doubling n_radial changes the result well below 0.5%.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    if p < 1:
        raise ValueError("p must be >= 1")
    if not bessel_potential_integrable(p, order, d):
        thr = "d/(d-2)" if order == 0 else "d/(d-1)"
        raise ValueError(f"L^{p} norm diverges: order={order} requires p < {thr} at d={d}")
    u = np.linspace(np.log(r_min), np.log(r_max), n_radial)
    r = np.exp(u)
    g = np.abs(_bessel_radial(r, order, d))
    integrand = _SPHERE_AREA[d] * g**p * r ** (d - 1) * r  # extra r from du = dr/r
    return float(np.trapezoid(integrand, u) ** (1.0 / p))


def gradient_bound_check(rho: SpatialField, p, bessel_norm=None) -> dict:
    """Young-inequality check ||grad S||_p <= M ||grad G||_p for the beta=1 solve.

    Returns the ratio and a pass flag at 2% slack. The kernel norm is the
    paper-normalized G (an upper kernel for the unit-normalized solve), so
    the bound is conservative.
    """
    grid = rho.grid
    d = grid.dim
    if not p < d / (d - 1.0):
        raise ValueError(f"gradient bound needs p < d/(d-1) = {d/(d-1.0)}")
    mass = float(grid.x_weight * rho.values.sum())
    if mass == 0.0:
        return {"ratio": 0.0, "passed": True, "mass": 0.0}
    sol = solve_field(rho, beta=1, want=("grad",))
    gradmag = np.sqrt(sum(g.values**2 for g in sol["grad"]))
    lhs = spatial_norm(gradmag, grid, p)
    if bessel_norm is None:
        bessel_norm = bessel_potential_norms(p, order=1, d=d)
    ratio = lhs / (mass * bessel_norm)
    return {"ratio": ratio, "passed": ratio <= 1.02, "mass": mass, "kernel_norm": bessel_norm}


def calderon_zygmund_check(rho: SpatialField, p) -> dict:
    """Empirical Calderon-Zygmund constant max_ij ||d_ij S||_p / ||Lap S||_p.

    1 < p < infinity, beta = 1. No universal numeric is asserted; callers
    compare the reported constant across resolutions.
    """
    if not (1.0 < p < np.inf):
        raise ValueError("Calderon-Zygmund check needs 1 < p < inf")
    grid = rho.grid
    sol = solve_field(rho, beta=1, want=("S", "hess"))
    lap = sum(sol["hess"][a][a].values for a in range(grid.dim))
    lap_norm = spatial_norm(lap, grid, p)
    if lap_norm == 0.0:
        return {"ratio": 0.0, "per_pair": {}}
    per_pair = {}
    for a in range(grid.dim):
        for b in range(grid.dim):
            per_pair[(a, b)] = spatial_norm(sol["hess"][a][b].values, grid, p) / lap_norm
    return {"ratio": max(per_pair.values()), "per_pair": per_pair}
