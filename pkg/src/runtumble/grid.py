"""Discrete phase space: periodic position box times bounded velocity set.

Positions live on a uniform periodic grid over [-L, L)^d; velocities on a
cell-centered Cartesian lattice over the bounding cube [-r_max, r_max]^d,
masked to the ball or shell {r_min <= |v| <= r_max}. Cell-centered velocity
nodes with uniform weights make the d=1 shell measure exact when the radii
align with cell edges, and keep the masked quadrature a controlled O(h)
approximation of |V| otherwise.
"""

from dataclasses import dataclass, field

import numpy as np


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Parameters of the phase-space discretization."""

    dim: int
    box_half_length: float
    nx: int
    nv: int
    velocity_shape: str = "ball"  # "ball" or "shell"
    r_min: float = 0.0
    r_max: float = 1.0
    dt: float = 0.01

    def validate(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.box_half_length <= 0:
            raise ValueError("box_half_length must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not _is_power_of_two(self.nx):
            raise ValueError(f"nx must be a power of two, got {self.nx}")
        if not _is_power_of_two(self.nv):
            raise ValueError(f"nv must be a power of two, got {self.nv}")
        if self.velocity_shape not in ("ball", "shell"):
            raise ValueError(f"unknown velocity_shape {self.velocity_shape!r}")
        if self.velocity_shape == "ball" and self.r_min != 0.0:
            raise ValueError("ball velocity set requires r_min = 0")
        if self.r_min < 0 or self.r_max <= self.r_min:
            raise ValueError(f"need 0 <= r_min < r_max, got ({self.r_min}, {self.r_max})")


@dataclass(frozen=True)
class PhaseGrid:
    """Realized grid: coordinates, velocity mask/weights, spectral wavenumbers."""

    spec: GridSpec
    x: np.ndarray          # (nx,) position nodes per axis, identical axes
    dx: float
    k: np.ndarray          # (nx,) angular wavenumbers per axis (FFT order)
    v: np.ndarray          # (nv,) velocity nodes per axis (cell centers)
    hv: float
    vmask: np.ndarray      # (nv,)*d bool, true inside V
    vweights: np.ndarray   # (nv,)*d quadrature weights, zero outside V
    vnodes: np.ndarray = field(repr=False, default=None)  # (K, d) masked node coordinates
    vindex: tuple = field(repr=False, default=None)       # advanced index of masked nodes

    @property
    def dim(self):
        return self.spec.dim

    @property
    def x_weight(self):
        """Quadrature weight of one position cell."""
        return self.dx ** self.dim

    @property
    def velocity_measure(self):
        """Quadrature value of |V|."""
        return float(self.vweights.sum())

    @property
    def x_shape(self):
        return (self.spec.nx,) * self.dim

    @property
    def v_shape(self):
        return (self.spec.nv,) * self.dim

    @property
    def n_vnodes(self):
        return self.vnodes.shape[0]

    def x_mesh(self):
        return np.meshgrid(*([self.x] * self.dim), indexing="ij")

    def alignment_time(self, k=1):
        """Times at which every velocity node shifts positions by whole cells.

        Velocity nodes are odd multiples of hv/2, so t * v_j / dx is an
        integer for all nodes exactly when t is a multiple of 2 dx / hv.
        """
        return 2.0 * k * self.dx / self.hv


def build_grid(spec: GridSpec) -> PhaseGrid:
    """Construct the discrete phase space from a validated spec."""
    spec.validate()
    d, nx, nv = spec.dim, spec.nx, spec.nv
    L, R = spec.box_half_length, spec.r_max

    dx = 2.0 * L / nx
    x = -L + dx * np.arange(nx)
    k = 2.0 * np.pi * np.fft.fftfreq(nx, d=dx)

    hv = 2.0 * R / nv
    v = -R + hv * (np.arange(nv) + 0.5)

    mesh = np.meshgrid(*([v] * d), indexing="ij")
    speed = np.sqrt(sum(c * c for c in mesh))
    vmask = (speed >= spec.r_min) & (speed <= spec.r_max)
    vweights = np.where(vmask, hv**d, 0.0)

    vindex = np.nonzero(vmask)
    vnodes = np.stack([mesh[a][vindex] for a in range(d)], axis=1)

    return PhaseGrid(spec=spec, x=x, dx=dx, k=k, v=v, hv=hv,
                     vmask=vmask, vweights=vweights, vnodes=vnodes, vindex=vindex)


@dataclass
class DistributionField:
    """Nonnegative cell density f(x, v) on the phase grid at one time."""

    grid: PhaseGrid
    values: np.ndarray  # shape grid.x_shape + grid.v_shape
    t: float = 0.0

    def validate(self):
        expected = self.grid.x_shape + self.grid.v_shape
        if self.values.shape != expected:
            raise ValueError(f"field shape {self.values.shape} != grid shape {expected}")
        if self.t < 0:
            raise ValueError("timestamp must be nonnegative")
        if np.any(self.values < 0):
            raise ValueError("distribution values must be nonnegative")
        outside = self.values[..., ~self.grid.vmask]
        if outside.size and np.any(outside != 0.0):
            raise ValueError("values at masked velocity nodes must be exactly zero")

    def masked(self):
        """Copy with values outside V zeroed (idempotent)."""
        d = self.grid.dim
        shape = (1,) * d + self.grid.v_shape
        vals = self.values * self.grid.vmask.reshape(shape)
        return DistributionField(self.grid, vals, self.t)

    def compact(self):
        """Values gathered at masked velocity nodes, shape x_shape + (K,)."""
        d = self.grid.dim
        idx = (slice(None),) * d + self.grid.vindex
        return self.values[idx]


def field_from_compact(grid, compact, t=0.0):
    """Inverse of DistributionField.compact."""
    vals = np.zeros(grid.x_shape + grid.v_shape)
    idx = (slice(None),) * grid.dim + grid.vindex
    vals[idx] = compact
    return DistributionField(grid, vals, t)


@dataclass
class SpatialField:
    """Scalar field on the position grid (density, chemoattractant, derivatives)."""

    grid: PhaseGrid
    values: np.ndarray
    tag: str = "rho"


def density(f: DistributionField) -> SpatialField:
    """Velocity integral rho(x) = sum_j w_j f(x, v_j)."""
    d = f.grid.dim
    rho = np.tensordot(f.values, f.grid.vweights, axes=(tuple(range(d, 2 * d)), tuple(range(d))))
    return SpatialField(f.grid, rho, tag="rho")


def total_mass(f: DistributionField) -> float:
    """M = sum_ij wx_i w_j f(x_i, v_j)."""
    return float(f.grid.x_weight * density(f).values.sum())


def boundary_shell_mass(f: DistributionField, width_cells=2) -> float:
    """Mass carried by the outermost position cells (wrap-detection monitor)."""
    rho = density(f).values
    d = f.grid.dim
    nx = f.grid.spec.nx
    inner = np.zeros_like(rho, dtype=bool)
    core = (slice(width_cells, nx - width_cells),) * d
    inner[core] = True
    return float(f.grid.x_weight * rho[~inner].sum())
