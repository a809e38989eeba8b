"""Strang-split evolution of the coupled transport-scattering system.

Each step is transport(dt/2) -> field solve -> scattering(dt) ->
transport(dt/2). The chemoattractant is refreshed from the current density
every step: spectrally for the screened equation (beta=1), and through the
min-image Newtonian kernel for beta=0 so that S stays nonnegative (the
zero-mean spectral surrogate can go negative, which would break the sign
of the turning kernel).

Monitors are pure observers: they read the state after each step and never
mutate it, so a run with monitors attached produces bit-identical fields
to a run without.
"""

import numpy as np

from runtumble.fields import newtonian_potential, solve_field
from runtumble.grid import DistributionField, PhaseGrid, SpatialField, boundary_shell_mass, density, total_mass
from runtumble.kernels import KernelSpec, loss_rate, scattering_apply
from runtumble.transport import SeparableData, exact_free_solution, transport_step


class GuardAbort(RuntimeError):
    """Raised when the wrap monitor or the scattering dt guard trips."""

    def __init__(self, message, t_valid):
        super().__init__(message)
        self.t_valid = t_valid


def _spectral_gradient(field: SpatialField):
    grid = field.grid
    d = grid.dim
    kmesh = np.meshgrid(*([grid.k] * d), indexing="ij")
    f_hat = np.fft.fftn(field.values)
    return [SpatialField(grid, np.fft.ifftn(1j * kmesh[a] * f_hat).real, tag=f"gradS_{a}")
            for a in range(d)]


class Simulation:
    """Driver for one run on a fixed grid with a fixed kernel."""

    def __init__(self, grid: PhaseGrid, f0, kernel: KernelSpec, beta=1,
                 wrap_tol=1e-6, wrap_width=2):
        kernel.validate()
        if beta not in (0, 1):
            raise ValueError("beta must be 0 or 1")
        if beta == 0 and grid.dim != 3:
            raise ValueError("beta=0 runs are supported for d=3 only "
                             "(the Newtonian kernel is dimension-specific)")
        self.grid = grid
        self.kernel = kernel
        self.beta = beta
        self.wrap_tol = wrap_tol
        self.wrap_width = wrap_width
        self.f0_descriptor = f0 if isinstance(f0, SeparableData) else None
        if isinstance(f0, SeparableData):
            self.f = exact_free_solution(f0, grid, 0.0)
        else:
            self.f = f0
        self.f.validate()
        self.t = 0.0
        self.step_count = 0
        self.mass0 = total_mass(self.f)
        self.rho = density(self.f)
        self.fields = self._solve_fields_for(self.rho)
        self.monitors = []

    def attach(self, monitor):
        monitor.start(self)
        self.monitors.append(monitor)

    def _check_wrap(self):
        if self.mass0 <= 0:
            return
        shell = boundary_shell_mass(self.f, self.wrap_width)
        if shell > self.wrap_tol * self.mass0:
            raise GuardAbort(
                f"support reached the box boundary at t={self.t:.6g} "
                f"(shell mass {shell:.3e} > {self.wrap_tol:.1e} * M)", self.t)

    def step(self):
        dt = self.grid.spec.dt
        f = transport_step(self.f, dt / 2.0)
        rho = density(f)
        self.rho = rho
        fields = self._solve_fields_for(rho)
        try:
            f = scattering_apply(f, self.kernel, fields, dt)
        except ValueError as exc:
            raise GuardAbort(str(exc), self.t) from exc
        f = transport_step(f, dt / 2.0)
        f.t = self.t + dt
        self.f = f
        self.t += dt
        self.step_count += 1
        self.rho = density(self.f)
        self.fields = fields
        self._check_wrap()
        for mon in self.monitors:
            mon.after_step(self)

    def _solve_fields_for(self, rho):
        want = {"S", "grad"}
        if self.kernel.family == "hyp2":
            want.add("hess")
        if self.beta == 1:
            return solve_field(rho, beta=1, want=tuple(want))
        out = {"S": newtonian_potential(rho, order=0)}
        out["grad"] = _spectral_gradient(out["S"])
        return out

    def run(self, n_steps):
        for _ in range(n_steps):
            self.step()
        return self.f

    def max_stable_dt(self):
        """Largest dt allowed by the positivity guard at the current state."""
        rate = loss_rate(self.kernel, self.fields, self.grid)
        mx = float(np.max(rate))
        return np.inf if mx == 0.0 else 1.0 / mx
