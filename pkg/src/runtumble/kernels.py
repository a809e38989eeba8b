"""Turning-kernel families, the scattering operator, and kernel mixed norms.

Each family is the bounding expression of one of the admissible kernel
classes, so the corresponding hypothesis holds with equality by
construction. Every family decomposes as T(x, v, v') = A(x, v) + B(x, v'),
which the scattering update exploits: gains and losses reduce to velocity
averages of A and B, and mass neutrality is an algebraic identity of the
discrete update, pointwise in x.
"""

from dataclasses import dataclass

import numpy as np

from runtumble.grid import DistributionField, PhaseGrid, field_from_compact
from runtumble.interp import interp_point, velocity_offset_stack
from runtumble.norms import spatial_norm

FAMILIES = ("constant", "hyp1", "hyp2", "hyp3")


@dataclass(frozen=True)
class KernelSpec:
    """A turning-kernel family with its coefficients and offset choices.

    signs applies to hyp3 only: offsets (S at x+s1*eps*v, S at x+s2*eps*v',
    |grad S| at x+s3*eps*v, |grad S| at x+s4*eps*v'), each entry +1 or -1.
    active masks the four hyp3 terms in the same order. saturation, when
    set, clamps each of the two kernel components at saturation/2 so that
    T <= saturation pointwise.
    """

    family: str = "constant"
    coefficient: float = 1.0
    epsilon: float = 1.0
    signs: tuple = (1, -1, 1, -1)
    active: tuple = (True, True, True, True)
    saturation: float = None

    def validate(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.coefficient < 0:
            raise ValueError("coefficient must be >= 0")
        if self.epsilon < 0:
            raise ValueError("memory scale epsilon must be >= 0")
        if self.family == "hyp3":
            if len(self.signs) != 4 or any(s not in (-1, 1) for s in self.signs):
                raise ValueError("hyp3 needs four signs in {-1, +1}")
            if len(self.active) != 4:
                raise ValueError("hyp3 needs four active flags")

    def required_fields(self):
        if self.family == "constant":
            return set()
        if self.family == "hyp1":
            return {"S", "grad"}
        if self.family == "hyp2":
            return {"S", "grad", "hess"}
        active = self.active
        need = set()
        if active[0] or active[1]:
            need.add("S")
        if active[2] or active[3]:
            need.add("grad")
        return need


def _check_fields(spec, fields):
    missing = spec.required_fields() - set(fields)
    if missing:
        raise ValueError(f"kernel family {spec.family!r} needs fields {sorted(missing)}")


def _grad_magnitude(fields):
    return np.sqrt(sum(g.values**2 for g in fields["grad"]))


def _hyp2_weight(fields):
    w = np.abs(fields["S"].values)
    for g in fields["grad"]:
        w = w + np.abs(g.values)
    for row in fields["hess"]:
        for h in row:
            w = w + np.abs(h.values)
    return w


def _offset_stack(values, grid, sign, eps):
    """Stack values(x + sign*eps*v_j) over the masked velocity nodes -> x_shape + (K,)."""
    return velocity_offset_stack(values, grid.vnodes, -sign * eps, grid.dx)


def kernel_components(spec: KernelSpec, fields, grid: PhaseGrid):
    """The split T(x, v, v') = A(x, v) + B(x, v') on the grid.

    Returns (A, B); each is either a scalar or an array x_shape + (K,) over
    masked velocity nodes (A indexed by v, B by v').
    """
    spec.validate()
    _check_fields(spec, fields)
    C, eps = spec.coefficient, spec.epsilon

    if spec.family == "constant":
        A, B = C, 0.0
    elif spec.family == "hyp1":
        S = fields["S"].values
        gmag = _grad_magnitude(fields)
        A = C * (1.0 + _offset_stack(S + gmag, grid, +1, eps))
        B = C * _offset_stack(S, grid, -1, eps)
    elif spec.family == "hyp2":
        A = C * (1.0 + _offset_stack(_hyp2_weight(fields), grid, +1, eps))
        B = 0.0
    else:  # hyp3
        s1, s2, s3, s4 = spec.signs
        a1, a2, a3, a4 = spec.active
        Sabs = np.abs(fields["S"].values) if (a1 or a2) else None
        gmag = _grad_magnitude(fields) if (a3 or a4) else None
        A = np.zeros(grid.x_shape + (grid.n_vnodes,))
        B = np.zeros(grid.x_shape + (grid.n_vnodes,))
        if a1:
            A += _offset_stack(Sabs, grid, s1, eps)
        if a3:
            A += _offset_stack(gmag, grid, s3, eps)
        if a2:
            B += _offset_stack(Sabs, grid, s2, eps)
        if a4:
            B += _offset_stack(gmag, grid, s4, eps)
        A = C * A
        B = C * B

    if spec.saturation is not None:
        half = spec.saturation / 2.0
        A = np.minimum(A, half) if isinstance(A, np.ndarray) else min(A, half)
        B = np.minimum(B, half) if isinstance(B, np.ndarray) else min(B, half)
    return A, B


def evaluate_kernel(spec: KernelSpec, fields, grid: PhaseGrid, x, v, vp) -> float:
    """Pointwise kernel value T(x, v, v') with periodic cubic offset sampling."""
    spec.validate()
    _check_fields(spec, fields)
    C, eps = spec.coefficient, spec.epsilon
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    vp = np.asarray(vp, dtype=float)
    x0, dx = grid.x[0], grid.dx

    def at(values, point):
        return interp_point(values, x0, dx, point)

    if spec.family == "constant":
        val = C
    elif spec.family == "hyp1":
        S = fields["S"].values
        gmag = _grad_magnitude(fields)
        val = C * (1.0 + at(S, x + eps * v) + at(S, x - eps * vp) + at(gmag, x + eps * v))
    elif spec.family == "hyp2":
        val = C * (1.0 + at(_hyp2_weight(fields), x + eps * v))
    else:
        s = spec.signs
        a = spec.active
        val = 0.0
        if a[0]:
            val += at(np.abs(fields["S"].values), x + s[0] * eps * v)
        if a[1]:
            val += at(np.abs(fields["S"].values), x + s[1] * eps * vp)
        if a[2]:
            val += at(_grad_magnitude(fields), x + s[2] * eps * v)
        if a[3]:
            val += at(_grad_magnitude(fields), x + s[3] * eps * vp)
        val = C * val
    if spec.saturation is not None:
        val = min(val, spec.saturation)
    return float(val)


def loss_rate(spec: KernelSpec, fields, grid: PhaseGrid, components=None):
    """Total tumbling rate out of each node: sum_j' w_j' T(x, v_j', v), shape x_shape + (K,)."""
    A, B = kernel_components(spec, fields, grid) if components is None else components
    w = grid.hv ** grid.dim
    wsum = grid.velocity_measure
    if isinstance(A, np.ndarray):
        SA = w * A.sum(axis=-1)
    else:
        SA = np.full(grid.x_shape, wsum * A)
    if isinstance(B, np.ndarray):
        return SA[..., None] + wsum * B
    return SA[..., None] + wsum * B * np.ones(grid.x_shape + (1,))


def scattering_apply(f: DistributionField, spec: KernelSpec, fields, dt: float) -> DistributionField:
    """Explicit scattering update f + dt * (gain - loss).

    gain(x, v) = sum_j' w_j' T(x, v, v_j') f(x, v_j'), loss(x, v) =
    f(x, v) * sum_j' w_j' T(x, v_j', v). Rejects dt above the positivity
    threshold dt * sup loss_rate < 1; under the guard the update preserves
    nonnegativity, and x-integrated gain equals x-integrated loss by the
    (v, v') swap antisymmetry of the discrete sums.
    """
    grid = f.grid
    A, B = kernel_components(spec, fields, grid)
    w = grid.hv ** grid.dim
    wsum = grid.velocity_measure

    fm = f.compact()
    rho = w * fm.sum(axis=-1)

    if isinstance(A, np.ndarray):
        gain = A * rho[..., None]
        SA = w * A.sum(axis=-1)
    else:
        gain = A * rho[..., None] * np.ones((1,) * grid.dim + (grid.n_vnodes,))
        SA = wsum * A * np.ones(grid.x_shape)
    if isinstance(B, np.ndarray):
        gain = gain + (w * np.sum(B * fm, axis=-1))[..., None]
        rate = SA[..., None] + wsum * B
    else:
        gain = gain + (B * rho)[..., None]
        rate = SA[..., None] + wsum * B

    max_rate = float(np.max(rate)) if np.size(rate) else 0.0
    if dt * max_rate >= 1.0:
        raise ValueError(
            f"scattering dt={dt} violates the positivity threshold: "
            f"dt * sup rate = {dt * max_rate:.3e} >= 1")

    new = fm * (1.0 - dt * rate) + dt * gain
    out = field_from_compact(grid, new, t=f.t)
    return out


def kernel_mixed_norm(spec: KernelSpec, fields, grid: PhaseGrid, p1, p2, p3) -> float:
    """Mixed norm ||T||_{L^p1_x L^p2_v L^p3_v'} (innermost v', then v, then x).

    Requires p1 >= p2 and p1 >= p3, the direction in which Minkowski's
    inequality controls the norm by ||S||_p1 + ||grad S||_p1.
    """
    inf = np.inf

    def ge(a, b):
        return a == inf or (b != inf and a >= b)

    if not (ge(p1, p2) and ge(p1, p3)):
        raise ValueError(f"need p1 >= p2 and p1 >= p3, got ({p1}, {p2}, {p3})")
    A, B = kernel_components(spec, fields, grid)
    K = grid.n_vnodes
    nx = int(np.prod(grid.x_shape))
    Af = (A.reshape(nx, K) if isinstance(A, np.ndarray) else np.full((nx, K), float(A)))
    Bf = (B.reshape(nx, K) if isinstance(B, np.ndarray) else np.full((nx, K), float(B)))
    w = grid.hv ** grid.dim

    mid = np.zeros(nx)
    for j in range(K):
        T = np.abs(Af[:, j][:, None] + Bf)
        if p3 == inf:
            inner = T.max(axis=1)
        else:
            inner = (w * np.sum(T**p3, axis=1)) ** (1.0 / p3)
        if p2 == inf:
            mid = np.maximum(mid, inner)
        else:
            mid += w * inner**p2
    if p2 != inf:
        mid = mid ** (1.0 / p2)
    return spatial_norm(mid.reshape(grid.x_shape), grid, p1)


def mixed_norm_bound_report(spec: KernelSpec, fields, grid: PhaseGrid, p1, p2, p3) -> dict:
    """Compare the kernel mixed norm with its Minkowski bound.

    Bound: coefficient * |V|^(1/p2 + 1/p3) * (nS ||S||_p1 + nG ||grad S||_p1)
    where nS, nG count the active S- and gradient-type terms of the family.
    """
    if spec.family == "hyp3":
        nS = int(spec.active[0]) + int(spec.active[1])
        nG = int(spec.active[2]) + int(spec.active[3])
    elif spec.family == "hyp1":
        raise ValueError("mixed-norm bound applies to pure S-term kernels (hyp3); "
                         "hyp1/hyp2 carry a constant term")
    else:
        raise ValueError(f"mixed-norm bound not defined for family {spec.family!r}")
    value = kernel_mixed_norm(spec, fields, grid, p1, p2, p3)
    wsum = grid.velocity_measure
    cV = wsum ** ((0.0 if p2 == np.inf else 1.0 / p2) + (0.0 if p3 == np.inf else 1.0 / p3))
    s_norm = spatial_norm(fields["S"].values, grid, p1) if nS else 0.0
    g_norm = spatial_norm(_grad_magnitude(fields), grid, p1) if nG else 0.0
    bound = spec.coefficient * cV * (nS * s_norm + nG * g_norm)
    ratio = 0.0 if bound == 0.0 and value == 0.0 else value / bound
    return {"value": value, "bound": bound, "ratio": ratio, "passed": ratio <= 1.05}
