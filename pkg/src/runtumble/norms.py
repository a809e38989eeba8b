"""Mixed Lebesgue norms on phase-space fields and time series.

Norms carry the grid quadrature weights so the discrete Hoelder and
interpolation inequalities hold exactly. Infinite exponents are computed
as exact maxima, never as large-p surrogates.
"""

import math
from dataclasses import dataclass

import numpy as np

from runtumble.grid import DistributionField

INF = math.inf


@dataclass(frozen=True)
class NormSpec:
    """Exponents of an L^p_x L^q_v norm, optionally with a time exponent r."""

    p: float
    q: float
    r: float = None

    def validate(self):
        for e in (self.p, self.q) + ((self.r,) if self.r is not None else ()):
            if not (e == INF or e >= 1):
                raise ValueError(f"exponent {e} must be >= 1 or inf")


def mixed_norm(f: DistributionField, spec: NormSpec) -> float:
    """|| ||f(x, .)||_{L^q_v} ||_{L^p_x} with grid quadrature weights."""
    spec.validate()
    return mixed_norm_values(f.values, f.grid, spec.p, spec.q)


def mixed_norm_values(values, grid, p, q) -> float:
    """Mixed norm of a raw rank-2d array on the grid (x outer, v inner)."""
    d = grid.dim
    vaxes = tuple(range(d, 2 * d))
    absvals = np.abs(values)
    if q == INF:
        inner = absvals.max(axis=vaxes)
    else:
        inner = np.tensordot(absvals**q, grid.vweights, axes=(vaxes, tuple(range(d)))) ** (1.0 / q)
    return spatial_norm(inner, grid, p)


def spatial_norm(values, grid, p) -> float:
    """L^p norm on the position grid."""
    a = np.abs(values)
    if p == INF:
        return float(a.max())
    return float((grid.x_weight * np.sum(a**p)) ** (1.0 / p))


def compact_mixed_norm(compact, grid, p, q) -> float:
    """Mixed norm of values given at masked velocity nodes, shape x_shape + (K,)."""
    a = np.abs(compact)
    w = grid.hv ** grid.dim
    if q == INF:
        inner = a.max(axis=-1)
    else:
        inner = (w * np.sum(a**q, axis=-1)) ** (1.0 / q)
    return spatial_norm(inner, grid, p)


def time_norm(series, r, dt) -> float:
    """(sum dt * a_i^r)^(1/r) for a uniformly sampled nonnegative series."""
    a = np.abs(np.asarray(series, dtype=float))
    if a.size == 0:
        return 0.0
    if r == INF:
        return float(a.max())
    return float((dt * np.sum(a**r)) ** (1.0 / r))


def interpolation_check(f: DistributionField, p, q, theta, rtol=1e-12) -> dict:
    """Check ||f||_{L^q_x L^c_v} <= ||f||_{1,1}^(1-theta) ||f||_{p,q}^theta.

    Requires the exponent relation 1/q = 1 - theta + theta/p (which also
    defines 1/c = 1 - theta + theta/q); Hoelder then gives the inequality
    exactly in the weighted discrete setting.
    """
    iq = 1.0 - theta + theta / p if p != INF else 1.0 - theta
    if abs(iq - 1.0 / q) > 1e-10:
        raise ValueError(f"theta={theta} inconsistent with (p, q)=({p}, {q})")
    c = 1.0 / (1.0 - theta + theta / q)
    lhs = mixed_norm(f, NormSpec(p=q, q=c))
    low = mixed_norm(f, NormSpec(p=1, q=1))
    high = mixed_norm(f, NormSpec(p=p, q=q))
    rhs = low ** (1.0 - theta) * high**theta
    return {
        "lhs": lhs,
        "rhs": rhs,
        "c": c,
        "holds": lhs <= rhs * (1.0 + rtol) + 1e-300,
    }
