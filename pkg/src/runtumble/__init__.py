"""Run-and-tumble kinetic chemotaxis laboratory.

Phase-space solver for the coupled transport-scattering system together
with numerical checks of the quantitative estimates (dispersion decay,
Strichartz admissibility, potential-theory bounds, Gronwall certificates)
that underpin its global-existence theory.
"""

from runtumble.grid import GridSpec, PhaseGrid, DistributionField, SpatialField, build_grid, density, total_mass
from runtumble.exponents import ExponentQuadruple, NumerologyChain, strichartz_admissible, theorem3_exponents, solve_numerology

__all__ = [
    "GridSpec",
    "PhaseGrid",
    "DistributionField",
    "SpatialField",
    "build_grid",
    "density",
    "total_mass",
    "ExponentQuadruple",
    "NumerologyChain",
    "strichartz_admissible",
    "theorem3_exponents",
    "solve_numerology",
]
