"""Conformally Kaehler Poincare-Einstein fill-ins: admissibility, closed-form
profiles, a Newton solver for the twisted Toda Dirichlet problem, and
finite-difference curvature checks."""

from .admissibility import (
    AREA_FREE,
    BaseSurface,
    ExtendedK,
    FillTuple,
    canonical_period_area,
    is_admissible,
    k_range_for,
    nut_admissible,
)
from .decoupled import build_profile, check_smoothness_conditions, nut_profile
from .surface import BoundaryDatum, ScalarField2, TorusGrid, normalize_boundary
from .toda_bvp import SolverConfig, solve

__version__ = "0.1.0"
