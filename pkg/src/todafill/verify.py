"""Independent checks of solver output and assembled metrics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .curvature import Curvature
from .errors import PatchTooCloseToBoundary
from .geometry import MetricSampler, solution_fields
from .surface import integrate_array
from .toda_bvp import TodaSolution

TWO_SQRT6 = 2.0 * math.sqrt(6.0)


def _law_errors(sol: TodaSolution):
    fields = solution_fields(sol, check=False)
    prof = sol.lift.profile
    g = sol.grid
    lin = np.abs(integrate_array(fields.We_w, g) - prof.F(fields.xi))
    quart = np.abs(integrate_array(fields.e_w, g) - prof.E(fields.xi))
    # the xi = 0 slice, where W = 1 and both integrals reduce to the area
    b = abs(float(integrate_array(fields.boundary_e_w, g)) - sol.tuple.area_a)
    return np.append(lin, b), np.append(quart, b)


def conserved_linear(sol: TodaSolution) -> float:
    """sup over slices of |int W e^w - (deg p xi + a)|."""
    return float(np.max(_law_errors(sol)[0]))


def conserved_quartic(sol: TodaSolution) -> float:
    """sup over slices of |int e^w - E(xi)|."""
    return float(np.max(_law_errors(sol)[1]))


def patch_lattice(sampler: MetricSampler, patch, step: float, n_xi: int = 7) -> np.ndarray:
    xi0, xi1 = patch
    lo, hi = sampler.xi_range
    margin = 2.0 * step
    if not (0.0 < xi0 <= xi1 < 0.5) or xi0 - margin <= lo or xi1 + margin >= hi:
        raise PatchTooCloseToBoundary(
            f"patch [{xi0}, {xi1}] with step {step} leaves the sampled range ({lo}, {hi})"
        )
    pts = []
    for xi in np.linspace(xi0, xi1, n_xi):
        for x, y in sampler.sigma_points:
            pts.append((xi, 0.0, x, y))
    return np.array(pts)


def _interior(sampler: MetricSampler) -> MetricSampler:
    return sampler if sampler.chart == "interior" else sampler.interior()


def einstein_residual(sampler: MetricSampler, patch=(0.1, 0.4), step: float = 1e-3, n_xi: int = 7) -> float:
    """sup over the lattice of the frame norm of Ric(h) + 3h."""
    s = _interior(sampler)
    pts = patch_lattice(s, patch, step, n_xi)
    return float(np.max(Curvature.at(s.h, pts, step).einstein_defect(-3.0)))


def scalar_curvature_g(sampler: MetricSampler, patch=(0.1, 0.4), step: float = 1e-3, n_xi: int = 7) -> float:
    """sup |s_g - xi/k^3|; for k = +-inf the target is s_g = 0."""
    s = _interior(sampler)
    pts = patch_lattice(s, patch, step, n_xi)
    curv = Curvature.at(s.g, pts, step)
    return float(np.max(np.abs(curv.s - pts[:, 0] * s.k.inv_k3)))


def weyl_plus_h(sampler: MetricSampler, patch=(0.1, 0.4), step: float = 1e-3, n_xi: int = 7):
    s = _interior(sampler)
    pts = patch_lattice(s, patch, step, n_xi)
    return pts[:, 0], Curvature.at(s.h, pts, step).weyl_plus_norm()


def weyl_k_check(sampler: MetricSampler, patch=(0.1, 0.4), step: float = 1e-3, n_xi: int = 7) -> float:
    """Pointwise form of |k| (2 sqrt6 max|W+_h|_h)^(1/3) = 1/2.

    On the Kaehler metric 2 sqrt6 |W+_g|_g = |s_g| = xi/|k|^3, and |W+|
    picks up a factor xi^2 under h = g/xi^2, so |k| (2 sqrt6 |W+_h|_h)^(1/3) = xi
    at every point; its supremum 1/2 is reached on the bolt. Returns the sup
    relative deviation from that law. For k = +-inf returns sup |W+_h|_h.
    """
    xi, wp = weyl_plus_h(sampler, patch, step, n_xi)
    k = sampler.k
    if k.is_infinite:
        return float(np.max(wp))
    lhs = abs(k.value) * np.cbrt(TWO_SQRT6 * wp)
    return float(np.max(np.abs(lhs / xi - 1.0)))


@dataclass
class VerificationReport:
    linear_law_err: Optional[float] = None
    quartic_law_err: Optional[float] = None
    einstein_residual: Optional[float] = None
    scalar_g_err: Optional[float] = None
    weyl_k_err: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def failures(self, tolerances: dict) -> list:
        out = []
        for name, tol in tolerances.items():
            v = getattr(self, name)
            if v is not None and not v <= tol:
                out.append(name)
        return out


def verify_solution(sol: TodaSolution, patch=(0.1, 0.4), step: float = 1e-3, metric: bool = True) -> VerificationReport:
    """Conserved laws plus, optionally, curvature checks on the interpolated metric."""
    from .geometry import assemble_metric, metric_fields

    lin, quart = _law_errors(sol)
    rep = VerificationReport(
        float(np.max(lin)), float(np.max(quart)),
        metadata={"grid": dict(sol.diagnostics.grid), "patch": list(patch), "step": step},
    )
    if metric:
        sampler = assemble_metric(metric_fields(sol))
        rep.einstein_residual = einstein_residual(sampler, patch, step)
        rep.scalar_g_err = scalar_curvature_g(sampler, patch, step)
        rep.weyl_k_err = weyl_k_check(sampler, patch, step)
    return rep


def verify_sampler(sampler: MetricSampler, patch=(0.1, 0.4), step: float = 1e-3) -> VerificationReport:
    return VerificationReport(
        einstein_residual=einstein_residual(sampler, patch, step),
        scalar_g_err=scalar_curvature_g(sampler, patch, step),
        weyl_k_err=weyl_k_check(sampler, patch, step),
        metadata={"patch": list(patch), "step": step},
    )
