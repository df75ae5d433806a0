"""Closed-form cohomogeneity-one profiles.

The averaged solution is encoded by two polynomials in xi:

    E(xi) = Vol * e^{wbar}  (quartic)
    F(xi) = Vol * W e^{wbar} = deg*p*xi + a  (linear)

and everything else (W, psi, the lifted-equation coefficients) is derived
from their coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from .admissibility import (
    BaseSurface,
    ExtendedK,
    FillTuple,
    is_admissible,
    nut_admissible,
    nut_beta,
)
from .errors import NonAdmissible, NotNutAdmissible, NutDegenerate, OutOfRange

ZERO_RTOL = 1e-11


@dataclass(frozen=True)
class DecoupledProfile:
    tuple: FillTuple
    base: BaseSurface
    E_coeffs: tuple  # c0..c4, ascending powers
    F_coeffs: tuple  # (a, deg*p)
    kind: str = "bolt"  # "bolt" or "nut"
    beta: Optional[float] = None

    @property
    def vol(self) -> float:
        return self.base.volume

    @property
    def inv_k3(self) -> float:
        return self.tuple.k.inv_k3

    @property
    def E(self) -> Polynomial:
        return Polynomial(self.E_coeffs)

    @property
    def F(self) -> Polynomial:
        return Polynomial(self.F_coeffs)

    def _scale(self) -> float:
        return sum(abs(c) * 0.5**i for i, c in enumerate(self.E_coeffs))

    @property
    def Q(self) -> Polynomial:
        """Cubic with E(xi) = (xi - 1/2) Q(xi); the remainder E(1/2) is dropped."""
        q, _ = divmod(self.E, Polynomial([-0.5, 1.0]))
        return q

    def has_bolt_zero(self) -> bool:
        return abs(self.E(0.5)) <= ZERO_RTOL * self._scale()

    def to_json_dict(self) -> dict:
        rep = check_smoothness_conditions(self)
        d = {
            "tuple": self.tuple.to_dict(),
            "base": {
                "genus": self.base.genus,
                "curvature_sign": self.base.curvature_sign,
                "volume": self.base.volume,
            },
            "E_coeffs": list(self.E_coeffs),
            "F_coeffs": list(self.F_coeffs),
            "A0": rep.A0,
            "kind": self.kind,
        }
        if self.beta is not None:
            d["beta"] = self.beta
        return d


def _coefficients(deg: int, chi: int, k: ExtendedK, a: float, p: float):
    inv = k.inv_k3
    dp = deg * p
    E = (a, 2.0 * dp, 2.0 * math.pi * chi, -(a / 6.0) * inv, -(dp / 12.0) * inv)
    F = (a, dp)
    return E, F


def build_profile(t: FillTuple, base: BaseSurface, override: bool = False) -> DecoupledProfile:
    """Quartic/linear profile of the averaged solution for a bolt tuple."""
    verdict = is_admissible(t, base)
    if not verdict.admissible and not override:
        raise NonAdmissible(
            "tuple is not admissible: " + ", ".join(verdict.violated_conditions)
        )
    E, F = _coefficients(t.deg, t.chi, t.k, t.area_a, t.period_p)
    return DecoupledProfile(t, base, E, F, "bolt")


def nut_profile(k: ExtendedK) -> DecoupledProfile:
    """Profile closing off at an isolated fixed point over the 4-ball."""
    if not nut_admissible(k).admissible:
        raise NotNutAdmissible(f"k={k} is outside the nut range")
    beta = nut_beta(k)
    base = BaseSurface.of_genus(0)
    t = FillTuple(-1, 2, k, math.pi * beta, 2.0 * math.pi * beta)
    E, F = _coefficients(t.deg, t.chi, k, t.area_a, t.period_p)
    return DecoupledProfile(t, base, E, F, "nut", beta)


def _check_xi(xi):
    x = np.asarray(xi, dtype=float)
    if np.any(x < 0) or np.any(x > 0.5) or np.any(~np.isfinite(x)):
        raise OutOfRange("xi must lie in [0, 1/2]")
    return x


@dataclass(frozen=True)
class ProfileValues:
    e_w: np.ndarray
    W: np.ndarray
    We_w: np.ndarray
    wbar_xi: np.ndarray
    psi: np.ndarray


def psi(prof: DecoupledProfile, xi) -> np.ndarray:
    """e^{wbar}/(1/2 - xi), continued through xi = 1/2 when E has a simple zero there."""
    x = np.asarray(xi, dtype=float)
    if prof.has_bolt_zero():
        return -prof.Q(x) / prof.vol
    with np.errstate(divide="ignore", invalid="ignore"):
        return prof.E(x) / (prof.vol * (0.5 - x))


def psi_xi(prof: DecoupledProfile, xi) -> np.ndarray:
    x = np.asarray(xi, dtype=float)
    if prof.has_bolt_zero():
        return -prof.Q.deriv()(x) / prof.vol
    E, dE = prof.E(x), prof.E.deriv()(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (dE * (0.5 - x) + E) / (prof.vol * (0.5 - x) ** 2)


def coef_a(prof: DecoupledProfile, xi) -> np.ndarray:
    x = np.asarray(xi, dtype=float)
    inv = prof.inv_k3
    return -6.0 * x**2 * inv / (12.0 + x**3 * inv)


def coef_b(prof: DecoupledProfile, xi) -> np.ndarray:
    x = np.asarray(xi, dtype=float)
    inv = prof.inv_k3
    return 12.0 * x * inv / (12.0 + x**3 * inv)


def _taylor_at_half(poly: Polynomial, scale: float) -> Polynomial:
    """poly in powers of (xi - 1/2), leading coefficients below roundoff set to 0.

    Evaluating this form keeps full relative accuracy next to a zero at 1/2,
    where the monomial form cancels.
    """
    c = [float(poly.deriv(j)(0.5)) / math.factorial(j) for j in range(poly.degree() + 1)]
    for j in range(len(c)):
        if abs(c[j]) > ZERO_RTOL * scale:
            break
        c[j] = 0.0
    return Polynomial(c)


def evaluate(prof: DecoupledProfile, xi) -> ProfileValues:
    """(e^w, W, We^w, wbar_xi, psi) at xi in [0, 1/2]; W = +inf on a zero of E."""
    x = _check_xi(xi)
    near = x > 0.25  # monomial form near 0, shifted form near the zero at 1/2
    t = x - 0.5
    E = np.where(near, _taylor_at_half(prof.E, prof._scale())(t), prof.E(x))
    F_half = _taylor_at_half(prof.F, sum(abs(c) * 0.5**i for i, c in enumerate(prof.F_coeffs)))
    F = np.where(near, F_half(t), prof.F(x))
    dE = prof.E.deriv()(x)
    zero = np.abs(E) <= ZERO_RTOL * prof._scale()
    with np.errstate(divide="ignore", invalid="ignore"):
        W = np.where(zero, np.inf, F / np.where(zero, 1.0, E))
        wxi = np.where(zero, -np.inf, dE / np.where(zero, 1.0, E))
    e_w = np.where(zero, 0.0, E / prof.vol)
    return ProfileValues(e_w, W, F / prof.vol, wxi, psi(prof, x))


# keep the short public name used throughout the package
eval_profile = evaluate


def toda_ode_residual(prof: DecoupledProfile, xi) -> np.ndarray:
    """(E'' + (xi/k^3) F)/Vol - 2K; vanishes identically for the averaged solution."""
    x = np.asarray(xi, dtype=float)
    E2 = prof.E.deriv(2)(x)
    return (E2 + x * prof.inv_k3 * prof.F(x)) / prof.vol - 2.0 * prof.base.curvature_sign


def identity_defect(prof: DecoupledProfile) -> float:
    """Relative coefficient mismatch of F*(12 + xi^3/k^3) against 12E - 6 xi E'."""
    lhs = prof.F * Polynomial([12.0, 0.0, 0.0, prof.inv_k3])
    rhs = 12.0 * prof.E - 6.0 * Polynomial([0.0, 1.0]) * prof.E.deriv()
    n = max(len(lhs.coef), len(rhs.coef))
    lc = np.pad(lhs.coef, (0, n - len(lhs.coef)))
    rc = np.pad(rhs.coef, (0, n - len(rhs.coef)))
    scale = max(np.max(np.abs(lc)), np.max(np.abs(rc)), 1e-300)
    return float(np.max(np.abs(lc - rc)) / scale)


@dataclass(frozen=True)
class SmoothnessReport:
    C1: bool
    C2: bool
    C3: bool
    A0: float
    cone_check: float
    nut_degenerate: bool = False

    @property
    def bolt_smooth(self) -> bool:
        return self.C1 and self.C2 and self.C3 and not self.nut_degenerate

    def failures(self) -> list:
        return [n for n, ok in (("C1", self.C1), ("C2", self.C2), ("C3", self.C3)) if not ok]


def _no_root_in(poly: Polynomial, lo: float, hi: float) -> bool:
    r = poly.roots()
    real = r[np.abs(r.imag) <= 1e-12 * np.maximum(1.0, np.abs(r.real))].real
    return not np.any((real >= lo) & (real <= hi))


def check_smoothness_conditions(prof: DecoupledProfile) -> SmoothnessReport:
    t = prof.tuple
    c1 = t.area_a > 0 and t.period_p > 0
    F = prof.F
    c2 = bool(F(0.0) > 0 and F(0.5) > 0)
    scale = prof._scale()
    dE_half = float(prof.E.deriv()(0.5))
    zero_at_half = prof.has_bolt_zero()
    simple = abs(dE_half) > ZERO_RTOL * scale
    nut = zero_at_half and not simple
    if zero_at_half:
        # E = (xi - 1/2) Q, so E > 0 on [0, 1/2) iff Q < 0 there
        Q = prof.Q
        if nut:
            Q2, _ = divmod(Q, Polynomial([-0.5, 1.0]))
            positive = bool(Q2(0.0) > 0) and _no_root_in(Q2, 0.0, 0.5)
        else:
            positive = bool(Q(0.0) < 0) and _no_root_in(Q, 0.0, 0.5)
    else:
        positive = bool(prof.E(0.0) > 0) and _no_root_in(prof.E, 0.0, 0.5 - 1e-15)
    c3 = bool(zero_at_half and simple and positive)
    if simple:
        A0 = float(-F(0.5) / dE_half)
        cone = abs(t.period_p / (2.0 * A0) - 2.0 * math.pi) if A0 != 0 else math.inf
    else:
        A0, cone = math.nan, math.nan
    return SmoothnessReport(c1, c2, c3, A0, cone, nut)


def profile_table(prof: DecoupledProfile, n: int = 101) -> dict:
    """Columns xi, e_w, W, We_w, psi on a uniform grid of [0, 1/2]."""
    xi = np.linspace(0.0, 0.5, n)
    v = evaluate(prof, xi)
    return {"xi": xi, "e_w": v.e_w, "W": v.W, "We_w": v.We_w, "psi": v.psi}
