"""Kaehler metric g = W dxi^2 + W^-1 eta^2 + W e^w g_Sigma and h = g/xi^2.

Coordinates of the interior chart are (xi, theta, x, y) with eta = dtheta + X dx + Y dy,
theta of period p. The base metric is e^sigma (dx^2 + dy^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import NdBSpline, make_interp_spline

from . import decoupled as dc
from .admissibility import ExtendedK
from .errors import MeanMismatch, NonPositiveW, ShapeMismatch
from .surface import TWO_PI, TorusGrid, integrate_array, laplacian_array
from .toda_bvp import TodaSolution, _extend


def compute_W(xi, w_xi, k: ExtendedK) -> np.ndarray:
    """W = (12 - 6 xi w_xi)/(12 + xi^3/k^3)."""
    xi = np.asarray(xi, dtype=float)
    W = (12.0 - 6.0 * xi * np.asarray(w_xi)) / (12.0 + xi**3 * k.inv_k3)
    if np.any(~(W > 0)):
        raise NonPositiveW("W <= 0 at some node")
    return W


@dataclass(frozen=True)
class SliceFields:
    """e^w, W e^w and W at the interior radial nodes, plus the xi = 0 boundary slice."""

    xi: np.ndarray  # (M,), decreasing
    e_w: np.ndarray  # (M, n_x, n_y)
    We_w: np.ndarray
    W: np.ndarray
    boundary_e_w: np.ndarray  # e^phi at xi = 0
    grid: TorusGrid
    r: np.ndarray
    dr: float


def _one_sided_last(G: np.ndarray, G_bdry: np.ndarray, dr: float) -> np.ndarray:
    """d/dr at the last cell center from nodes at -dr, 0 and the wall at +dr/2."""
    h1, h2 = dr, 0.5 * dr
    return (
        -h2 / (h1 * (h1 + h2)) * G[-2]
        + (h2 - h1) / (h1 * h2) * G[-1]
        + h1 / (h2 * (h1 + h2)) * G_bdry
    )


def _radial_derivative(U: np.ndarray, ub: np.ndarray, dr: float) -> np.ndarray:
    """Centered u_r with even reflection at r = 0, second-order one-sided at the wall.

    The ghost difference used by the residual is only first order in the last row.
    """
    Ue = _extend(U, ub)
    D1 = (Ue[2:] - Ue[:-2]) / (2.0 * dr)
    D1[-1] = _one_sided_last(U, ub, dr)
    return D1


def solution_fields(sol: TodaSolution, check: bool = True) -> SliceFields:
    """Evaluate e^w, We^w, W from a converged solution.

    The xi-derivative of e^w combines the exact derivative of the averaged part
    with centered differences of u in r, using E * u_xi = -(r/2) Vol psi u_r
    so that nothing is divided by the vanishing factor (1/2 - xi).
    """
    lift = sol.lift
    prof = lift.profile
    U, ub = sol.u.values, sol.u.boundary
    D1u = _radial_derivative(U, ub, lift.dr)
    xi = lift.xi[:, None, None]
    r = lift.r[:, None, None]
    V = prof.vol
    f = np.exp(U)
    e_w = prof.E(xi) * f / V
    e_w_xi = f * (prof.E.deriv()(xi) / V - 0.5 * r * lift.psi[:, None, None] * D1u)
    We_w = (12.0 * e_w - 6.0 * xi * e_w_xi) / (12.0 + xi**3 * prof.inv_k3)
    if check and np.any(~(We_w > 0)):
        raise NonPositiveW("W e^w <= 0 at some node")
    W = We_w / e_w
    if check and np.any(~(W > 0)):
        raise NonPositiveW("W <= 0 at some node")
    bdry = np.exp(ub + lift.wbar0)
    return SliceFields(lift.xi.copy(), e_w, We_w, W, bdry, sol.grid, lift.r.copy(), lift.dr)


# ------------------------------------------------------------- curvature form


@dataclass(frozen=True)
class CurvatureTwoForm:
    """d eta = F1 dx^dy + (-W_y dx + W_x dy)^dxi on each xi slice."""

    xi: np.ndarray
    F1: np.ndarray
    curl_x: np.ndarray
    curl_y: np.ndarray
    grid: TorusGrid


def _d_dxi(fields: SliceFields, G: np.ndarray, G_bdry: Optional[np.ndarray]) -> np.ndarray:
    """d/dxi = -(2/r) d/dr, centered in r with even reflection at r = 0.

    The last node uses the xi = 0 slice half a cell further out when it is
    known, else a backward three-point difference.
    """
    dr = fields.dr
    r = fields.r[:, None, None]
    Ge = np.concatenate([G[:1], G], axis=0)
    dG = np.empty_like(G)
    dG[:-1] = (Ge[2:] - Ge[:-2]) / (2.0 * dr)
    if G_bdry is None:
        dG[-1] = (3.0 * G[-1] - 4.0 * G[-2] + G[-3]) / (2.0 * dr)
    else:
        dG[-1] = _one_sided_last(G, G_bdry, dr)
    return -(2.0 / r) * dG


def _d_torus(v: np.ndarray, h: float, axis: int) -> np.ndarray:
    return (np.roll(v, -1, axis=axis) - np.roll(v, 1, axis=axis)) / (2.0 * h)


def curvature_two_form(fields: SliceFields) -> CurvatureTwoForm:
    g = fields.grid
    F1 = _d_dxi(fields, fields.We_w, fields.boundary_e_w)
    Wx = _d_torus(fields.W, g.h_x, -2)
    Wy = _d_torus(fields.W, g.h_y, -1)
    return CurvatureTwoForm(fields.xi, F1, -Wy, Wx, g)


def decoupled_two_form(prof: dc.DecoupledProfile, xi, grid: TorusGrid) -> CurvatureTwoForm:
    xi = np.asarray(xi, dtype=float)
    F1 = np.broadcast_to(prof.F.deriv()(xi)[:, None, None] / prof.vol, (len(xi),) + grid.shape)
    z = np.zeros_like(F1)
    return CurvatureTwoForm(xi, np.array(F1), z, z.copy(), grid)


def degree_quantization(cf: CurvatureTwoForm, period: float) -> np.ndarray:
    """(1/p) * integral of F1 over the torus, per slice; an integer for a genuine bundle."""
    return integrate_array(cf.F1, cf.grid) / period


def closedness_defect(fields: SliceFields, cf: CurvatureTwoForm) -> np.ndarray:
    """Per-slice sup of |d/dxi F1 + Lap W| (the dxi^dx^dy component of d(d eta))."""
    g = fields.grid
    dF1 = _d_dxi(fields, cf.F1, None)
    lapW = laplacian_array(fields.W, g.h_x, g.h_y)
    return np.max(np.abs(dF1 + lapW), axis=(1, 2))


@dataclass(frozen=True)
class Potentials:
    """Periodic parts of X, Y on one slice; the full Y adds mean * x."""

    X: np.ndarray
    Y: np.ndarray
    mean: float


def _spectral_k(n: int) -> np.ndarray:
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0  # Nyquist mode has no odd derivative on the grid
    return k


def reconstruct_potentials(
    cf: CurvatureTwoForm, m: int, expected_mean: Optional[float] = None, rtol: float = 1e-2
) -> Potentials:
    """Solve Lap chi = F1 - mean by FFT; X = -chi_y, Y = chi_x (+ mean * x, not stored)."""
    g = cf.grid
    F = cf.F1[m]
    mean = float(integrate_array(F, g) / g.area)
    if expected_mean is not None and abs(mean - expected_mean) > rtol * max(1.0, abs(expected_mean)):
        raise MeanMismatch(f"slice mean {mean!r} differs from {expected_mean!r}")
    kx = _spectral_k(g.n_x)[:, None]
    ky = _spectral_k(g.n_y)[None, :]
    kx_full = np.fft.fftfreq(g.n_x, d=1.0 / g.n_x)[:, None]
    ky_full = np.fft.fftfreq(g.n_y, d=1.0 / g.n_y)[None, :]
    sym = -(kx_full**2 + ky_full**2)
    sym[0, 0] = 1.0
    Fh = np.fft.fft2(F - mean)
    chi_h = Fh / sym
    chi_h[0, 0] = 0.0
    X = -np.real(np.fft.ifft2(1j * ky * chi_h))
    Y = np.real(np.fft.ifft2(1j * kx * chi_h))
    return Potentials(X, Y, mean)


def fd_curl(X: np.ndarray, Y: np.ndarray, grid: TorusGrid, mean: float = 0.0) -> np.ndarray:
    """Y_x - X_y by centered differences (the linear term contributes exactly `mean`)."""
    return _d_torus(Y, grid.h_x, -2) - _d_torus(X, grid.h_y, -1) + mean


# ------------------------------------------------------------- metric


@dataclass(frozen=True)
class MetricFields:
    """Slice data for the sampler.

    Interpolation uses the smooth quantities S = e^w/(1/2 - xi) and We^w;
    W = We^w/((1/2 - xi) S) keeps its exact pole at the bolt.
    """

    xi: np.ndarray  # increasing
    W: np.ndarray
    e_w: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    mean_F1: float
    period: float
    k: ExtendedK
    grid: TorusGrid

    def __post_init__(self):
        for name in ("W", "e_w", "X", "Y"):
            if getattr(self, name).shape != (len(self.xi),) + self.grid.shape:
                raise ShapeMismatch(f"{name} has the wrong shape")
        if np.any(~(self.W > 0)):
            raise NonPositiveW("W <= 0 at a stored node")


def metric_fields(sol: TodaSolution) -> MetricFields:
    fields = solution_fields(sol)
    cf = curvature_two_form(fields)
    t = sol.tuple
    c = t.deg * t.period_p / sol.lift.profile.vol
    X = np.empty_like(cf.F1)
    Y = np.empty_like(cf.F1)
    for m in range(len(fields.xi)):
        pot = reconstruct_potentials(cf, m, expected_mean=c)
        X[m], Y[m] = pot.X, pot.Y
    order = np.argsort(fields.xi)
    return MetricFields(
        fields.xi[order], fields.W[order], fields.e_w[order], X[order], Y[order],
        c, t.period_p, t.k, fields.grid,
    )


def _periodic_spline(xi: np.ndarray, V: np.ndarray) -> NdBSpline:
    """Cubic in xi, periodic cubic in x and y."""
    nx, ny = V.shape[1:]
    x = np.arange(nx + 1) * (TWO_PI / nx)
    y = np.arange(ny + 1) * (TWO_PI / ny)
    V = np.concatenate([V, V[:, :1]], axis=1)
    V = np.concatenate([V, V[:, :, :1]], axis=2)
    b0 = make_interp_spline(xi, V, k=3, axis=0)
    b1 = make_interp_spline(x, b0.c, k=3, bc_type="periodic", axis=1)
    c = np.moveaxis(b1.c, 0, 1)
    b2 = make_interp_spline(y, c, k=3, bc_type="periodic", axis=2)
    c = np.moveaxis(b2.c, 0, 2)
    return NdBSpline((b0.t, b1.t, b2.t), c, 3)


def _wrap(v):
    return np.mod(v, TWO_PI)


@dataclass(frozen=True)
class MetricSampler:
    """Pointwise evaluator of g and h in the interior or bolt chart."""

    W: Callable
    e_w: Callable
    X: Callable
    Y: Callable
    conf: Callable
    period: float
    k: ExtendedK
    chart: str = "interior"
    xi_range: tuple = (0.0, 0.5)
    sigma_points: tuple = ((0.7, 1.3), (2.1, 4.4))

    def bolt(self) -> "MetricSampler":
        return replace(self, chart="bolt")

    def interior(self) -> "MetricSampler":
        return replace(self, chart="interior")

    def xi_of(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.chart == "interior":
            return pts[..., 0]
        tau2 = pts[..., 0] ** 2 + pts[..., 1] ** 2
        return 0.5 - (math.pi / self.period) * tau2

    def _g_interior(self, pts) -> np.ndarray:
        xi, x, y = pts[..., 0], pts[..., 2], pts[..., 3]
        W = self.W(xi, x, y)
        ew = self.e_w(xi, x, y)
        X = self.X(xi, x, y)
        Y = self.Y(xi, x, y)
        s = W * ew * self.conf(x, y)
        iW = 1.0 / W
        g = np.zeros(pts.shape[:-1] + (4, 4))
        g[..., 0, 0] = W
        g[..., 1, 1] = iW
        g[..., 1, 2] = g[..., 2, 1] = iW * X
        g[..., 1, 3] = g[..., 3, 1] = iW * Y
        g[..., 2, 2] = iW * X * X + s
        g[..., 3, 3] = iW * Y * Y + s
        g[..., 2, 3] = g[..., 3, 2] = iW * X * Y
        return g

    def g(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.chart == "interior":
            return self._g_interior(pts)
        x1, x2 = pts[..., 0], pts[..., 1]
        tau2 = x1**2 + x2**2
        q = TWO_PI / self.period
        ipts = np.stack(
            [0.5 - (math.pi / self.period) * tau2, np.arctan2(x2, x1) / q, pts[..., 2], pts[..., 3]],
            axis=-1,
        )
        G = self._g_interior(ipts)
        J = np.zeros(pts.shape[:-1] + (4, 4))
        J[..., 0, 0] = -q * x1
        J[..., 0, 1] = -q * x2
        J[..., 1, 0] = -x2 / (q * tau2)
        J[..., 1, 1] = x1 / (q * tau2)
        J[..., 2, 2] = 1.0
        J[..., 3, 3] = 1.0
        return np.einsum("...ia,...ij,...jb->...ab", J, G, J)

    def h(self, pts) -> np.ndarray:
        xi = self.xi_of(pts)
        return self.g(pts) / (xi**2)[..., None, None]


def assemble_metric(f: MetricFields) -> MetricSampler:
    gap = (0.5 - f.xi)[:, None, None]
    sS = _periodic_spline(f.xi, f.e_w / gap)
    sF = _periodic_spline(f.xi, f.W * f.e_w)
    sX = _periodic_spline(f.xi, f.X)
    sY = _periodic_spline(f.xi, f.Y)
    c = f.mean_F1

    def ev(s):
        def fn(xi, x, y):
            xi, x, y = np.broadcast_arrays(xi, x, y)
            p = np.stack([xi, _wrap(x), _wrap(y)], axis=-1)
            return s(p.reshape(-1, 3)).reshape(xi.shape)
        return fn

    S, Fw, Xf, Yp = ev(sS), ev(sF), ev(sX), ev(sY)
    return MetricSampler(
        W=lambda xi, x, y: Fw(xi, x, y) / ((0.5 - np.asarray(xi)) * S(xi, x, y)),
        e_w=lambda xi, x, y: (0.5 - np.asarray(xi)) * S(xi, x, y),
        X=Xf,
        Y=lambda xi, x, y: Yp(xi, x, y) + c * np.asarray(x),
        conf=lambda x, y: np.ones(np.broadcast(x, y).shape),
        period=f.period,
        k=f.k,
        xi_range=(float(f.xi[0]), 0.5),
    )


def decoupled_sampler(prof: dc.DecoupledProfile) -> MetricSampler:
    """Closed-form metric of a profile over its constant-curvature base.

    Base charts: flat torus (x, y in [0, 2pi)); stereographic sphere with
    e^sigma = 4/(1+|z|^2)^2; upper half-plane with e^sigma = 1/y^2.
    """
    E, F, V = prof.E, prof.F, prof.vol
    c = prof.tuple.deg * prof.tuple.period_p / V
    K = prof.base.curvature_sign

    def W(xi, x, y):
        xi = np.asarray(xi, dtype=float)
        return np.broadcast_to(F(xi) / E(xi), np.broadcast(xi, x, y).shape)

    def e_w(xi, x, y):
        xi = np.asarray(xi, dtype=float)
        return np.broadcast_to(E(xi) / V, np.broadcast(xi, x, y).shape)

    def zeros(xi, x, y):
        return np.zeros(np.broadcast(xi, x, y).shape)

    if K == 0:
        conf = lambda x, y: np.ones(np.broadcast(x, y).shape)
        X = zeros
        Y = lambda xi, x, y: c * np.broadcast_to(np.asarray(x, dtype=float), np.broadcast(xi, x, y).shape)
        pts = ((0.7, 1.3), (2.1, 4.4))
    elif K > 0:
        conf = lambda x, y: 4.0 / (1.0 + np.asarray(x) ** 2 + np.asarray(y) ** 2) ** 2
        X = lambda xi, x, y: -2.0 * c * np.asarray(y) / (1.0 + np.asarray(x) ** 2 + np.asarray(y) ** 2) + zeros(xi, x, y)
        Y = lambda xi, x, y: 2.0 * c * np.asarray(x) / (1.0 + np.asarray(x) ** 2 + np.asarray(y) ** 2) + zeros(xi, x, y)
        pts = ((0.3, 0.2), (-0.5, 0.8))
    else:
        conf = lambda x, y: 1.0 / np.asarray(y) ** 2 + 0.0 * np.asarray(x)
        X = lambda xi, x, y: c / np.asarray(y) + zeros(xi, x, y)
        Y = zeros
        pts = ((0.2, 1.0), (-0.4, 1.7))
    return MetricSampler(W, e_w, X, Y, conf, prof.tuple.period_p, prof.tuple.k, sigma_points=pts)


def nut_closed_form_g(k: ExtendedK, xi, x, y) -> np.ndarray:
    """The nut metric written directly as a function of xi, in the stereographic chart."""
    xi = np.asarray(xi, dtype=float)
    rho2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
    if k.is_infinite:
        A = 1.0 / (1.0 - 2.0 * xi)
        B = (1.0 - 2.0 * xi)
        Cs = 0.25 * (1.0 - 2.0 * xi)
        beta = 1.0
    else:
        c3 = k.k3
        A = 24 * c3 / ((1.0 - 2.0 * xi) * (24 * c3 + xi**2))
        B = (1.0 - 2.0 * xi) * (24 * c3 + xi**2) / (24 * c3)
        Cs = (1.0 - 2.0 * xi) * 24 * c3 / (96 * c3 + 1)
        beta = 96 * c3 / (96 * c3 + 1)
    cc = -beta / 2.0
    X = -2.0 * cc * np.asarray(y) / (1.0 + rho2)
    Y = 2.0 * cc * np.asarray(x) / (1.0 + rho2)
    conf = 4.0 / (1.0 + rho2) ** 2
    shape = np.broadcast(xi, x, y).shape
    g = np.zeros(shape + (4, 4))
    g[..., 0, 0] = A
    g[..., 1, 1] = B
    g[..., 1, 2] = g[..., 2, 1] = B * X
    g[..., 1, 3] = g[..., 3, 1] = B * Y
    g[..., 2, 2] = B * X * X + Cs * conf
    g[..., 3, 3] = B * Y * Y + Cs * conf
    g[..., 2, 3] = g[..., 3, 2] = B * X * Y
    return g
