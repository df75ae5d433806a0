"""Dirichlet problem for the averaged-subtracted field u = w - wbar on [0, 1/2] x T^2.

The unknown lives on the lifted radial grid r_m = (m + 1/2) dr, dr = sqrt(2)/M,
with xi = 1/2 - r^2/4. In these variables the equation reads

    Lap_x u + psi * Lap_z(e^u) - drift * e^u * r u_r + 2K (e^u - 1) = 0,

with Lap_z f = f_rr + (3/r) f_r and drift = (2 psi_xi + a psi)/2. The near-bolt
degeneracy becomes the regular polar-coordinate singularity of R^4 at r = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import decoupled as dc
from .admissibility import BaseSurface, FillTuple, is_admissible
from .errors import (
    NewtonDiverged,
    NonAdmissible,
    NormalizationFailed,
    NutDegenerate,
    ShapeMismatch,
)
from .surface import (
    BoundaryDatum,
    ScalarField2,
    TorusGrid,
    integrate,
    laplacian_array,
    normalize_boundary,
)

R_MAX = math.sqrt(2.0)


@dataclass(frozen=True)
class RadialLift:
    profile: dc.DecoupledProfile
    M: int
    dr: float
    r: np.ndarray
    xi: np.ndarray
    psi: np.ndarray
    psi_xi: np.ndarray
    a: np.ndarray

    @property
    def drift(self) -> np.ndarray:
        return 0.5 * (2.0 * self.psi_xi + self.a * self.psi)

    @property
    def wbar0(self) -> float:
        """wbar at the conformal boundary xi = 0."""
        return math.log(self.profile.tuple.area_a / self.profile.vol)

    def wbar(self) -> np.ndarray:
        return np.log(self.profile.E(self.xi) / self.profile.vol)


def lift_coefficients(profile: dc.DecoupledProfile, M: int) -> RadialLift:
    if M < 16:
        raise ValueError("need M >= 16 radial cells")
    rep = dc.check_smoothness_conditions(profile)
    if rep.nut_degenerate or profile.kind == "nut":
        raise NutDegenerate("nut profiles have psi = 0 at the origin of the lift")
    dr = R_MAX / M
    r = (np.arange(M) + 0.5) * dr
    xi = 0.5 - 0.25 * r**2
    psi = dc.psi(profile, xi)
    if not np.all(psi > 0):
        raise NonAdmissible("psi must be positive on the lifted grid (bolt profile required)")
    return RadialLift(
        profile, M, dr, r, xi, psi, dc.psi_xi(profile, xi), dc.coef_a(profile, xi)
    )


@dataclass(frozen=True)
class LiftedField:
    """u(r_m, x_i, y_j) plus its Dirichlet slice at r = sqrt(2)."""

    values: np.ndarray
    boundary: np.ndarray
    grid: TorusGrid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        b = np.asarray(self.boundary, dtype=float)
        if v.ndim != 3 or v.shape[1:] != self.grid.shape or b.shape != self.grid.shape:
            raise ShapeMismatch(
                f"field {v.shape} / boundary {b.shape} inconsistent with grid {self.grid.shape}"
            )


# ------------------------------------------------------------------ residual


def _extend(U: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """Append ghost slices: even reflection at r=0, Dirichlet 2*ub - u_last at r=sqrt(2)."""
    return np.concatenate([U[:1], U, (2.0 * ub - U[-1])[None]], axis=0)


def residual_array(U, ub, lift: RadialLift, grid: TorusGrid, K: float = 0.0) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.shape != (lift.M,) + grid.shape:
        raise ShapeMismatch(f"u has shape {U.shape}, expected {(lift.M,) + grid.shape}")
    dr = lift.dr
    r = lift.r[:, None, None]
    Ue = _extend(U, ub)
    f = np.exp(Ue)
    D1f = (f[2:] - f[:-2]) / (2.0 * dr)
    D2f = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dr**2
    D1u = (Ue[2:] - Ue[:-2]) / (2.0 * dr)
    psi = lift.psi[:, None, None]
    drift = lift.drift[:, None, None]
    out = laplacian_array(U, grid.h_x, grid.h_y)
    out += psi * (D2f + (3.0 / r) * D1f)
    out -= drift * f[1:-1] * r * D1u
    if K:
        out += 2.0 * K * (f[1:-1] - 1.0)
    return out


def residual(u: LiftedField, lift: RadialLift, K: float = 0.0) -> np.ndarray:
    return residual_array(u.values, u.boundary, lift, u.grid, K)


# ------------------------------------------------------------------ Jacobian


@dataclass(frozen=True)
class _Bands:
    """Radial couplings of the Jacobian: lower (m-1), diag (m), upper (m+1)."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray


def _bands(U, ub, lift: RadialLift, K: float) -> _Bands:
    dr = lift.dr
    r = lift.r[:, None, None]
    psi = lift.psi[:, None, None]
    drift = lift.drift[:, None, None]
    Ue = _extend(U, ub)
    f = np.exp(Ue)
    fm, f0, fp = f[:-2], f[1:-1], f[2:]
    D1u = (Ue[2:] - Ue[:-2]) / (2.0 * dr)
    al_m = psi * (1.0 / dr**2 - 1.5 / (r * dr))
    al_0 = -2.0 * psi / dr**2
    al_p = psi * (1.0 / dr**2 + 1.5 / (r * dr))
    beta = drift * r / (2.0 * dr)

    diag = al_0 * f0 - drift * r * f0 * D1u + 2.0 * K * f0
    lower = al_m * fm + beta * f0
    upper = al_p * fp - beta * f0
    # fold ghosts back onto the diagonal: u[-1] = u[0], u[M] = 2 ub - u[M-1]
    diag[0] += lower[0]
    diag[-1] -= upper[-1]
    lower = lower.copy()
    upper = upper.copy()
    lower[0] = 0.0
    upper[-1] = 0.0
    return _Bands(lower, diag, upper)


def _periodic_1d(n: int, h: float) -> sp.csr_matrix:
    e = np.ones(n) / h**2
    A = sp.diags([e[:-1], -2.0 * e, e[:-1]], [-1, 0, 1], shape=(n, n), format="lil")
    A[0, n - 1] += 1.0 / h**2
    A[n - 1, 0] += 1.0 / h**2
    return A.tocsr()


def sigma_laplacian_matrix(grid: TorusGrid) -> sp.csr_matrix:
    Lx = _periodic_1d(grid.n_x, grid.h_x)
    Ly = _periodic_1d(grid.n_y, grid.h_y)
    return (sp.kron(Lx, sp.identity(grid.n_y)) + sp.kron(sp.identity(grid.n_x), Ly)).tocsr()


def _assemble(b: _Bands, grid: TorusGrid, M: int) -> sp.csr_matrix:
    S = grid.n_x * grid.n_y
    L = sp.kron(sp.identity(M, format="csr"), sigma_laplacian_matrix(grid))
    R = sp.diags(
        [b.lower.reshape(-1)[S:], b.diag.reshape(-1), b.upper.reshape(-1)[:-S]],
        [-S, 0, S],
        shape=(M * S, M * S),
    )
    return (L + R).tocsr()


def linearize(u: LiftedField, lift: RadialLift, K: float = 0.0) -> sp.csr_matrix:
    """Exact Jacobian of the discrete residual at u (flattened in C order)."""
    return _assemble(_bands(u.values, u.boundary, lift, K), u.grid, lift.M)


def jacobian_fd_check(
    u: LiftedField, lift: RadialLift, rng: np.random.Generator, n_dirs: int = 10, eps: float = 1e-6, K: float = 0.0
) -> float:
    """Max over random unit directions of |central FD quotient - J v|_inf."""
    J = linearize(u, lift, K)
    worst = 0.0
    for _ in range(n_dirs):
        v = rng.standard_normal(u.values.shape)
        v /= np.max(np.abs(v))
        rp = residual_array(u.values + eps * v, u.boundary, lift, u.grid, K)
        rm = residual_array(u.values - eps * v, u.boundary, lift, u.grid, K)
        fd = (rp - rm) / (2.0 * eps)
        worst = max(worst, float(np.max(np.abs(fd.reshape(-1) - J @ v.reshape(-1)))))
    return worst


class _MeanFieldPreconditioner:
    """Inverse of the Jacobian with radial couplings averaged over the torus.

    That operator is diagonalized by the FFT on the torus and is tridiagonal
    in r for every Fourier mode, so it is applied with batched Thomas sweeps.
    """

    def __init__(self, b: _Bands, grid: TorusGrid, M: int):
        self.grid, self.M = grid, M
        lam = grid.eigenvalues()[:, : grid.n_y // 2 + 1].reshape(-1)
        lo = b.lower.mean(axis=(1, 2))
        di = b.diag.mean(axis=(1, 2))
        up = b.upper.mean(axis=(1, 2))
        diag = di[:, None] + lam[None, :]
        cp = np.empty_like(diag)
        inv = np.empty_like(diag)
        inv[0] = 1.0 / diag[0]
        cp[0] = up[0] * inv[0]
        for m in range(1, M):
            inv[m] = 1.0 / (diag[m] - lo[m] * cp[m - 1])
            cp[m] = up[m] * inv[m]
        self.lo, self.cp, self.inv = lo, cp, inv

    def __call__(self, x: np.ndarray) -> np.ndarray:
        g, M = self.grid, self.M
        X = np.fft.rfft2(x.reshape(M, g.n_x, g.n_y), axes=(1, 2)).reshape(M, -1)
        d = np.empty_like(X)
        d[0] = X[0] * self.inv[0]
        for m in range(1, M):
            d[m] = (X[m] - self.lo[m] * d[m - 1]) * self.inv[m]
        for m in range(M - 2, -1, -1):
            d[m] -= self.cp[m] * d[m + 1]
        y = np.fft.irfft2(d.reshape(M, g.n_x, g.n_y // 2 + 1), s=g.shape, axes=(1, 2))
        return y.reshape(-1)


# ------------------------------------------------------------------ solver


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-10
    max_newton: int = 25
    continuation_steps: int = 4
    backtrack_factor: float = 0.5
    max_backtracks: int = 20
    linear_solver: str = "auto"  # "direct-sparse" | "iterative" | "auto"
    linear_rtol: float = 1e-10
    gmres_restart: int = 60
    gmres_budget: int = 600  # total inner iterations per linear solve
    direct_max_unknowns: int = 2048
    jacobian_check: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("newton_tol", "max_newton", "continuation_steps", "max_backtracks",
                     "linear_rtol", "gmres_restart", "gmres_budget"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.linear_solver not in ("direct-sparse", "iterative", "auto"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")

    def resolved_linear_solver(self, n_unknowns: int) -> str:
        if self.linear_solver != "auto":
            return self.linear_solver
        return "direct-sparse" if n_unknowns <= self.direct_max_unknowns else "iterative"

    def to_dict(self) -> dict:
        return asdict(self)


def _linear_solve(J, rhs, bands, grid, M, cfg: SolverConfig, kind: str):
    """Returns (delta, inner iterations, achieved relative residual)."""
    nb = float(np.linalg.norm(rhs))
    if nb == 0.0:
        return np.zeros_like(rhs), 0, 0.0
    if kind == "direct-sparse":
        x = spla.splu(J.tocsc()).solve(rhs)
        return x, 0, float(np.linalg.norm(J @ x - rhs) / nb)
    P = _MeanFieldPreconditioner(bands, grid, M)
    Pop = spla.LinearOperator(J.shape, matvec=P, dtype=float)
    x = np.zeros_like(rhs)
    used = 0
    count = [0]

    def cb(_):
        count[0] += 1

    achieved = 1.0
    while used < cfg.gmres_budget:
        cycles = max(1, (cfg.gmres_budget - used) // cfg.gmres_restart)
        count[0] = 0
        x, _ = spla.gmres(
            J, rhs, x0=x, rtol=cfg.linear_rtol * 1e-2, atol=0.0,
            restart=cfg.gmres_restart, maxiter=cycles, M=Pop,
            callback=cb, callback_type="pr_norm",
        )
        used += max(count[0], 1)
        achieved = float(np.linalg.norm(J @ x - rhs) / nb)
        if achieved <= cfg.linear_rtol:
            break
    return x, used, achieved


def _sup(x) -> float:
    return float(np.max(np.abs(x)))


@dataclass
class SolveDiagnostics:
    grid: dict
    linear_solver: str
    continuation_path: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    newton_per_step: list = field(default_factory=list)
    backtracks: list = field(default_factory=list)
    linear_iterations: list = field(default_factory=list)
    linear_achieved_rtol: list = field(default_factory=list)
    quadratic_constants: list = field(default_factory=list)
    jacobian_fd_errors: list = field(default_factory=list)
    margins: Optional[dict] = None
    converged: bool = False

    @property
    def newton_iterations(self) -> int:
        return int(sum(self.newton_per_step))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["newton_iterations"] = self.newton_iterations
        return d


@dataclass(frozen=True)
class TodaSolution:
    u: LiftedField
    lift: RadialLift
    tuple: FillTuple
    config: SolverConfig
    diagnostics: SolveDiagnostics

    @property
    def grid(self) -> TorusGrid:
        return self.u.grid

    @property
    def xi(self) -> np.ndarray:
        return self.lift.xi

    def w(self) -> np.ndarray:
        return self.u.values + self.lift.wbar()[:, None, None]

    def restrict_to_xi(self):
        return restrict_to_xi(self.u, self.lift)


def restrict_to_xi(u: LiftedField, lift: RadialLift):
    """(xi nodes, values) with xi_m = 1/2 - r_m^2/4; the slices are carried over as is."""
    return lift.xi.copy(), np.array(u.values, copy=True)


def _newton(U, ub, lift, grid, cfg, kind, diag: SolveDiagnostics, rng, K=0.0):
    hist = []
    R = residual_array(U, ub, lift, grid, K)
    r = _sup(R)
    hist.append(r)
    its = 0
    while r >= cfg.newton_tol:
        if its >= cfg.max_newton:
            diag.residual_history.append(hist)
            diag.newton_per_step.append(its)
            raise NewtonDiverged(
                f"no convergence after {its} Newton steps (residual {r:.3e})", diag.to_dict()
            )
        b = _bands(U, ub, lift, K)
        J = _assemble(b, grid, lift.M)
        if cfg.jacobian_check:
            diag.jacobian_fd_errors.append(
                jacobian_fd_check(LiftedField(U, ub, grid), lift, rng, K=K)
            )
        delta, nit, ach = _linear_solve(J, -R.reshape(-1), b, grid, lift.M, cfg, kind)
        diag.linear_iterations.append(nit)
        diag.linear_achieved_rtol.append(ach)
        delta = delta.reshape(U.shape)
        lam = 1.0
        for nb in range(cfg.max_backtracks + 1):
            U_try = U + lam * delta
            R_try = residual_array(U_try, ub, lift, grid, K)
            r_try = _sup(R_try)
            if np.isfinite(r_try) and r_try <= (1.0 - 1e-4 * lam) * r:
                break
            lam *= cfg.backtrack_factor
        else:
            diag.residual_history.append(hist)
            diag.newton_per_step.append(its)
            raise NewtonDiverged(
                f"line search failed after {cfg.max_backtracks} backtracks (residual {r:.3e})",
                diag.to_dict(),
            )
        diag.backtracks.append(nb)
        if r < 1e-3 and r > 0:
            diag.quadratic_constants.append(r_try / r**2)
        U, R, r = U_try, R_try, r_try
        hist.append(r)
        its += 1
    diag.residual_history.append(hist)
    diag.newton_per_step.append(its)
    return U


def solve(
    datum: BoundaryDatum,
    t: FillTuple,
    cfg: SolverConfig = SolverConfig(),
    M: int = 32,
    initial: Optional[np.ndarray] = None,
) -> TodaSolution:
    """Newton with continuation in the boundary data, starting from the averaged solution."""
    base = BaseSurface.of_genus(1)
    if t.chi != 0:
        raise NonAdmissible("the full PDE is only discretized over the flat torus (genus 1)")
    verdict = is_admissible(t, base)
    if not verdict.admissible:
        raise NonAdmissible("tuple is not admissible: " + ", ".join(verdict.violated_conditions))
    grid = datum.grid
    area = integrate(np.exp(datum.phi.values), grid)
    if abs(area - t.area_a) > 1e-8 * t.area_a or abs(datum.target_area - t.area_a) > 1e-8 * t.area_a:
        raise NormalizationFailed(
            f"boundary data has area {area!r}, tuple requires {t.area_a!r}"
        )
    profile = dc.build_profile(t, base)
    lift = lift_coefficients(profile, M)
    n_unknowns = M * grid.n_x * grid.n_y
    kind = cfg.resolved_linear_solver(n_unknowns)
    diag = SolveDiagnostics(
        grid={"M": M, "n_x": grid.n_x, "n_y": grid.n_y, "unknowns": n_unknowns},
        linear_solver=kind,
    )
    rng = np.random.default_rng(cfg.seed)
    w0 = lift.wbar0
    dphi = datum.phi.values - w0
    U = np.zeros((M,) + grid.shape) if initial is None else np.array(initial, dtype=float)
    N = cfg.continuation_steps
    ub = dphi
    for step in range(1, N + 1):
        s = step / N
        if s < 1.0:
            phi_s = normalize_boundary(ScalarField2(grid, w0 + s * dphi), t.area_a)
            ub = phi_s.phi.values - w0
        else:
            ub = dphi
        diag.continuation_path.append(s)
        U = _newton(U, ub, lift, grid, cfg, kind, diag, rng)
    diag.converged = True
    u = LiftedField(U, ub, grid)
    sol = TodaSolution(u, lift, t, cfg, diag)
    ms, mi = max_principle_check(sol)
    diag.margins = {"margin_sup": ms, "margin_inf": mi}
    return sol


def max_principle_check(sol: TodaSolution):
    """(sup_bdry u+ - sup u, inf u + sup_bdry u-); both are >= 0 for a true solution."""
    ub = sol.u.boundary
    U = sol.u.values
    sup_plus = max(float(np.max(ub)), 0.0)
    sup_minus = max(float(np.max(-ub)), 0.0)
    return sup_plus - float(np.max(U)), float(np.min(U)) + sup_minus


def solution_from_arrays(U, ub, grid: TorusGrid, t: FillTuple) -> TodaSolution:
    """Rebuild a solution object from stored slices (e.g. a dump) for re-verification."""
    U = np.asarray(U, dtype=float)
    profile = dc.build_profile(t, BaseSurface.of_genus(1))
    lift = lift_coefficients(profile, U.shape[0])
    u = LiftedField(U, np.asarray(ub, dtype=float), grid)
    diag = SolveDiagnostics(
        grid={"M": lift.M, "n_x": grid.n_x, "n_y": grid.n_y, "unknowns": U.size},
        linear_solver="none",
    )
    return TodaSolution(u, lift, t, SolverConfig(), diag)
