"""Periodic finite differences on the flat square torus of area 4*pi^2."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteInput, ShapeMismatch

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TorusGrid:
    n_x: int
    n_y: int

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("grid counts must be positive")

    @property
    def h_x(self) -> float:
        return TWO_PI / self.n_x

    @property
    def h_y(self) -> float:
        return TWO_PI / self.n_y

    @property
    def shape(self) -> tuple:
        return (self.n_x, self.n_y)

    @property
    def area(self) -> float:
        return TWO_PI * TWO_PI

    def coords(self):
        """Node coordinates (x_i, y_j) = (i h_x, j h_y) as 2D arrays, 'ij' indexing."""
        x = np.arange(self.n_x) * self.h_x
        y = np.arange(self.n_y) * self.h_y
        return np.meshgrid(x, y, indexing="ij")

    def eigenvalues(self) -> np.ndarray:
        """Symbols of the 5-point Laplacian on the FFT modes, shape (n_x, n_y)."""
        kx = np.arange(self.n_x)
        ky = np.arange(self.n_y)
        lx = -(4.0 / self.h_x**2) * np.sin(math.pi * kx / self.n_x) ** 2
        ly = -(4.0 / self.h_y**2) * np.sin(math.pi * ky / self.n_y) ** 2
        return lx[:, None] + ly[None, :]


@dataclass(frozen=True)
class ScalarField2:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ShapeMismatch(f"values shape {v.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteInput("field has non-finite values")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _vals(f):
    return f.values if isinstance(f, ScalarField2) else np.asarray(f, dtype=float)


def laplacian_array(v: np.ndarray, h_x: float, h_y: float) -> np.ndarray:
    """5-point periodic Laplacian over the last two axes."""
    return (
        (np.roll(v, 1, axis=-2) - 2.0 * v + np.roll(v, -1, axis=-2)) / h_x**2
        + (np.roll(v, 1, axis=-1) - 2.0 * v + np.roll(v, -1, axis=-1)) / h_y**2
    )


def laplacian(f: ScalarField2) -> ScalarField2:
    g = f.grid
    return ScalarField2(g, laplacian_array(f.values, g.h_x, g.h_y))


def integrate_array(v: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Periodic trapezoid rule over the last two axes."""
    return np.sum(v, axis=(-2, -1)) * grid.h_x * grid.h_y


def integrate(f, grid: TorusGrid | None = None) -> float:
    g = f.grid if isinstance(f, ScalarField2) else grid
    return float(integrate_array(_vals(f), g))


def mean(f, grid: TorusGrid | None = None) -> float:
    g = f.grid if isinstance(f, ScalarField2) else grid
    return integrate(f, g) / g.area


@dataclass(frozen=True)
class BoundaryDatum:
    phi: ScalarField2
    target_area: float

    @property
    def grid(self) -> TorusGrid:
        return self.phi.grid


def normalize_boundary(phi_raw: ScalarField2, a: float) -> BoundaryDatum:
    """Shift phi by a constant so that the integral of e^phi equals a."""
    if not (math.isfinite(a) and a > 0):
        raise ValueError("target area must be positive and finite")
    v = phi_raw.values
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("boundary data has non-finite values")
    # factor out the max for a stable log-sum-exp
    m = float(np.max(v))
    s = integrate(np.exp(v - m), phi_raw.grid)
    c = math.log(a) - m - math.log(s)
    return BoundaryDatum(ScalarField2(phi_raw.grid, v + c), float(a))


def fourier_field(grid: TorusGrid, modes, const: float = 0.0) -> ScalarField2:
    """const + sum amp * cos(kx x + ky y) for amp > 0 style triples; see parse_preset."""
    X, Y = grid.coords()
    v = np.full(grid.shape, float(const))
    for kx, ky, amp, kind in modes:
        arg = kx * X + ky * Y
        v = v + amp * (np.cos(arg) if kind == "cos" else np.sin(arg))
    return ScalarField2(grid, v)
