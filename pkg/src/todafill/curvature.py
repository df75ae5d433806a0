"""Curvature of a 4-metric from finite differences of its components.

Conventions: R_abcd has R_abab > 0 on the round sphere, Ric_bd = g^ac R_abcd.
All derivatives use fourth-order centered stencils.
"""
from __future__ import annotations

import math
from itertools import combinations
from typing import Callable

import numpy as np

_OFF = np.array([-2.0, -1.0, 1.0, 2.0])
_W1 = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_W2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_PAIRS = list(combinations(range(4), 2))


def _stencil_offsets() -> np.ndarray:
    """Offsets (in units of the step) for pure and mixed derivatives; index 0 is the center."""
    offs = [np.zeros(4)]
    for k in range(4):
        for o in _OFF:
            e = np.zeros(4)
            e[k] = o
            offs.append(e)
    for k, l in _PAIRS:
        for a in _OFF:
            for b in _OFF:
                e = np.zeros(4)
                e[k], e[l] = a, b
                offs.append(e)
    return np.array(offs)


_OFFSETS = _stencil_offsets()


def metric_jet(metric: Callable, pts: np.ndarray, step: float):
    """g, first derivatives dg[k,i,j] = d_k g_ij and second derivatives ddg[k,l,i,j]."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    P = pts.shape[0]
    allpts = pts[:, None, :] + step * _OFFSETS[None, :, :]
    G = metric(allpts.reshape(-1, 4)).reshape(P, len(_OFFSETS), 4, 4)
    g = G[:, 0]
    dg = np.zeros((P, 4, 4, 4))
    ddg = np.zeros((P, 4, 4, 4, 4))
    pos = 1
    for k in range(4):
        S = G[:, pos : pos + 4]
        pos += 4
        dg[:, k] = np.einsum("s,psij->pij", _W1, S) / step
        five = np.concatenate([S[:, :2], g[:, None], S[:, 2:]], axis=1)
        ddg[:, k, k] = np.einsum("s,psij->pij", _W2, five) / step**2
    w11 = np.outer(_W1, _W1).reshape(-1)
    for k, l in _PAIRS:
        S = G[:, pos : pos + 16]
        pos += 16
        mixed = np.einsum("s,psij->pij", w11, S) / step**2
        ddg[:, k, l] = mixed
        ddg[:, l, k] = mixed
    return g, dg, ddg


def riemann_lower(g, dg, ddg):
    """Fully covariant Riemann tensor R_abcd from a 2-jet of the metric."""
    ginv = np.linalg.inv(g)
    # Gamma_{f,bc} = (d_b g_fc + d_c g_fb - d_f g_bc)/2
    Gl = 0.5 * (
        np.einsum("pbfc->pfbc", dg) + np.einsum("pcfb->pfbc", dg) - dg
    )
    Gu = np.einsum("pef,pfbc->pebc", ginv, Gl)
    # second-derivative part: (g_ad,bc + g_bc,ad - g_ac,bd - g_bd,ac)/2
    two = 0.5 * (
        np.einsum("pbcad->pabcd", ddg)
        + np.einsum("padbc->pabcd", ddg)
        - np.einsum("pbdac->pabcd", ddg)
        - np.einsum("pacbd->pabcd", ddg)
    )
    quad = np.einsum("pef,pebc,pfad->pabcd", g, Gu, Gu) - np.einsum(
        "pef,pebd,pfac->pabcd", g, Gu, Gu
    )
    return two + quad, ginv


def kulkarni_nomizu(A, B):
    return (
        np.einsum("pac,pbd->pabcd", A, B)
        + np.einsum("pbd,pac->pabcd", A, B)
        - np.einsum("pad,pbc->pabcd", A, B)
        - np.einsum("pbc,pad->pabcd", A, B)
    )


def orthonormal_frame(g):
    """E with E^T g E = I, upper triangular with positive diagonal (orientation preserving)."""
    L = np.linalg.cholesky(g)
    return np.swapaxes(np.linalg.inv(L), -1, -2)


# self-dual basis of 2-forms in an oriented orthonormal frame
_SD = np.zeros((3, 4, 4))
for _I, ((_a, _b), (_c, _d)) in enumerate((((0, 1), (2, 3)), ((0, 2), (3, 1)), ((0, 3), (1, 2)))):
    for (_i, _j) in ((_a, _b), (_c, _d)):
        _SD[_I, _i, _j] = 1.0 / math.sqrt(2.0)
        _SD[_I, _j, _i] = -1.0 / math.sqrt(2.0)


class Curvature:
    """Curvature quantities at a batch of points."""

    def __init__(self, g, dg, ddg):
        self.g = g
        self.Rm, self.ginv = riemann_lower(g, dg, ddg)
        self.Ric = np.einsum("pac,pabcd->pbd", self.ginv, self.Rm)
        self.s = np.einsum("pbd,pbd->p", self.ginv, self.Ric)
        self.E = orthonormal_frame(g)

    @classmethod
    def at(cls, metric: Callable, pts, step: float) -> "Curvature":
        return cls(*metric_jet(metric, pts, step))

    def frame2(self, T):
        return np.einsum("pia,pjb,pij->pab", self.E, self.E, T)

    def frame4(self, T):
        E = self.E
        return np.einsum("pia,pjb,pkc,pld,pijkl->pabcd", E, E, E, E, T)

    def einstein_defect(self, lam: float = -3.0) -> np.ndarray:
        """Frame norm of Ric - lam*g at each point."""
        D = self.frame2(self.Ric - lam * self.g)
        return np.sqrt(np.einsum("pab,pab->p", D, D))

    def weyl(self):
        g = self.g
        return (
            self.Rm
            - 0.5 * kulkarni_nomizu(self.Ric, g)
            + (self.s / 12.0)[:, None, None, None, None] * kulkarni_nomizu(g, g)
        )

    def weyl_plus(self) -> np.ndarray:
        """3x3 matrix of W+ acting on the self-dual 2-forms, per point."""
        Wf = self.frame4(self.weyl())
        return 0.25 * np.einsum("Iab,pabcd,Jcd->pIJ", _SD, Wf, _SD)

    def weyl_plus_norm(self) -> np.ndarray:
        Wp = self.weyl_plus()
        return np.sqrt(np.einsum("pIJ,pIJ->p", Wp, Wp))
