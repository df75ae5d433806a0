"""Decision procedures for which (deg, chi, k, a, p) tuples admit a smooth fill-in.

All branch thresholds are handled as exact rationals in c = k^3:
1/48, 1/96, 1/192. A finite k is stored through its cube as a
``Fraction`` so that inputs such as ``1/cbrt48`` land exactly on a threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from .errors import (
    InconsistentTuple,
    KIsMinusCubeRoot96,
    SpecialKDegreeMismatch,
    ZeroK,
)

C48 = Fraction(1, 48)
C96 = Fraction(1, 96)
C192 = Fraction(1, 192)

BOUNDARY_RTOL = 1e-12
DATA_RTOL = 1e-9

_CUBE_TOKENS = {"1/cbrt48": C48, "1/cbrt96": C96, "1/cbrt192": C192}


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


@dataclass(frozen=True)
class ExtendedK:
    """k in R u {+inf, -inf}, stored as its exact cube when finite."""

    cube: Optional[Fraction] = None
    inf_sign: int = 0

    def __post_init__(self):
        if self.cube is None:
            if self.inf_sign not in (1, -1):
                raise ValueError("infinite k needs inf_sign = +1 or -1")
            return
        if self.inf_sign != 0:
            raise ValueError("finite k cannot carry an infinite sign")
        if self.cube == 0:
            raise ZeroK("k must be nonzero")
        if self.cube == -C96:
            raise KIsMinusCubeRoot96("k = -1/cbrt(96) makes 96k^3 + 1 vanish")

    @classmethod
    def inf(cls, sign: int = 1) -> "ExtendedK":
        return cls(None, 1 if sign > 0 else -1)

    @classmethod
    def from_cube(cls, c: Union[Fraction, int, float, str]) -> "ExtendedK":
        return cls(Fraction(c), 0)

    @classmethod
    def from_value(cls, k: Union[Fraction, int, float, str]) -> "ExtendedK":
        if isinstance(k, float) and math.isinf(k):
            return cls.inf(1 if k > 0 else -1)
        if isinstance(k, float) and math.isnan(k):
            raise ValueError("k is NaN")
        return cls(Fraction(k) ** 3, 0)

    @classmethod
    def parse(cls, token: str) -> "ExtendedK":
        """Parse 'inf', '-inf', a decimal, or a signed '1/cbrt48'-style token."""
        s = token.strip().lower().replace(" ", "")
        if s in ("inf", "+inf", "infinity", "+infinity"):
            return cls.inf(1)
        if s in ("-inf", "-infinity"):
            return cls.inf(-1)
        sign = 1
        body = s
        if body.startswith("-"):
            sign, body = -1, body[1:]
        elif body.startswith("+"):
            body = body[1:]
        if body in _CUBE_TOKENS:
            return cls.from_cube(sign * _CUBE_TOKENS[body])
        try:
            return cls.from_value(Fraction(s))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse k from {token!r}") from exc

    @property
    def is_infinite(self) -> bool:
        return self.cube is None

    @property
    def k3(self) -> float:
        return math.copysign(math.inf, self.inf_sign) if self.cube is None else float(self.cube)

    @property
    def inv_k3(self) -> float:
        """1/k^3, structurally zero for k = +-inf."""
        return 0.0 if self.cube is None else float(1 / self.cube)

    @property
    def value(self) -> float:
        return math.copysign(math.inf, self.inf_sign) if self.cube is None else _cbrt(float(self.cube))

    def token(self) -> str:
        if self.cube is None:
            return "inf" if self.inf_sign > 0 else "-inf"
        for name, c in _CUBE_TOKENS.items():
            if self.cube == c:
                return name
            if self.cube == -c:
                return "-" + name
        return repr(self.value)

    def __str__(self) -> str:
        return self.token()


@dataclass(frozen=True)
class BaseSurface:
    genus: int
    curvature_sign: int
    volume: float

    @classmethod
    def of_genus(cls, genus: int) -> "BaseSurface":
        if genus < 0:
            raise ValueError("genus must be nonnegative")
        if genus == 0:
            return cls(0, 1, 4 * math.pi)
        if genus == 1:
            return cls(1, 0, 4 * math.pi**2)
        return cls(genus, -1, -2 * math.pi * (2 - 2 * genus))

    @property
    def chi(self) -> int:
        return 2 - 2 * self.genus


class _AreaFree:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "AREA_FREE"


AREA_FREE = _AreaFree()


def canonical_period_area_exact(deg: int, chi: int, k: ExtendedK):
    """(p/pi, a/pi) as Fractions, with a/pi replaced by AREA_FREE at k^3 = 1/48."""
    if k.is_infinite:
        return Fraction(1), -(Fraction(deg) + Fraction(chi, 2))
    c = k.cube
    if c == C48:
        if deg != -chi:
            raise SpecialKDegreeMismatch(
                f"k^3 = 1/48 requires deg = -chi, got deg={deg}, chi={chi}"
            )
        return Fraction(2, 3), AREA_FREE
    p = 96 * c / (96 * c + 1)
    s = 1 / (48 * c)
    a = -Fraction(chi + deg) / (2 * (1 - s)) - Fraction(deg) / (2 + s)
    return p, a


def canonical_period_area(deg: int, chi: int, k: ExtendedK):
    """Canonical (period p, area a); the area is AREA_FREE when k^3 = 1/48."""
    p, a = canonical_period_area_exact(deg, chi, k)
    return math.pi * float(p), (a if a is AREA_FREE else math.pi * float(a))


@dataclass(frozen=True)
class FillTuple:
    deg: int
    chi: int
    k: ExtendedK
    area_a: float
    period_p: float

    @classmethod
    def canonical(cls, deg: int, chi: int, k: ExtendedK, area: Optional[float] = None) -> "FillTuple":
        p, a = canonical_period_area(deg, chi, k)
        if a is AREA_FREE:
            if area is None:
                raise ValueError("k^3 = 1/48 leaves the area free; pass area=")
            a = float(area)
        return cls(deg, chi, k, float(a), float(p))

    def to_dict(self) -> dict:
        return {
            "deg": self.deg,
            "chi": self.chi,
            "k": self.k.token(),
            "k3": self.k.k3 if not self.k.is_infinite else self.k.token(),
            "a": self.area_a,
            "p": self.period_p,
        }


class Branch(str, Enum):
    GENERIC_K = "GenericK"
    SPECIAL_K48 = "SpecialK48"
    ASD = "ASD"
    NUT = "Nut"


@dataclass(frozen=True)
class AdmissibleVerdict:
    admissible: bool
    branch: Branch
    violated_conditions: tuple = ()
    boundary_warning: bool = False
    decoupled_only: bool = False
    beta: Optional[float] = None
    notes: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        d = {
            "admissible": self.admissible,
            "branch": self.branch.value,
            "violated_conditions": list(self.violated_conditions),
            "boundary_warning": self.boundary_warning,
            "decoupled_only": self.decoupled_only,
        }
        if self.beta is not None:
            d["beta"] = self.beta
        return d


def ratio_R(c) -> Union[Fraction, float]:
    """(96c + 1)/(192c - 1), with the c = +-inf limit 1/2."""
    if c is None or (isinstance(c, float) and math.isinf(c)):
        return Fraction(1, 2)
    return (96 * c + 1) / (192 * c - 1)


def _crossing(v: Fraction) -> Fraction:
    """The c at which ratio_R(c) = v (v != 1/2)."""
    return (v + 1) / (192 * v - 96)


def _near(c: Fraction, threshold: Fraction) -> bool:
    if threshold == 0:
        return False
    return c != threshold and abs(float((c - threshold) / threshold)) < BOUNDARY_RTOL


def _rel_close(x: float, y: float, rtol: float = DATA_RTOL) -> bool:
    return abs(x - y) <= rtol * max(abs(x), abs(y))


def _check_consistent(t: FillTuple, base: BaseSurface) -> None:
    if t.chi != base.chi:
        raise InconsistentTuple(f"chi={t.chi} does not match genus {base.genus}")
    if t.chi % 2:
        raise InconsistentTuple("chi must be even")


def _in_outer_range(k: ExtendedK) -> bool:
    """k in [-inf, -1/cbrt96) u (1/cbrt48, inf]."""
    return k.is_infinite or k.cube < -C96 or k.cube > C48


def _degree_condition(t: FillTuple, genus: int) -> tuple[bool, str]:
    """Evaluate the k-interval and degree inequality; returns (ok, failure label)."""
    k, deg, chi = t.k, t.deg, t.chi
    if genus >= 1:
        if _in_outer_range(k):
            R = ratio_R(None if k.is_infinite else k.cube)
            return (deg < -chi * R), "degree-range"
        c = k.cube
        if C192 < c < C48:
            return (deg > -chi * ratio_R(c)), "degree-range"
        return False, "k-range"
    if _in_outer_range(k):
        return deg < -chi, "degree-range"
    c = k.cube
    if C192 <= c < C48:
        return deg > -chi, "degree-range"
    if 0 < c < C192:
        return (-chi < deg < -chi * ratio_R(c)), "degree-range"
    return False, "k-range"


def _boundary_flag(t: FillTuple) -> bool:
    if t.k.is_infinite:
        return False
    c = t.k.cube
    thresholds = [C48, C192, -C96]
    if t.chi != 0 and t.deg != -t.chi:
        v = Fraction(t.deg, -t.chi)
        if v != Fraction(1, 2):
            thresholds.append(_crossing(v))
    return any(_near(c, th) for th in thresholds)


def is_admissible(t: FillTuple, base: BaseSurface) -> AdmissibleVerdict:
    """Literal evaluation of the bolt admissibility conditions for (t, base)."""
    _check_consistent(t, base)
    violated: list[str] = []
    if not (t.area_a > 0 and t.period_p > 0):
        violated.append("C1")
    k = t.k
    warn = _boundary_flag(t)
    genus0 = base.genus == 0

    if k.is_infinite:
        branch = Branch.ASD
    elif k.cube == C48:
        branch = Branch.SPECIAL_K48
    else:
        branch = Branch.GENERIC_K

    if branch is Branch.SPECIAL_K48:
        if t.deg != -t.chi:
            violated.append("degree-range")
        if not _rel_close(t.period_p, 2 * math.pi / 3):
            violated.append("period-mismatch")
        floor = math.pi * t.chi / 3 if genus0 else 0.0
        if not t.area_a > floor:
            violated.append("area-mismatch")
    else:
        if t.deg == -t.chi:
            violated.append("degree-range")
        else:
            ok, label = _degree_condition(t, base.genus)
            if not ok:
                violated.append(label)
            p, a = canonical_period_area(t.deg, t.chi, k)
            if not _rel_close(t.period_p, p):
                violated.append("period-mismatch")
            if not _rel_close(t.area_a, a):
                violated.append("area-mismatch")

    violated = list(dict.fromkeys(violated))
    return AdmissibleVerdict(
        admissible=not violated,
        branch=branch,
        violated_conditions=tuple(violated),
        boundary_warning=warn,
        decoupled_only=genus0,
    )


def nut_beta(k: ExtendedK) -> float:
    if k.is_infinite:
        return 1.0
    c = k.cube
    return float(96 * c / (96 * c + 1))


def nut_admissible(k: ExtendedK) -> AdmissibleVerdict:
    """The nut over the 4-ball closes smoothly iff k in [-inf, -1/cbrt96) u (0, inf]."""
    ok = k.is_infinite or k.cube > 0 or k.cube < -C96
    warn = (not k.is_infinite) and _near(k.cube, -C96)
    return AdmissibleVerdict(
        admissible=ok,
        branch=Branch.NUT,
        violated_conditions=() if ok else ("k-range",),
        boundary_warning=warn,
        decoupled_only=True,
        beta=nut_beta(k) if ok else None,
    )


# ---------------------------------------------------------------- k ranges

INF = math.inf


@dataclass(frozen=True)
class KInterval:
    """An interval of k^3 values; endpoints are Fractions or +-inf."""

    lo: Union[Fraction, float]
    hi: Union[Fraction, float]
    lo_closed: bool
    hi_closed: bool

    def contains(self, k: ExtendedK) -> bool:
        c = k.k3 if k.is_infinite else k.cube
        if self.lo_closed:
            above = c >= self.lo
        else:
            above = c > self.lo
        if self.hi_closed:
            below = c <= self.hi
        else:
            below = c < self.hi
        return above and below

    def k_endpoints(self) -> tuple[float, float]:
        conv = lambda x: x if isinstance(x, float) else _cbrt(float(x))
        return conv(self.lo), conv(self.hi)

    def __str__(self) -> str:
        lb = "[" if self.lo_closed else "("
        rb = "]" if self.hi_closed else ")"
        return f"k^3 in {lb}{self.lo}, {self.hi}{rb}"

    def to_dict(self) -> dict:
        enc = lambda x: str(x) if isinstance(x, Fraction) else ("inf" if x > 0 else "-inf")
        lo_k, hi_k = (x if math.isfinite(x) else ("inf" if x > 0 else "-inf") for x in self.k_endpoints())
        return {
            "k3_lo": enc(self.lo),
            "k3_hi": enc(self.hi),
            "lo_closed": self.lo_closed,
            "hi_closed": self.hi_closed,
            "k_lo": lo_k,
            "k_hi": hi_k,
        }


def _outer_intervals_R_greater(v: Fraction) -> list[KInterval]:
    """c in [-inf, -1/96) u (1/48, inf] with ratio_R(c) > v."""
    out = []
    # negative branch: R runs from 1/2 (c = -inf) down to 0 (c -> -1/96)
    if v < 0:
        out.append(KInterval(-INF, -C96, True, False))
    elif v < Fraction(1, 2):
        out.append(KInterval(-INF, _crossing(v), True, False))
    # positive branch: R runs from 1 (c -> 1/48) down to 1/2 (c = inf)
    if v < Fraction(1, 2):
        out.append(KInterval(C48, INF, False, True))
    elif v == Fraction(1, 2):
        out.append(KInterval(C48, INF, False, False))
    elif v < 1:
        out.append(KInterval(C48, _crossing(v), False, False))
    return out


def k_range_for(deg: int, chi: int, genus: int) -> list[KInterval]:
    """Union of k^3 intervals for which the canonical tuple is admissible."""
    if genus < 0:
        raise ValueError("genus must be nonnegative")
    if chi != 2 - 2 * genus:
        raise InconsistentTuple(f"chi={chi} does not match genus {genus}")
    if deg == -chi:
        return [KInterval(C48, C48, True, True)]
    if genus == 0:
        out = []
        if deg < -chi:
            out.append(KInterval(-INF, -C96, True, False))
            out.append(KInterval(C48, INF, False, True))
        else:
            out.append(KInterval(C192, C48, True, False))
            # band 0 < c < 1/192 where ratio_R < -deg/chi; ratio_R < -1 there
            v = Fraction(-deg, chi)
            if v >= -1:
                out.append(KInterval(Fraction(0), C192, False, False))
            else:
                out.append(KInterval(_crossing(v), C192, False, False))
        return out
    if chi == 0:
        if deg < 0:
            return [KInterval(-INF, -C96, True, False), KInterval(C48, INF, False, True)]
        return [KInterval(C192, C48, False, False)]
    # chi < 0: deg < -chi R  <=>  R > v ; deg > -chi R <=> R < v
    v = Fraction(deg, -chi)
    out = _outer_intervals_R_greater(v)
    # band (1/192, 1/48): R runs from +inf down to 1
    if v > 1:
        out.append(KInterval(_crossing(v), C48, False, False))
    out.sort(key=lambda iv: float(iv.lo))
    return out
