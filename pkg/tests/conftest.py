import math
from fractions import Fraction

import numpy as np
import pytest

from todafill import BaseSurface, ExtendedK, FillTuple, normalize_boundary
from todafill.surface import TorusGrid, fourier_field


def canonical(genus, deg, k, area=None):
    base = BaseSurface.of_genus(genus)
    kk = k if isinstance(k, ExtendedK) else ExtendedK.parse(str(k))
    return FillTuple.canonical(deg, base.chi, kk, area=area), base


def torus_datum(t, n, modes=()):
    """w̄(0) plus the given Fourier modes, renormalized to the tuple's area."""
    grid = TorusGrid(n, n)
    w0 = math.log(t.area_a / (4 * math.pi**2))
    return normalize_boundary(fourier_field(grid, list(modes), const=w0), t.area_a)


GENERIC_MODES = ((1, 0, 0.3, "cos"), (0, 1, 0.2, "sin"))


@pytest.fixture(scope="session")
def torus_tuple():
    return canonical(1, -1, 1)[0]


@pytest.fixture(scope="session")
def generic_solution(torus_tuple):
    from todafill import solve

    return solve(torus_datum(torus_tuple, 12, GENERIC_MODES), torus_tuple, M=24)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


SWEEP_CUBES = [
    Fraction(-10**6), Fraction(-1), Fraction(-1, 50), Fraction(1, 1000), Fraction(1, 250),
    Fraction(1, 150), Fraction(1, 100), Fraction(1, 30), Fraction(1), Fraction(10**3),
]


def admissible_sweep():
    """Profiles of admissible tuples over every branch, plus nut profiles.

    Returns a list of (label, profile) with labels naming the branch.
    """
    from todafill import build_profile, is_admissible, nut_profile
    from todafill.admissibility import C48

    out = []
    for genus in (0, 1, 2, 3):
        base = BaseSurface.of_genus(genus)
        ks = [ExtendedK.from_cube(c) for c in SWEEP_CUBES] + [ExtendedK.inf(1), ExtendedK.inf(-1)]
        for deg in range(-6, 7):
            if deg == -base.chi:
                continue
            for k in ks:
                t = FillTuple.canonical(deg, base.chi, k)
                v = is_admissible(t, base)
                if v.admissible:
                    out.append((f"{v.branch.value}-g{genus}", build_profile(t, base)))
        for area in (2.5, 7.0, 30.0):
            t = FillTuple.canonical(-base.chi, base.chi, ExtendedK.from_cube(C48), area=area)
            if is_admissible(t, base).admissible:
                out.append((f"SpecialK48-g{genus}", build_profile(t, base)))
    for tok in ("inf", "-inf", "1", "0.1", "-1", "1/cbrt48"):
        out.append(("Nut", nut_profile(ExtendedK.parse(tok))))
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
