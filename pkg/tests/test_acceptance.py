"""Acceptance criteria 1-10, one PASS/FAIL line each (shown in the terminal summary)."""
import filecmp
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from todafill import BaseSurface, ExtendedK, FillTuple, SolverConfig, is_admissible, k_range_for, nut_profile, solve
from todafill.admissibility import C48, C96, C192, KInterval, canonical_period_area_exact
from todafill.decoupled import evaluate, toda_ode_residual
from todafill.geometry import decoupled_sampler, solution_fields
from todafill.toda_bvp import LiftedField, jacobian_fd_check, lift_coefficients
from todafill.verify import conserved_linear, conserved_quartic, einstein_residual, scalar_curvature_g, weyl_k_check, weyl_plus_h

from conftest import ACCEPTANCE_LINES, GENERIC_MODES, admissible_sweep, canonical, torus_datum

INF = math.inf


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_decoupled_exactness():
    t0 = time.perf_counter()
    sweep = admissible_sweep()
    xs = np.linspace(0.0, 0.5, 1000)
    worst = max(float(np.max(np.abs(toda_ode_residual(p, xs)))) for _, p in sweep)
    elapsed = time.perf_counter() - t0
    labels = {lab for lab, _ in sweep}
    cubes = [p.tuple.k.cube for lab, p in sweep if p.tuple.k.cube is not None and lab.startswith("GenericK")]
    covered = (
        {f"GenericK-g{g}" for g in range(4)} | {f"ASD-g{g}" for g in range(4)} | {"SpecialK48-g0", "SpecialK48-g1", "Nut"}
    ) <= labels
    bands = (
        any(c < -C96 for c in cubes)
        and any(C192 < c < C48 for c in cubes)
        and any(c > C48 for c in cubes)
        and any(0 < p.tuple.k.cube < C192 for lab, p in sweep if lab == "GenericK-g0")
        and {p.tuple.k.inf_sign for lab, p in sweep if lab.startswith("ASD")} == {1, -1}
    )
    ok = len(sweep) >= 100 and covered and bands and worst < 1e-10 and elapsed < 5.0
    report(1, ok, f"{len(sweep)} profiles, max residual {worst:.2e}, {elapsed:.2f} s")


def test_criterion_02_branch_fidelity():
    checks = []
    checks.append(k_range_for(-1, 0, 1) == [KInterval(-INF, -C96, True, False), KInterval(C48, INF, False, True)])
    checks.append(k_range_for(1, 0, 1) == [KInterval(C192, C48, False, False)])
    checks.append(k_range_for(0, 0, 1) == [KInterval(C48, C48, True, True)])
    checks.append(k_range_for(-3, 2, 0) == [KInterval(-INF, -C96, True, False), KInterval(C48, INF, False, True)])
    checks.append(k_range_for(-1, 2, 0) == [KInterval(C192, C48, True, False), KInterval(Fraction(0), C192, False, False)])
    # hand-solved crossings of R(c) = (96c+1)/(192c-1) against -deg/chi
    checks.append(k_range_for(3, -2, 2) == [KInterval(Fraction(5, 384), C48, False, False)])
    checks.append(k_range_for(1, -2, 2) == [KInterval(C48, INF, False, False)])
    checks.append(k_range_for(5, 2, 0) == [KInterval(C192, C48, True, False), KInterval(Fraction(1, 384), C192, False, False)])

    # flips at the thresholds, sampled a relative 1e-15 either side
    eps = Fraction(1, 10**15)
    flips = 0
    cases = [(1, 1, C192, +1), (1, -1, C48, +1), (1, -1, -C96, -1), (0, -3, -C96, -1), (0, -3, C48, +1), (2, 5, C48, -1)]
    for genus, deg, th, side in cases:
        base = BaseSurface.of_genus(genus)

        def adm(c):
            return is_admissible(FillTuple.canonical(deg, base.chi, ExtendedK.from_cube(c)), base).admissible

        inside = adm(th * (1 + side * eps)) if th > 0 else adm(th * (1 - side * eps))
        outside = adm(th * (1 - side * eps)) if th > 0 else adm(th * (1 + side * eps))
        flips += int(inside and not outside)
    ok = all(checks) and flips == len(cases)
    report(2, ok, f"{sum(checks)}/{len(checks)} interval sets exact, {flips}/{len(cases)} threshold flips")


def test_criterion_03_special_values():
    ok = True
    # degree 0 over the torus pins k^3 = 1/48 and p = 2 pi/3
    rng = k_range_for(0, 0, 1)
    ok &= rng == [KInterval(C48, C48, True, True)]
    p, _ = canonical_period_area_exact(0, 0, ExtendedK.from_cube(C48))
    ok &= p == Fraction(2, 3)
    # k = +-inf: p = pi, a = -pi(deg + chi/2), exactly as rationals times pi
    for sign in (1, -1):
        for deg, chi in ((-1, 0), (-4, 2), (3, -6)):
            p, a = canonical_period_area_exact(deg, chi, ExtendedK.inf(sign))
            ok &= p == 1 and a == -(deg + Fraction(chi, 2))
    # nut at k = +-inf is the hyperbolic ball
    xi = np.linspace(0.0, 0.5, 1001)[:-1]
    dev = 0.0
    for sign in (1, -1):
        v = evaluate(nut_profile(ExtendedK.inf(sign)), xi)
        dev = max(dev, float(np.max(np.abs(v.W * (1 - 2 * xi) - 1))))
        dev = max(dev, float(np.max(np.abs(v.e_w / (0.25 * (1 - 2 * xi) ** 2) - 1))))
    ok &= dev <= 4 * np.finfo(float).eps
    report(3, bool(ok), f"hyperbolic-ball max relative deviation {dev:.1e}")


def test_criterion_04_solver_consistency(torus_tuple):
    t0 = time.perf_counter()
    sol = solve(torus_datum(torus_tuple, 32), torus_tuple, M=64)
    elapsed = time.perf_counter() - t0
    u_sup = float(np.max(np.abs(sol.u.values)))
    its = sol.diagnostics.newton_iterations
    report(4, u_sup < 1e-8 and its <= 2 and elapsed < 60, f"|u|_inf {u_sup:.1e}, {its} Newton steps, {elapsed:.2f} s")


def test_criterion_05_jacobian(torus_tuple):
    t, base = canonical(1, -1, 1)
    from todafill import build_profile
    from todafill.surface import TorusGrid

    lift = lift_coefficients(build_profile(t, base), 24)
    g = TorusGrid(12, 10)
    rng = np.random.default_rng(2024)
    errs = []
    for _ in range(10):
        U = 0.5 * rng.standard_normal((lift.M,) + g.shape)
        ub = 0.5 * rng.standard_normal(g.shape)
        errs.append(jacobian_fd_check(LiftedField(U, ub, g), lift, rng, n_dirs=1, eps=1e-6))
    worst = max(errs)
    report(5, worst < 1e-5, f"10 random pairs, max |FD - Jv| {worst:.1e}")


GRIDS = ((48, 24), (96, 48))


@pytest.fixture(scope="module")
def generic_runs(torus_tuple):
    runs = {}
    for M, n in GRIDS:
        t0 = time.perf_counter()
        sol = solve(torus_datum(torus_tuple, n, GENERIC_MODES), torus_tuple, M=M)
        runs[(M, n)] = (sol, time.perf_counter() - t0)
    return runs


@pytest.mark.slow
def test_criterion_06_generic_solve(generic_runs):
    ok = True
    parts = []
    for (M, n), (sol, elapsed) in generic_runs.items():
        d = sol.diagnostics
        W = solution_fields(sol).W
        m = min(d.margins.values())
        ok &= d.converged and d.newton_iterations <= 15 and m >= -1e-8 and bool(np.all(W > 0)) and elapsed < 300
        parts.append(f"({M},{n},{n}): {d.newton_iterations} steps, margin {m:.1e}, min W {W.min():.3f}, {elapsed:.1f} s")
    report(6, bool(ok), "; ".join(parts))


@pytest.mark.slow
def test_criterion_07_conserved_laws(generic_runs):
    (coarse, _), (fine, _) = (generic_runs[g] for g in GRIDS)
    rl = conserved_linear(coarse) / conserved_linear(fine)
    rq = conserved_quartic(coarse) / conserved_quartic(fine)
    ok = abs(rl - 4) <= 1.2 and abs(rq - 4) <= 1.2
    report(7, ok, f"linear ratio {rl:.2f}, quartic ratio {rq:.2f} "
                  f"(errors {conserved_linear(fine):.2e}, {conserved_quartic(fine):.2e} on the fine grid)")


def test_criterion_08_einstein():
    from todafill import build_profile

    t, base = canonical(1, -1, 1)
    s = decoupled_sampler(build_profile(t, base))
    r = einstein_residual(s, (0.1, 0.4), 1e-3)
    # halving from steps where truncation dominates roundoff
    ladder = [einstein_residual(s, (0.1, 0.4), h) for h in (0.01, 0.005, 0.0025)]
    ratios = [ladder[0] / ladder[1], ladder[1] / ladder[2]]
    ball = einstein_residual(decoupled_sampler(nut_profile(ExtendedK.inf())), (0.1, 0.4), 1e-3)
    ok = r < 1e-4 and all(abs(q - 16) <= 0.3 * 16 for q in ratios) and ball < 1e-6
    report(8, ok, f"torus {r:.1e}, halving ratios {ratios[0]:.1f} {ratios[1]:.1f}, hyperbolic ball {ball:.1e}")


def test_criterion_09_curvature_laws():
    from todafill import build_profile

    finite = [(1, -1, "1"), (2, -3, "2"), (1, -3, "-2"), (0, -3, "1"), (3, 14, "0.2")]
    s_err = w_err = 0.0
    for genus, deg, k in finite:
        t, base = canonical(genus, deg, k)
        s = decoupled_sampler(build_profile(t, base))
        s_err = max(s_err, scalar_curvature_g(s))
        w_err = max(w_err, weyl_k_check(s))
    trend = True
    w_last = 0.0
    for sign in (1, -1):
        t, base = canonical(1, -1, ExtendedK.inf(sign))
        s = decoupled_sampler(build_profile(t, base))
        w = [float(np.max(weyl_plus_h(s, step=h)[1])) for h in (4e-3, 2e-3, 1e-3)]
        trend &= w[0] > w[1] > w[2]
        w_last = max(w_last, w[2])
    ok = s_err < 1e-4 and w_err < 1e-2 and trend and w_last < 1e-4
    report(9, bool(ok), f"scalar {s_err:.1e}, Weyl relation {w_err:.1e}, ASD |W+| {w_last:.1e} and falling")


def test_criterion_10_determinism(tmp_path):
    args = ["--genus", "1", "--deg", "-1", "--k", "1", "--M", "32", "--nx", "16",
            "--boundary", "fourier:[(1,0,0.3),(0,1,0.2,'sin')]"]
    same = []
    for solver in ("direct-sparse", "iterative"):
        dumps = []
        for run in range(2):
            d = tmp_path / f"{solver}-{run}.csv"
            subprocess.run(
                [sys.executable, "-m", "todafill", "solve", *args, "--linear-solver", solver,
                 "--out-dump", str(d), "--out-diagnostics", str(tmp_path / f"{solver}-{run}.json")],
                check=True, capture_output=True,
            )
            dumps.append(d)
        same.append(filecmp.cmp(dumps[0], dumps[1], shallow=False))
    report(10, all(same), f"bit-identical dumps: direct {same[0]}, iterative {same[1]}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
