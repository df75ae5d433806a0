"""Command-line interface: admissible | decoupled | solve | verify | sweep.

Exit codes: 0 success or affirmative verdict, 2 well-formed negative verdict, 1 error.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import decoupled as dc
from . import io
from . import toda_bvp as tb
from .admissibility import (
    AREA_FREE,
    BaseSurface,
    ExtendedK,
    FillTuple,
    is_admissible,
    k_range_for,
    nut_admissible,
)
from .errors import NewtonDiverged, SpecialKDegreeMismatch, TodaFillError
from .geometry import decoupled_sampler
from .surface import ScalarField2, TorusGrid, normalize_boundary
from .verify import verify_sampler, verify_solution

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


class UsageError(TodaFillError):
    pass


class _Parser(argparse.ArgumentParser):
    # usage mistakes are errors (exit 1), not negative verdicts
    def error(self, message):
        raise UsageError(message)


def _add_tuple_args(p, need_k=True):
    p.add_argument("--genus", type=int, help="genus of the base surface")
    p.add_argument("--deg", type=int, help="degree of the circle bundle")
    p.add_argument("--k", type=str, required=False, help="inf, -inf, decimal, or 1/cbrt48 style token")
    p.add_argument("--a", type=float, help="area of the boundary surface (default: canonical)")
    p.add_argument("--p", type=float, help="circle period (default: canonical)")
    p.add_argument("--nut", action="store_true", help="use the nut over the 4-ball (deg=-1, sphere)")
    p.add_argument("--config", type=str, help="JSON file of option values; flags win")


def _tuple_from_args(args):
    if args.k is None:
        raise UsageError("--k is required")
    k = ExtendedK.parse(str(args.k))
    if args.nut:
        return None, BaseSurface.of_genus(0), k
    if args.genus is None or args.deg is None:
        raise UsageError("--genus and --deg are required")
    base = BaseSurface.of_genus(args.genus)
    chi = base.chi
    try:
        t = FillTuple.canonical(args.deg, chi, k, area=args.a)
    except SpecialKDegreeMismatch:
        t = FillTuple(args.deg, chi, k, math.nan if args.a is None else args.a, 2.0 * math.pi / 3.0)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.a is not None or args.p is not None:
        t = FillTuple(
            t.deg, chi, k,
            t.area_a if args.a is None else args.a,
            t.period_p if args.p is None else args.p,
        )
    return t, base, k


# ------------------------------------------------------------------ commands


def cmd_admissible(args) -> int:
    t, base, k = _tuple_from_args(args)
    if t is None:
        v = nut_admissible(k)
        out = {"verdict": v.to_dict(), "k": k.token(), "deg": -1, "base_genus": 0}
        io.write_json(None, out)
        return EXIT_OK if v.admissible else EXIT_NEGATIVE
    v = is_admissible(t, base)
    out = {"verdict": v.to_dict(), "tuple": {**t.to_dict(), "a": io.finite_or_str(t.area_a)}}
    from .admissibility import canonical_period_area

    try:
        p, a = canonical_period_area(t.deg, t.chi, k)
        out["canonical"] = {"p": p, "a": "free" if a is AREA_FREE else a}
    except SpecialKDegreeMismatch:
        out["canonical"] = None
    out["k_ranges"] = [iv.to_dict() for iv in k_range_for(t.deg, t.chi, base.genus)]
    io.write_json(None, out)
    return EXIT_OK if v.admissible else EXIT_NEGATIVE


def cmd_decoupled(args) -> int:
    t, base, k = _tuple_from_args(args)
    if t is None:
        if not nut_admissible(k).admissible:
            print(f"k={k} is outside the nut range", file=sys.stderr)
            return EXIT_NEGATIVE
        prof = dc.nut_profile(k)
    else:
        v = is_admissible(t, base)
        if not v.admissible and not args.force:
            print("not admissible: " + ", ".join(v.violated_conditions), file=sys.stderr)
            return EXIT_NEGATIVE
        prof = dc.build_profile(t, base, override=args.force)
    io.write_json(args.out_json, prof.to_json_dict())
    if args.out_csv:
        io.write_table_csv(args.out_csv, dc.profile_table(prof, args.samples))
    return EXIT_OK


def _solver_config(args) -> tb.SolverConfig:
    return tb.SolverConfig(
        newton_tol=args.newton_tol,
        max_newton=args.max_newton,
        continuation_steps=args.continuation_steps,
        linear_solver=args.linear_solver,
        jacobian_check=args.jacobian_check,
        seed=args.seed,
    )


def cmd_solve(args) -> int:
    t, base, k = _tuple_from_args(args)
    if t is None or base.genus != 1:
        raise UsageError("solve needs a genus-1 tuple")
    grid = TorusGrid(args.nx, args.ny if args.ny is not None else args.nx)
    prof = dc.build_profile(t, base)
    w0 = math.log(t.area_a / prof.vol)
    if args.boundary_file:
        raw = io.read_field_csv(args.boundary_file)
        if raw.grid != grid:
            raise UsageError(f"boundary file grid {raw.grid.shape} != requested {grid.shape}")
        phi = raw
    else:
        pert = io.parse_preset(args.boundary, grid)
        phi = ScalarField2(grid, w0 + pert.values)
    if args.no_normalize:
        datum = tb.BoundaryDatum(phi, t.area_a)
    else:
        datum = normalize_boundary(phi, t.area_a)
    cfg = _solver_config(args)
    t0 = time.perf_counter()
    try:
        sol = tb.solve(datum, t, cfg, M=args.M)
    except NewtonDiverged as exc:
        if args.out_diagnostics and exc.diagnostics is not None:
            io.write_json(args.out_diagnostics, exc.diagnostics)
        raise
    elapsed = time.perf_counter() - t0
    from .geometry import solution_fields

    fields = solution_fields(sol)
    diag = sol.diagnostics.to_dict()
    diag["u_sup"] = float(np.max(np.abs(sol.u.values)))
    diag["W_min"] = float(np.min(fields.W))
    diag["tuple"] = t.to_dict()
    diag["config"] = cfg.to_dict()
    if args.out_dump:
        io.write_solution_dump(args.out_dump, sol, fields.W)
    io.write_json(args.out_diagnostics, diag)
    print(f"solved in {elapsed:.2f} s, {sol.diagnostics.newton_iterations} Newton steps", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    t, base, k = _tuple_from_args(args)
    patch = tuple(args.patch)
    if args.dump:
        if t is None:
            raise UsageError("verifying a dump needs a genus-1 tuple")
        xi, U, ub, grid = io.read_solution_dump(args.dump)
        sol = tb.solution_from_arrays(U, ub, grid, t)
        rep = verify_solution(sol, patch, args.step, metric=args.metric)
    else:
        prof = dc.nut_profile(k) if t is None else dc.build_profile(t, base, override=args.force)
        rep = verify_sampler(decoupled_sampler(prof), patch, args.step)
    tol = {
        "linear_law_err": args.tol_law,
        "quartic_law_err": args.tol_law,
        "einstein_residual": args.tol_einstein,
        "scalar_g_err": args.tol_scalar,
        "weyl_k_err": args.tol_weyl,
    }
    out = rep.to_dict()
    out["tolerances"] = tol
    out["failed"] = rep.failures(tol)
    io.write_json(args.out, out)
    return EXIT_NEGATIVE if out["failed"] else EXIT_OK


def cmd_sweep(args) -> int:
    """Scan k_range_for over a degree range, cross-checked by sampled admissibility."""
    base = BaseSurface.of_genus(args.genus)
    rng = np.random.default_rng(args.seed)
    results = []
    all_ok = True
    for deg in range(args.deg_min, args.deg_max + 1):
        ivs = k_range_for(deg, base.chi, base.genus)
        agree = total = 0
        for _ in range(args.samples):
            c = Fraction(float(np.sinh(rng.uniform(-6.0, 2.0)) * rng.choice([-1.0, 1.0]) / 10.0))
            if c == 0 or c == Fraction(-1, 96):
                continue
            k = ExtendedK.from_cube(c)
            if k.cube == Fraction(1, 48) and deg != -base.chi:
                continue
            try:
                t = FillTuple.canonical(deg, base.chi, k, area=1.0)
            except SpecialKDegreeMismatch:
                continue
            inside = any(iv.contains(k) for iv in ivs)
            ok = is_admissible(t, base).admissible
            total += 1
            agree += int(inside == ok)
        all_ok &= agree == total
        results.append({
            "deg": deg,
            "intervals": [iv.to_dict() for iv in ivs],
            "samples": total,
            "agree": agree,
        })
    io.write_json(args.out, {"genus": args.genus, "chi": base.chi, "seed": args.seed, "results": results})
    return EXIT_OK if all_ok else EXIT_NEGATIVE


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="todafill", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("admissible", help="decide admissibility of a tuple")
    _add_tuple_args(p)
    p.set_defaults(func=cmd_admissible)

    p = sub.add_parser("decoupled", help="closed-form profile as JSON and CSV")
    _add_tuple_args(p)
    p.add_argument("--force", action="store_true", help="build even if not admissible")
    p.add_argument("--out-json", default=None, help="profile JSON path (default stdout)")
    p.add_argument("--out-csv", default=None, help="CSV with xi,e_w,W,We_w,psi")
    p.add_argument("--samples", type=int, default=101)
    p.set_defaults(func=cmd_decoupled)

    p = sub.add_parser("solve", help="solve the Dirichlet problem on the torus")
    _add_tuple_args(p)
    p.add_argument("--boundary", default="const", help="'const' or 'fourier:[(kx,ky,amp),...]'")
    p.add_argument("--boundary-file", default=None, help="field CSV with i,j,value (plus sidecar)")
    p.add_argument("--no-normalize", action="store_true", help="use boundary data without area renormalization")
    p.add_argument("--M", type=int, default=32, help="radial cells")
    p.add_argument("--nx", type=int, default=16)
    p.add_argument("--ny", type=int, default=None)
    p.add_argument("--newton-tol", type=float, default=1e-10)
    p.add_argument("--max-newton", type=int, default=25)
    p.add_argument("--continuation-steps", type=int, default=4)
    p.add_argument("--linear-solver", default="auto", choices=["auto", "direct-sparse", "iterative"])
    p.add_argument("--jacobian-check", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dump", default=None, help="CSV xi,i,j,u,w,W")
    p.add_argument("--out-diagnostics", default=None, help="JSON (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="conserved laws and curvature checks")
    _add_tuple_args(p)
    p.add_argument("--dump", default=None, help="solution dump to check (else the closed-form metric)")
    p.add_argument("--metric", action="store_true", help="also run curvature checks on a dump")
    p.add_argument("--force", action="store_true")
    p.add_argument("--patch", type=float, nargs=2, default=[0.1, 0.4])
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--tol-law", type=float, default=1e-3)
    p.add_argument("--tol-einstein", type=float, default=1e-4)
    p.add_argument("--tol-scalar", type=float, default=1e-4)
    p.add_argument("--tol-weyl", type=float, default=1e-2)
    p.add_argument("--out", default=None, help="report JSON (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="batch k-range scans over a degree range")
    p.add_argument("--genus", type=int, default=1)
    p.add_argument("--deg-min", type=int, default=-4)
    p.add_argument("--deg-max", type=int, default=4)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--config", type=str)
    p.set_defaults(func=cmd_sweep)
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv) -> argparse.Namespace:
    """Parse once to find --config, load it as defaults, parse again so flags win."""
    args = ap.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    sub = ap._subparsers._group_actions[0].choices[args.command]
    allowed = {a.dest for a in sub._actions if a.dest not in ("help", "config")}
    cfg = io.load_config(args.config, allowed)
    sub.set_defaults(**cfg)
    args = ap.parse_args(argv)
    if isinstance(getattr(args, "k", None), (int, float)):
        args.k = str(args.k)
    return args


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = _apply_config(ap, argv)
        return args.func(args)
    except (TodaFillError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
