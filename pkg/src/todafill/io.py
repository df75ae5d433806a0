"""File formats: field CSV + sidecar, profile JSON/CSV, solution dumps, metric samples, configs."""
from __future__ import annotations

import ast
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeMismatch
from .surface import ScalarField2, TorusGrid, fourier_field

FLOAT_FMT = "%.17g"


def _sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def write_field_csv(path, f: ScalarField2) -> None:
    g = f.grid
    I, J = np.meshgrid(np.arange(g.n_x), np.arange(g.n_y), indexing="ij")
    table = np.column_stack([I.ravel(), J.ravel(), f.values.ravel()])
    np.savetxt(path, table, delimiter=",", header="i,j,value", comments="", fmt=["%d", "%d", FLOAT_FMT])
    _sidecar(path).write_text(json.dumps({"n_x": g.n_x, "n_y": g.n_y}) + "\n")


def read_field_csv(path) -> ScalarField2:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    side = _sidecar(path)
    if side.exists():
        meta = json.loads(side.read_text())
        grid = TorusGrid(int(meta["n_x"]), int(meta["n_y"]))
    else:
        grid = TorusGrid(int(data[:, 0].max()) + 1, int(data[:, 1].max()) + 1)
    if data.shape[0] != grid.n_x * grid.n_y:
        raise ShapeMismatch(f"{path}: expected {grid.n_x * grid.n_y} rows, found {data.shape[0]}")
    v = np.empty(grid.shape)
    v[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2]
    return ScalarField2(grid, v)


def parse_preset(text: str, grid: TorusGrid) -> ScalarField2:
    """'const' or 'fourier:[(kx, ky, amp), (kx, ky, amp, "sin"), ...]'.

    Each triple adds amp*cos(kx x + ky y); a fourth entry "sin" switches to sine.
    """
    s = text.strip()
    if s == "const":
        return ScalarField2(grid, np.zeros(grid.shape))
    if not s.startswith("fourier:"):
        raise ConfigError(f"unknown boundary preset {text!r}")
    try:
        terms = ast.literal_eval(s[len("fourier:"):].strip())
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"cannot parse fourier preset {text!r}") from exc
    if isinstance(terms, tuple) and terms and not isinstance(terms[0], (tuple, list)):
        terms = [terms]
    modes = []
    for term in terms:
        if len(term) == 3:
            kx, ky, amp = term
            kind = "cos"
        elif len(term) == 4:
            kx, ky, amp, kind = term
        else:
            raise ConfigError(f"bad fourier term {term!r}")
        if kind not in ("cos", "sin") or int(kx) != kx or int(ky) != ky:
            raise ConfigError(f"bad fourier term {term!r}")
        modes.append((int(kx), int(ky), float(amp), kind))
    return fourier_field(grid, modes)


def write_table_csv(path, columns: dict) -> None:
    names = list(columns)
    table = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    np.savetxt(path, table, delimiter=",", header=",".join(names), comments="", fmt=FLOAT_FMT)


def write_json(path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True)
    if path is None or str(path) == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_solution_dump(path, sol, W=None) -> None:
    """Rows xi,i,j,u,w,W: the xi = 0 boundary slice first, then xi increasing."""
    from .geometry import solution_fields

    if W is None:
        W = solution_fields(sol).W
    g = sol.grid
    lift = sol.lift
    I, J = np.meshgrid(np.arange(g.n_x), np.arange(g.n_y), indexing="ij")
    blocks = []
    ub = sol.u.boundary
    blocks.append((0.0, ub, ub + lift.wbar0, np.ones(g.shape)))
    wbar = lift.wbar()
    for m in range(lift.M - 1, -1, -1):
        u = sol.u.values[m]
        blocks.append((lift.xi[m], u, u + wbar[m], W[m]))
    rows = [
        np.column_stack([np.full(I.size, xi), I.ravel(), J.ravel(), u.ravel(), w.ravel(), Wm.ravel()])
        for xi, u, w, Wm in blocks
    ]
    np.savetxt(
        path, np.vstack(rows), delimiter=",", header="xi,i,j,u,w,W", comments="",
        fmt=[FLOAT_FMT, "%d", "%d", FLOAT_FMT, FLOAT_FMT, FLOAT_FMT],
    )


def read_solution_dump(path):
    """Returns (xi_interior decreasing as on the lifted grid, U (M, n_x, n_y), boundary slice)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n_x = int(data[:, 1].max()) + 1
    n_y = int(data[:, 2].max()) + 1
    S = n_x * n_y
    if data.shape[0] % S:
        raise ShapeMismatch("dump row count is not a multiple of the slice size")
    nsl = data.shape[0] // S
    sl = data.reshape(nsl, S, 6)
    xi = sl[:, 0, 0]
    vals = np.empty((nsl, n_x, n_y))
    for s in range(nsl):
        vals[s][sl[s, :, 1].astype(int), sl[s, :, 2].astype(int)] = sl[s, :, 3]
    b = int(np.argmin(xi))
    if xi[b] != 0.0:
        raise ShapeMismatch("dump has no xi = 0 boundary slice")
    rest = [s for s in range(nsl) if s != b]
    order = sorted(rest, key=lambda s: -xi[s])
    return xi[order], vals[order], vals[b], TorusGrid(n_x, n_y)


def write_metric_samples(path, sampler, pts) -> None:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    G = sampler.g(pts)
    iu = np.triu_indices(4)
    names = [f"g{i}{j}" for i, j in zip(*iu)]
    with open(path, "w") as fh:
        fh.write("chart,c0,c1,c2,c3," + ",".join(names) + "\n")
        for p, g in zip(pts, G):
            vals = list(p) + list(g[iu])
            fh.write(sampler.chart + "," + ",".join(FLOAT_FMT % v for v in vals) + "\n")


def load_config(path, allowed) -> dict:
    """JSON object whose keys must all be in `allowed` (dashes or underscores accepted)."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    out = {}
    for key, val in raw.items():
        k = key.replace("-", "_")
        if k not in allowed:
            raise ConfigError(f"unknown config key {key!r}")
        out[k] = val
    return out


def finite_or_str(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x
