"""Configuration parsing, experiment dispatch, and artifact I/O.

Configs are flat text files of dotted keys, one ``key = value`` per line with
``#`` comments.  Every run writes its outputs plus a manifest (config echo,
versions, wall time) into the output directory; all scientific outputs are
byte-deterministic for a fixed config, only the manifest carries timing.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .discretize import Grid
from .ergodic import (covering_sets, default_x_star,
                      ergodic_constant_discount, ergodic_constant_slope)
from .kernels import (KINDS, TABLE, Domain1D, KernelSpec,
                      validate_assumptions)
from .ltb import MODES as LTB_MODES
from .ltb import run_ltb
from .parabolic import kappa_curve, solve_evolution
from .regularity import gradient_weight_profile, regularity_report
from .stationary import (DIRICHLET, MODES, ConvergenceError, ProblemSpec,
                         detect_boundary_loss, solve_stationary)

SUBCOMMANDS = ("validate-kernel", "solve-stationary", "solve-parabolic",
               "solve-ergodic", "estimate-regularity", "run-ltb")


class ConfigError(Exception):
    """Schema violation; carries the offending dotted key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# --- formatting ---------------------------------------------------------

def fmt(x) -> str:
    """17-significant-digit decimal, enough to round-trip a float64."""
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (str, int)) else fmt(v)
                             for v in row])


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- config file --------------------------------------------------------

def parse_config_file(path) -> dict:
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            cfg[key.strip()] = value.strip()
    return cfg


def _get(cfg, key, default=None, required=False):
    if key in cfg:
        return cfg[key]
    if required:
        raise ConfigError(key, "missing required key")
    return default


def _get_float(cfg, key, default=None, required=False):
    raw = _get(cfg, key, default=None, required=required)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(key, f"not a number: {raw!r}") from None


def _get_int(cfg, key, default=None, required=False):
    raw = _get(cfg, key, default=None, required=required)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(key, f"not an integer: {raw!r}") from None


def _get_enum(cfg, key, allowed, default=None, required=False):
    raw = _get(cfg, key, default=default, required=required)
    if raw is not None and raw not in allowed:
        raise ConfigError(key, f"must be one of {sorted(allowed)}, got {raw!r}")
    return raw


def build_kernel(cfg) -> KernelSpec:
    kind = _get_enum(cfg, "kernel.kind", KINDS, required=True)
    sigma = _get_float(cfg, "kernel.sigma", required=True)
    if not 0.0 < sigma < 1.0:
        raise ConfigError("kernel.sigma", f"must lie in (0,1), got {sigma}")
    c_norm = _get_float(cfg, "kernel.c_norm", default=1.0)
    if not c_norm > 0.0:
        raise ConfigError("kernel.c_norm", f"must be positive, got {c_norm}")
    a = _get_float(cfg, "kernel.domain.a", required=True)
    b = _get_float(cfg, "kernel.domain.b", required=True)
    if not a < b:
        raise ConfigError("kernel.domain.b", f"domain needs a < b, got ({a}, {b})")
    table = None
    if kind == TABLE:
        path = _get(cfg, "kernel.table.path", required=True)
        try:
            table = np.loadtxt(path, delimiter=",", ndmin=2)
        except OSError as exc:
            raise ConfigError("kernel.table.path", str(exc)) from None
    try:
        return KernelSpec(kind=kind, sigma=sigma, domain=Domain1D(a, b),
                          c_norm=c_norm, table=table)
    except ValueError as exc:
        raise ConfigError("kernel.table.path", str(exc)) from None


def build_grid(cfg, domain: Domain1D) -> Grid:
    n = _get_int(cfg, "grid.N", required=True)
    if n < 8:
        raise ConfigError("grid.N", f"must be >= 8, got {n}")
    return Grid(domain=domain, N=n)


def parse_field_spec(text: str, grid: Grid, key: str) -> np.ndarray:
    """Node values from a constant, a named built-in, or a CSV sample path.

    Built-ins: ``const v`` (or a bare number), ``sin2pi A`` and ``sinpi A``
    on the normalized coordinate (x-a)/(b-a), ``affine c0 c1`` for c0+c1*x,
    and ``csv path`` (one value per node).
    """
    x = grid.nodes
    tokens = text.split()
    if not tokens:
        raise ConfigError(key, "empty field spec")
    name = tokens[0]
    try:
        if len(tokens) == 1 and name.endswith(".csv"):
            name, tokens = "csv", ["csv", tokens[0]]
        elif len(tokens) == 1:
            return np.full(x.size, float(name))
        if name == "const":
            return np.full(x.size, float(tokens[1]))
        if name == "sin2pi":
            amp = float(tokens[1]) if len(tokens) > 1 else 1.0
            return amp * np.sin(2 * np.pi * (x - grid.domain.a) / grid.domain.length)
        if name == "sinpi":
            amp = float(tokens[1]) if len(tokens) > 1 else 1.0
            return amp * np.sin(np.pi * (x - grid.domain.a) / grid.domain.length)
        if name == "affine":
            return float(tokens[1]) + float(tokens[2]) * x
        if name == "parabola":
            amp = float(tokens[1]) if len(tokens) > 1 else 1.0
            s = (x - grid.domain.a) / grid.domain.length
            return amp * s * (1.0 - s)
        if name == "csv":
            vals = np.loadtxt(tokens[1], delimiter=",").reshape(-1)
            if vals.size != x.size:
                raise ConfigError(key, f"csv has {vals.size} values, grid needs {x.size}")
            return vals
    except (ValueError, IndexError, OSError) as exc:
        raise ConfigError(key, f"bad field spec {text!r} ({exc})") from None
    raise ConfigError(key, f"unknown field spec {text!r}")


def build_problem(cfg, kernel: KernelSpec, grid: Grid,
                  need_u0: bool = False) -> ProblemSpec:
    lam = _get_float(cfg, "problem.lambda", required=True)
    if lam < 0.0:
        raise ConfigError("problem.lambda", f"must be >= 0, got {lam}")
    m = _get_float(cfg, "problem.m", required=True)
    if not m > kernel.sigma:
        raise ConfigError("problem.m", f"must exceed sigma={kernel.sigma}, got {m}")
    b = parse_field_spec(_get(cfg, "problem.b", required=True), grid, "problem.b")
    if not np.all(b > 0.0):
        raise ConfigError("problem.b", "must be strictly positive")
    f = parse_field_spec(_get(cfg, "problem.f", required=True), grid, "problem.f")
    mode = _get_enum(cfg, "problem.mode", MODES, default=DIRICHLET)
    phi = (_get_float(cfg, "problem.phi.left", default=0.0),
           _get_float(cfg, "problem.phi.right", default=0.0))
    u0 = None
    raw_u0 = _get(cfg, "problem.u0")
    if raw_u0 is not None and raw_u0 != "none":
        u0 = parse_field_spec(raw_u0, grid, "problem.u0")
    if need_u0 and u0 is None:
        raise ConfigError("problem.u0", "missing required key")
    try:
        return ProblemSpec(kernel=kernel, grid=grid, lam=lam, b=b, m=m, f=f,
                           phi=phi, u0=u0, mode=mode)
    except ValueError as exc:
        raise ConfigError("problem.u0" if "compatibility" in str(exc)
                          else "problem.mode", str(exc)) from None


def parse_alpha_schedule(cfg, key="command.alpha_schedule"):
    raw = _get(cfg, key)
    if raw is None:
        return [0.4 * 2.0 ** (-k) for k in range(6)]
    try:
        vals = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(key, f"not a comma list of numbers: {raw!r}") from None
    if len(vals) < 3 or any(b >= a for a, b in zip(vals, vals[1:])) or \
            any(v <= 0 for v in vals):
        raise ConfigError(key, "need >= 3 strictly decreasing positive values")
    return vals


# --- subcommand handlers --------------------------------------------------

def _cmd_validate_kernel(cfg, kernel, grid, out: Path) -> dict:
    n_x = _get_int(cfg, "command.x_samples", default=9)
    x = np.linspace(grid.domain.a, grid.domain.b, n_x + 2)[1:-1]
    if kernel.kind == TABLE:
        x = grid.nodes[np.linspace(1, grid.N - 1, min(n_x, grid.N - 1)).astype(int)]
    deltas = [grid.domain.length * 2.0 ** (-k) for k in range(1, 7)]
    betas = [0.0, kernel.sigma / 2, kernel.sigma, 1.0, 2.0]
    report = validate_assumptions(kernel, x, deltas, betas)
    write_json(out / "kernel_report.json", report.to_dict())
    write_csv(out / "tv_table.csv", ["pair_distance", "beta", "delta", "tv_moment"],
              report.tv_table)
    return {"c1": report.c1, "c2": report.c2, "flags": report.flags}


def _cmd_solve_stationary(cfg, kernel, grid, out: Path) -> dict:
    problem = build_problem(cfg, kernel, grid)
    tol = _get_float(cfg, "command.tol", default=1e-8)
    max_iter = _get_int(cfg, "command.max_iter", default=50000)
    sol = solve_stationary(problem, tol=tol, max_iter=max_iter)
    flags, loss = detect_boundary_loss(sol, problem.phi_at(0.0), tol)
    x = grid.nodes
    rows = [(fmt(x[i]), fmt(sol.u[i]), fmt(sol.residuals[i]),
             int((i == 0 and flags[0]) or (i == grid.N and flags[1])))
            for i in range(grid.N + 1)]
    write_csv(out / "solution.csv", ["x", "u", "residual", "boundary_loss"], rows)
    summary = sol.to_dict() | {"boundary_loss": loss, "tol": tol}
    write_json(out / "summary.json", summary)
    return summary


def _cmd_solve_parabolic(cfg, kernel, grid, out: Path) -> dict:
    problem = build_problem(cfg, kernel, grid, need_u0=True)
    horizon = _get_float(cfg, "command.T", required=True)
    store_every = _get_int(cfg, "command.store_every", default=50)
    dt = _get_float(cfg, "command.dt", default=0.05)
    traj = solve_evolution(problem, horizon, store_every=store_every,
                           requested_dt=dt)
    x = grid.nodes
    rows = []
    for k, t in enumerate(traj.times):
        for i in range(grid.N + 1):
            rows.append((fmt(t), fmt(x[i]), fmt(traj.fields[k, i])))
    write_csv(out / "trajectory.csv", ["t", "x", "u"], rows)
    # sup-norm growth certificates of the monotone step
    hnorm = 0.0  # the Hamiltonian vanishes on flat fields: H(x, 0, 0) = 0
    fnorm = float(np.max(np.abs(problem.f)))
    phi0, phiN = problem.phi_at(0.0)
    phinorm = max(abs(phi0), abs(phiN))
    u0norm = float(np.max(np.abs(problem.u0)))
    sup_per_time = np.max(np.abs(traj.fields), axis=1)
    growth_ok = bool(np.all(
        sup_per_time <= (hnorm + fnorm) * traj.times + phinorm + u0norm + 1e-6))
    kappa = kappa_curve(traj, traj.final())
    summary = {
        "dt": traj.dt_stats(),
        "growth_bound_ok": growth_ok,
        "final_sup": float(sup_per_time[-1]),
        "snapshots": int(traj.times.size),
        "kappa_to_final": kappa.to_dict(),
    }
    if problem.lam > 0.0:
        uniform = (hnorm + fnorm) / problem.lam + phinorm + u0norm + 1e-6
        summary["uniform_bound_ok"] = bool(np.all(sup_per_time <= uniform))
    write_json(out / "summary.json", summary)
    return summary


def _cmd_solve_ergodic(cfg, kernel, grid, out: Path) -> dict:
    problem = build_problem(cfg, kernel, grid)
    schedule = parse_alpha_schedule(cfg)
    horizon = _get_float(cfg, "command.T", default=50.0)
    window = _get_float(cfg, "command.window", default=5.0)
    tol = _get_float(cfg, "command.tol", default=1e-10)
    x_star = _get_int(cfg, "command.x_star", default=None)
    result = ergodic_constant_discount(problem, schedule, x_star=x_star, tol=tol)
    result.c_slope = ergodic_constant_slope(problem, horizon, window)
    start = _get_int(cfg, "command.covering_start", default=default_x_star(grid))
    cover = covering_sets(kernel, grid, start)
    payload = result.to_dict() | {"covering": cover.to_dict()}
    write_json(out / "ergodic.json", payload)
    write_csv(out / "u_infinity.csv", ["x", "u_infinity"],
              zip(grid.nodes, result.u_infinity))
    return payload


def _cmd_estimate_regularity(cfg, kernel, grid, out: Path) -> dict:
    problem = build_problem(cfg, kernel, grid)
    tol = _get_float(cfg, "command.tol", default=1e-8)
    max_iter = _get_int(cfg, "command.max_iter", default=50000)
    sol = solve_stationary(problem, tol=tol, max_iter=max_iter)
    report = regularity_report(sol.u, grid, problem)
    profile, _ = gradient_weight_profile(sol.u, grid, kernel.sigma, problem.m)
    write_csv(out / "gradient_profile.csv", ["x", "weighted_gradient"],
              zip(grid.nodes[1:-1], profile))
    payload = report.to_dict()
    write_json(out / "regularity.json", payload)
    return payload


_PLOT_SCRIPT = """\
# Plot the distance-to-limit curve produced by `censolve run-ltb`.
import csv
import matplotlib.pyplot as plt

ts, es = [], []
with open("distance.csv") as fh:
    for row in csv.DictReader(fh):
        ts.append(float(row["t"]))
        es.append(float(row["distance"]))
plt.semilogy(ts, es, marker=".")
plt.xlabel("t")
plt.ylabel("sup distance to limit")
plt.tight_layout()
plt.savefig("distance.png", dpi=150)
"""


def _cmd_run_ltb(cfg, kernel, grid, out: Path) -> dict:
    problem = build_problem(cfg, kernel, grid, need_u0=True)
    mode = _get_enum(cfg, "command.ltb_mode", LTB_MODES, required=True)
    horizon = _get_float(cfg, "command.T", required=True)
    margin = _get_float(cfg, "command.c_margin", default=0.1)
    store_every = _get_int(cfg, "command.store_every", default=50)
    schedule = parse_alpha_schedule(cfg)
    try:
        report = run_ltb(problem, mode, horizon, alpha_schedule=schedule,
                         c_margin=margin, store_every=store_every)
    except ValueError as exc:
        raise ConfigError("command.ltb_mode", str(exc)) from None
    write_csv(out / "distance.csv", ["t", "distance"],
              zip(report.times, report.distances))
    write_json(out / "ltb.json", report.to_dict())
    if _get(cfg, "command.emit_plot", default="false") == "true":
        (out / "plot_distance.py").write_text(_PLOT_SCRIPT)
    return report.to_dict()


_HANDLERS = {
    "validate-kernel": _cmd_validate_kernel,
    "solve-stationary": _cmd_solve_stationary,
    "solve-parabolic": _cmd_solve_parabolic,
    "solve-ergodic": _cmd_solve_ergodic,
    "estimate-regularity": _cmd_estimate_regularity,
    "run-ltb": _cmd_run_ltb,
}


def run(config_path, out_dir=None, subcommand: str | None = None) -> int:
    """Execute one experiment; returns the process exit status (0, 2 or 3)."""
    started = time.perf_counter()
    try:
        cfg = parse_config_file(config_path)
        configured = _get_enum(cfg, "command.subcommand", SUBCOMMANDS)
        if subcommand is None:
            subcommand = configured
            if subcommand is None:
                raise ConfigError("command.subcommand", "missing required key")
        elif configured is not None and configured != subcommand:
            raise ConfigError(
                "command.subcommand",
                f"config says {configured!r} but {subcommand!r} was requested")
        kernel = build_kernel(cfg)
        grid = build_grid(cfg, kernel.domain)
        out = Path(out_dir if out_dir is not None
                   else _get(cfg, "command.out", default="out"))
        out.mkdir(parents=True, exist_ok=True)
        seed = _get_int(cfg, "command.seed", default=42)
        _HANDLERS[subcommand](cfg, kernel, grid, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    manifest = {
        "subcommand": subcommand,
        "config": dict(sorted(cfg.items())),
        "seed": seed,
        "versions": {
            "censolve": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    write_json(out / "manifest.json", manifest)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="censolve",
        description="censored nonlocal Hamilton-Jacobi laboratory")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
    args = parser.parse_args(argv)
    return run(args.config, out_dir=args.out, subcommand=args.subcommand)


if __name__ == "__main__":
    sys.exit(main())
