"""Acceptance suite: one test per criterion, each reporting a pass/fail line.

Shared heavy computations (stationary solves, trajectories, discount sweeps)
live in session fixtures so each criterion stays well inside its time budget.
"""

import numpy as np
import pytest

import censolve as cs
from censolve import cli

UNIT = cs.Domain1D(0.0, 1.0)
CENSORED = cs.KernelSpec(kind=cs.CENSORED, sigma=0.5, domain=UNIT)
REGIONAL = cs.KernelSpec(kind=cs.REGIONAL, sigma=0.5, domain=UNIT)


def problem(grid, f, lam=1.0, b=1.0, m=2.0, phi=(0.0, 0.0), u0=None,
            kernel=CENSORED, mode=cs.DIRICHLET):
    return cs.ProblemSpec(kernel=kernel, grid=grid, lam=lam, b=b, m=m, f=f,
                          phi=phi, u0=u0, mode=mode)


def sin2pi(grid):
    return np.sin(2 * np.pi * grid.nodes)


@pytest.fixture(scope="module")
def grid100():
    return cs.Grid(domain=UNIT, N=100)


@pytest.fixture(scope="module")
def grid200():
    return cs.Grid(domain=UNIT, N=200)


@pytest.fixture(scope="module")
def steady_setup(grid100):
    """lam=1 coercive instance: stationary solution and its trajectory to T=20."""
    p = problem(grid100, sin2pi(grid100), u0=np.zeros(101))
    stat = cs.solve_stationary(p, tol=1e-9)
    traj = cs.solve_evolution(p, 20.0, store_every=100)
    return p, stat, traj


@pytest.fixture(scope="module")
def ergodic_minus_one(grid100):
    """lam=0, f = -1 instance (ergodic constant exactly 1) and its LTB run."""
    p = problem(grid100, -np.ones(101), lam=0.0, u0=np.zeros(101))
    report = cs.run_ltb(p, cs.ERGODIC_POSITIVE, T=50.0, store_every=100,
                        probe_max_iter=1000)
    return p, report


@pytest.fixture(scope="module")
def ergodic_sin_200(grid200):
    """Criterion 7 instance: f = sin(2 pi x), N = 200, pinned alpha schedule."""
    p = problem(grid200, sin2pi(grid200), lam=0.0)
    schedule = [0.4 * 2.0 ** (-k) for k in range(6)]
    result = cs.ergodic_constant_discount(p, schedule)
    result.c_slope = cs.ergodic_constant_slope(p, T=50.0, window=5.0)
    return p, result


def test_criterion_01_operator_consistency(acceptance_log):
    probes = [0.1, 0.2, 0.3, 0.4, 0.45]
    sizes = [100, 200, 400]
    errors = {p: [] for p in probes}
    for n in sizes:
        grid = cs.Grid(domain=UNIT, N=n)
        op = cs.assemble_operator(CENSORED, grid)
        u = np.sin(np.pi * grid.nodes)
        for p in probes:
            i = round(p * n)
            oracle = cs.oracle_apply(CENSORED, lambda x: np.sin(np.pi * x),
                                     grid.nodes[i], tol=1e-8)
            errors[p].append(abs(op.apply(u, i) - oracle))
    hs = np.log([1.0 / n for n in sizes])
    orders = [np.polyfit(hs, np.log(errors[p]), 1)[0] for p in probes]
    acceptance_log(1, min(orders) >= 0.4,
                   f"orders {[f'{o:.2f}' for o in orders]} (need >= 0.4)")


def test_criterion_02_monotone_comparison(acceptance_log):
    grid = cs.Grid(domain=UNIT, N=64)
    rng = np.random.default_rng(42)
    worst_gap, worst_exp = -np.inf, -np.inf
    for _ in range(20):
        f1 = rng.uniform(-1.0, 1.0, size=65)
        f2 = f1 + rng.uniform(0.0, 1.0, size=65)
        b = float(rng.uniform(0.5, 2.0))
        p1 = problem(grid, f1, b=b)
        p2 = problem(grid, f2, b=b)
        u1 = cs.solve_stationary(p1, tol=1e-9).u
        u2 = cs.solve_stationary(p2, tol=1e-9).u
        worst_gap = max(worst_gap, float(np.max(u1 - u2)))
        worst_exp = max(worst_exp, float(np.max(np.abs(u1 - u2))
                                         - np.max(np.abs(f1 - f2))))
    ok = worst_gap <= 1e-8 and worst_exp <= 1e-8
    acceptance_log(2, ok, f"max comparison gap {worst_gap:.2e}, "
                          f"nonexpansiveness excess {worst_exp:.2e}")


def test_criterion_03_trivial_solutions(acceptance_log, grid100):
    p = problem(grid100, np.ones(101), phi=(1.0, 1.0))
    sol = cs.solve_stationary(p, tol=1e-10)
    err_stat = float(np.max(np.abs(sol.u - 1.0)))
    pz = problem(grid100, np.zeros(101), lam=0.0, u0=np.zeros(101))
    traj = cs.solve_evolution(pz, 5.0, store_every=50)
    err_evo = float(np.max(np.abs(traj.fields)))
    ok = err_stat <= 1e-10 and err_evo <= 1e-12
    acceptance_log(3, ok, f"|u-1| = {err_stat:.2e} (<=1e-10), "
                          f"|evolution| = {err_evo:.2e} (<=1e-12)")


def test_criterion_04_parabolic_sup_bounds(acceptance_log, steady_setup,
                                           ergodic_minus_one):
    p, _, traj = steady_setup
    fnorm = float(np.max(np.abs(p.f)))
    sup = np.max(np.abs(traj.fields), axis=1)
    growth_ok = bool(np.all(sup <= fnorm * traj.times + 0.0 + 0.0 + 1e-6))
    uniform_ok = bool(np.all(sup <= fnorm / p.lam + 1e-6))
    pm, report = ergodic_minus_one
    tr2 = report.trajectory
    sup2 = np.max(np.abs(tr2.fields), axis=1)
    growth2_ok = bool(np.all(sup2 <= 1.0 * tr2.times + 1e-6))
    ok = growth_ok and uniform_ok and growth2_ok
    acceptance_log(4, ok, f"growth bounds hold at {traj.times.size} + "
                          f"{tr2.times.size} snapshots, uniform (lam=1) holds")


def test_criterion_05_kappa_monotonicity(acceptance_log, steady_setup,
                                         ergodic_minus_one):
    _, stat, traj = steady_setup
    steady_kappa = cs.kappa_curve(traj, stat.u)
    _, report = ergodic_minus_one
    ok = (steady_kappa.max_violation <= 1e-6
          and report.kappa_violation <= 1e-6)
    acceptance_log(5, ok, f"violations: steady {steady_kappa.max_violation:.2e},"
                          f" ergodic {report.kappa_violation:.2e} (<=1e-6)")


def test_criterion_06_forced_ergodic_constant(acceptance_log, grid200):
    details = []
    ok = True
    schedule = [0.4 * 2.0 ** (-k) for k in range(6)]
    for f0 in (1.0, -1.0):
        p = problem(grid200, np.full(201, f0), lam=0.0)
        res = cs.ergodic_constant_discount(p, schedule)
        c_slope = cs.ergodic_constant_slope(p, T=10.0, window=2.0)
        prof = float(np.max(np.abs(res.u_infinity)))
        ok &= (abs(res.c_discount + f0) <= 1e-3
               and abs(c_slope + f0) <= 1e-3 and prof <= 1e-3)
        details.append(f"f0={f0:+.0f}: c_d={res.c_discount:+.6f} "
                       f"c_s={c_slope:+.6f} |u_inf|={prof:.1e}")
    acceptance_log(6, ok, "; ".join(details))


def test_criterion_07_ergodic_cross_method(acceptance_log, ergodic_sin_200):
    _, res = ergodic_sin_200
    gap = abs(res.c_discount - res.c_slope)
    ok = gap <= 1e-2 and np.isfinite(res.c_discount)
    acceptance_log(7, ok, f"c_discount={res.c_discount:.6f} "
                          f"c_slope={res.c_slope:.6f} gap={gap:.2e} (<=1e-2)")


def test_criterion_08_distance_barrier(acceptance_log):
    details = []
    ok = True
    for name, spec in (("censored", CENSORED), ("regional", REGIONAL)):
        maxima = [cs.distance_barrier_ratio(spec, cs.Grid(domain=UNIT, N=n),
                                            0.25).max_ratio
                  for n in (100, 200, 400)]
        signs = {np.sign(v) for v in maxima}
        spread = max(abs(v) for v in maxima) / min(abs(v) for v in maxima)
        ok &= len(signs) == 1 and spread <= 2.0
        details.append(f"{name}: spread {spread:.2f}")
    acceptance_log(8, ok, "; ".join(details) + " (<= 2)")


def test_criterion_09_regularity_stability(acceptance_log):
    lips, gws = [], []
    for n in (100, 200, 400):
        grid = cs.Grid(domain=UNIT, N=n)
        p = problem(grid, sin2pi(grid), phi=(0.0, 3.0))
        sol = cs.solve_stationary(p, tol=1e-8)
        rep = cs.regularity_report(sol.u, grid, p)
        lips.append(rep.lipschitz_seminorm)
        gws.append(rep.gradient_weight_max)
    ok = True
    for seq in (lips, gws):
        for v1, v2 in zip(seq, seq[1:]):
            ok &= max(v1, v2) / min(v1, v2) <= 2.0
    acceptance_log(9, ok, f"lipschitz {[f'{v:.3f}' for v in lips]}, "
                          f"weighted gradient {[f'{v:.3f}' for v in gws]}")


def test_criterion_10_covering_property(acceptance_log, grid200):
    op = cs.assemble_operator(CENSORED, grid200)
    censored_ok = all(
        cs.covering_sets(CENSORED, grid200, start, op=op).n_star == 1
        for start in range(grid200.N + 1))
    rep = cs.covering_sets(REGIONAL, grid200, 20)   # start x = 0.1
    sizes = rep.sizes
    regional_ok = (rep.n_star is not None and rep.n_star <= 25
                   and all(s2 > s1 for s1, s2 in zip(sizes, sizes[1:])))
    ok = censored_ok and regional_ok
    acceptance_log(10, ok, f"censored n*=1 from all {grid200.N + 1} starts; "
                           f"regional n*={rep.n_star} sizes={sizes}")


def test_criterion_11_large_time_behavior(acceptance_log, steady_setup,
                                          ergodic_minus_one, grid100):
    p, stat, traj = steady_setup
    steady_rep = cs.run_ltb(p, cs.STEADY, T=20.0, store_every=100)
    steady_ok = (steady_rep.final_error <= 1e-4
                 and not steady_rep.verdicts["distance_curve_rising"])

    _, erg_rep = ergodic_minus_one
    probe = erg_rep.verdicts["stationary_probe"]
    erg_ok = (erg_rep.final_error <= 1e-2
              and np.isfinite(erg_rep.verdicts["renormalized_sup"])
              and probe["converged"] is False)

    x = grid100.nodes
    pz = problem(grid100, np.zeros(101), lam=0.0, u0=x * (1 - x))
    zero_rep = cs.run_ltb(pz, cs.C_ZERO, T=50.0, store_every=100, tol=1e-6)
    zero_ok = zero_rep.verdicts["boundary_admissible"]["ok"]

    ok = steady_ok and erg_ok and zero_ok
    acceptance_log(11, ok, f"steady final {steady_rep.final_error:.1e} (<=1e-4); "
                           f"ergodic final {erg_rep.final_error:.1e} (<=1e-2), "
                           f"probe diverged; c=0 limit admissible")


BATTERY = {
    "stationary": ("solve-stationary", {}),
    "parabolic": ("solve-parabolic",
                  {"problem.u0": "const 0.0", "command.T": "1.0"}),
    "ergodic": ("solve-ergodic",
                {"problem.lambda": "0.0", "problem.f": "const -1.0",
                 "command.alpha_schedule": "0.4,0.2,0.1,0.05",
                 "command.T": "5.0", "command.window": "1.0"}),
    "regularity": ("estimate-regularity", {}),
    "ltb": ("run-ltb", {"problem.u0": "const 0.0", "command.T": "5.0",
                        "command.ltb_mode": "steady"}),
    "kernel": ("validate-kernel", {}),
}

BASE_CFG = {
    "kernel.kind": "censored-stable",
    "kernel.sigma": "0.5",
    "kernel.c_norm": "1.0",
    "kernel.domain.a": "0.0",
    "kernel.domain.b": "1.0",
    "grid.N": "64",
    "problem.lambda": "1.0",
    "problem.m": "2.0",
    "problem.b": "const 1.0",
    "problem.f": "sin2pi 1.0",
    "problem.phi.left": "0.0",
    "problem.phi.right": "0.0",
    "problem.mode": "dirichlet",
    "command.seed": "42",
}


def test_criterion_12_determinism(acceptance_log, tmp_path):
    compared = 0
    identical = True
    for name, (sub, extra) in BATTERY.items():
        cfg_path = tmp_path / f"{name}.cfg"
        cfg_path.write_text("".join(f"{k} = {v}\n"
                                    for k, v in (BASE_CFG | extra).items()))
        outs = []
        for run_idx in (1, 2):
            out = tmp_path / f"{name}_{run_idx}"
            status = cli.run(cfg_path, out_dir=out, subcommand=sub)
            assert status == 0, f"{name} run failed with {status}"
            outs.append(out)
        names1 = sorted(f.name for f in outs[0].iterdir())
        names2 = sorted(f.name for f in outs[1].iterdir())
        identical &= names1 == names2
        for fname in names1:
            if fname == "manifest.json":
                continue
            compared += 1
            identical &= ((outs[0] / fname).read_bytes()
                          == (outs[1] / fname).read_bytes())
    acceptance_log(12, identical and compared >= 10,
                   f"{compared} CSV/JSON artifacts byte-identical over "
                   f"{len(BATTERY)} subcommands run twice")
