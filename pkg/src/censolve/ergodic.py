"""Ergodic constant and profile by vanishing discount and by long-time slope.

The discounted problems alpha*u - I_h(u) + b|Du|^m = f are solved with the
state-constraint sweep; c_alpha = -alpha*u_alpha(x*) is extrapolated linearly
in alpha, and the normalized profile u_alpha - u_alpha(x*) approximates the
ergodic profile.  An independent estimate comes from the drift of the
undiscounted evolution.  The covering iteration and the explicit distance
barrier provide the structural checks behind uniqueness of the profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._numerics import residual_vector
from .discretize import DiscreteOperator, Grid, assemble_operator
from .kernels import KernelSpec
from .parabolic import solve_evolution
from .stationary import (STATE_CONSTRAINT, ProblemSpec, SolutionField,
                         solve_stationary, with_params)


def default_x_star(grid: Grid) -> int:
    """Node nearest the domain midpoint."""
    mid = 0.5 * (grid.domain.a + grid.domain.b)
    return int(round((mid - grid.domain.a) / grid.h))


@dataclass
class ErgodicResult:
    """Two ergodic-constant estimates plus the normalized profile."""

    c_discount: float
    c_slope: float | None
    u_infinity: np.ndarray
    alpha_schedule: list
    x_star_index: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "c_discount": self.c_discount,
            "c_slope": self.c_slope,
            "alpha_schedule": list(self.alpha_schedule),
            "x_star_index": self.x_star_index,
            "diagnostics": self.diagnostics,
        }


def solve_discounted(problem: ProblemSpec, alpha: float, tol: float = 1e-9,
                     max_iter: int = 100000, *,
                     initial: np.ndarray | None = None,
                     op: DiscreteOperator | None = None) -> SolutionField:
    """State-constraint solve of the discounted equation with lam := alpha."""
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    disc = with_params(problem, lam=alpha, mode=STATE_CONSTRAINT, u0=None)
    return solve_stationary(disc, tol=tol, max_iter=max_iter, initial=initial,
                            op=op)


def ergodic_constant_discount(problem: ProblemSpec, alpha_schedule,
                              x_star: int | None = None, tol: float = 1e-9,
                              extrap_tol: float = 1e-2,
                              op: DiscreteOperator | None = None) -> ErgodicResult:
    """Vanishing-discount sweep: solve the schedule, extrapolate c_alpha to 0.

    The schedule must decrease strictly; each level warm-starts from the
    previous solution rescaled by the alpha ratio (the leading 1/alpha mode).
    c_discount is the intercept of a linear-in-alpha fit through the last
    three levels; the fit residual is reported, and a spread beyond
    ``extrap_tol`` raises the non-convergence flag in the diagnostics.
    """
    schedule = [float(a) for a in alpha_schedule]
    if len(schedule) < 3:
        raise ValueError("alpha schedule needs at least 3 levels")
    if any(a2 >= a1 for a1, a2 in zip(schedule, schedule[1:])):
        raise ValueError("alpha schedule must decrease strictly")
    if x_star is None:
        x_star = default_x_star(problem.grid)
    if not 0 <= x_star <= problem.grid.N:
        raise ValueError(f"x_star index {x_star} outside the grid")
    if op is None:
        op = problem.operator()

    c_alphas, norms, iters = [], [], []
    u = None
    for k, alpha in enumerate(schedule):
        guess = None if u is None else u * (schedule[k - 1] / alpha)
        sol = solve_discounted(problem, alpha, tol=tol, initial=guess, op=op)
        u = sol.u
        c_alphas.append(-alpha * u[x_star])
        norms.append(float(np.max(np.abs(alpha * u))))
        iters.append(sol.iterations)

    # discount bound: ||alpha u_alpha|| must stay bounded along the schedule
    ratios = [norms[k + 1] / max(norms[k], 1e-300) for k in range(len(norms) - 1)]
    bounded = all(r <= 2.0 for r in ratios)

    tail = np.array(schedule[-3:])
    c_tail = np.array(c_alphas[-3:])
    design = np.vstack([np.ones(3), tail]).T
    coef, *_ = np.linalg.lstsq(design, c_tail, rcond=None)
    fit_residual = float(np.max(np.abs(design @ coef - c_tail)))
    c_discount = float(coef[0])
    u_inf = u - u[x_star]

    diagnostics = {
        "extrapolation_table": [[a, c] for a, c in zip(schedule, c_alphas)],
        "fit_intercept": c_discount,
        "fit_slope": float(coef[1]),
        "fit_residual": fit_residual,
        "extrapolation_flag": bool(fit_residual > extrap_tol),
        "alpha_u_norms": norms,
        "alpha_u_bounded": bounded,
        "iterations": iters,
        "tol": tol,
    }
    return ErgodicResult(c_discount=c_discount, c_slope=None, u_infinity=u_inf,
                         alpha_schedule=schedule, x_star_index=x_star,
                         diagnostics=diagnostics)


def ergodic_constant_slope(problem: ProblemSpec, T: float, window: float,
                           requested_dt: float = 0.05,
                           op: DiscreteOperator | None = None) -> float:
    """Drift estimate from the undiscounted state-constraint evolution.

    Runs from u0 = 0 with lam = 0 and returns the mean descent rate of the
    spatial average over the final window.
    """
    if not 0.0 < window < T:
        raise ValueError("need 0 < window < T")
    n = problem.grid.N
    evo = with_params(problem, lam=0.0, mode=STATE_CONSTRAINT,
                      u0=np.zeros(n + 1))
    if op is None:
        op = problem.operator()
    first = solve_evolution(evo, T - window, store_every=10 ** 9,
                            requested_dt=requested_dt, op=op)
    evo2 = with_params(evo, u0=first.final())
    second = solve_evolution(evo2, window, store_every=10 ** 9,
                             requested_dt=requested_dt, op=op)
    return float(-(second.final().mean() - first.final().mean()) / window)


@dataclass
class CoveringReport:
    """Iterated jump-support sets from one start node."""

    start: int
    sets: list                 # list of np.ndarray of node indices, X_0, X_1, ...
    n_star: int | None         # first n with full coverage, None on failure
    failed: bool

    @property
    def sizes(self) -> list:
        return [int(s.size) for s in self.sets]

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "sizes": self.sizes,
            "n_star": self.n_star,
            "failed": self.failed,
        }


def covering_sets(spec: KernelSpec, grid: Grid, start_index: int,
                  max_n: int = 64,
                  op: DiscreteOperator | None = None) -> CoveringReport:
    """Iterate X_{n+1} = X_n + {j : w_ij > 0, i in X_n} until full coverage."""
    if not 0 <= start_index <= grid.N:
        raise ValueError(f"start index {start_index} outside the grid")
    if op is None:
        op = assemble_operator(spec, grid)
    positive = op.weights > 0.0
    n_nodes = grid.N + 1
    mask = np.zeros(n_nodes, dtype=bool)
    mask[start_index] = True
    sets = [np.nonzero(mask)[0]]
    n_star = 0 if mask.all() else None
    for n in range(1, max_n + 1):
        reach = positive[mask].any(axis=0)
        new = mask | reach
        if new.all():
            mask = new
            sets.append(np.nonzero(mask)[0])
            n_star = n
            break
        if (new == mask).all():
            break
        mask = new
        sets.append(np.nonzero(mask)[0])
    return CoveringReport(start=start_index, sets=sets, n_star=n_star,
                          failed=n_star is None)


@dataclass
class BarrierReport:
    """Discrete supersolution residual of the explicit boundary barrier."""

    beta: float
    alpha: float
    c1: float
    offset: float
    node_indices: np.ndarray
    residuals: np.ndarray
    min_residual: float
    certified: bool

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "alpha": self.alpha,
            "c1": self.c1,
            "offset": self.offset,
            "min_residual": self.min_residual,
            "certified": self.certified,
        }


def barrier_residual(problem: ProblemSpec, alpha: float, beta: float,
                     c1: float = 0.0, tol: float = 1e-10,
                     op: DiscreteOperator | None = None) -> BarrierReport:
    """Evaluate the barrier psi = 2(||f|| + C1)/alpha - d^beta on the scheme.

    Returns the residual alpha*psi - I_h(psi) + b*H(psi) - f over the interior
    nodes with d(x_i) <= (b-a)/4; a minimum above -tol certifies psi as a
    discrete supersolution near the boundary for this C1.
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    sigma, m = problem.kernel.sigma, problem.m
    if m > 1.0:
        hi = min(1.0, (m - sigma) / (m - 1.0))
    else:
        hi = sigma
    if not 0.0 < beta < hi:
        raise ValueError(f"beta must lie in (0, {hi}), got {beta}")
    if op is None:
        op = problem.operator()
    grid = problem.grid
    d = grid.distances()
    offset = 2.0 * (float(np.max(np.abs(problem.f))) + c1) / alpha
    psi = offset - d ** beta
    r = residual_vector(psi, op.weights, op.row_sums, alpha, problem.b, m,
                        grid.h, problem.f)
    mask = (d > 0.0) & (d <= grid.domain.length / 4.0)
    idx = np.nonzero(mask)[0]
    res = r[idx]
    min_res = float(res.min())
    return BarrierReport(beta=beta, alpha=alpha, c1=c1, offset=offset,
                         node_indices=idx, residuals=res,
                         min_residual=min_res, certified=bool(min_res >= -tol))


def certify_barrier(problem: ProblemSpec, alpha: float, beta: float,
                    c1_values=(0.0, 1.0, 2.0, 4.0, 8.0, 16.0),
                    tol: float = 1e-10,
                    op: DiscreteOperator | None = None) -> BarrierReport:
    """Sweep C1 upward and return the first certified barrier report."""
    if op is None:
        op = problem.operator()
    report = None
    for c1 in c1_values:
        report = barrier_residual(problem, alpha, beta, c1=c1, tol=tol, op=op)
        if report.certified:
            return report
    return report
