"""Large-time-behavior experiments: steady, ergodic, and critical regimes.

Depending on the sign of the ergodic constant c (at lam = 0) the evolution
either settles on the stationary solution, drifts linearly with a converging
renormalized profile u + c*t, or converges to a shifted ergodic profile.  The
runner picks the regime, produces the distance curve to the predicted limit,
and collects the cross-checks (kappa monotonicity, stationary solvability).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ergodic import ErgodicResult, ergodic_constant_discount
from .parabolic import Trajectory, kappa_curve, solve_evolution
from .stationary import ConvergenceError, ProblemSpec, solve_stationary

STEADY = "steady"
ERGODIC_POSITIVE = "ergodic-positive-c"
C_ZERO = "c-zero"
MODES = (STEADY, ERGODIC_POSITIVE, C_ZERO)

DEFAULT_ALPHAS = tuple(0.4 * 2.0 ** (-k) for k in range(6))


@dataclass
class LTBReport:
    """Distance-to-limit curve and verdicts for one large-time run."""

    mode: str
    times: np.ndarray
    distances: np.ndarray
    fitted_K: float | None
    final_error: float
    verdicts: dict = field(default_factory=dict)
    kappa_violation: float | None = None
    limit: np.ndarray = field(repr=False, default=None)
    trajectory: Trajectory = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "fitted_K": self.fitted_K,
            "final_error": self.final_error,
            "kappa_violation": self.kappa_violation,
            "verdicts": self.verdicts,
        }


def _distance_curve_flag(distances: np.ndarray, tol: float) -> bool:
    """True when the curve still rises beyond tol over its second half."""
    half = distances[distances.size // 2:]
    if half.size < 2:
        return False
    return bool(np.max(np.diff(half)) > tol)


def run_ltb(problem: ProblemSpec, mode: str, T: float, *,
            ergodic: ErgodicResult | None = None,
            alpha_schedule=DEFAULT_ALPHAS, c_margin: float = 0.1,
            tol: float = 1e-8, store_every: int = 50,
            requested_dt: float = 0.05, probe_max_iter: int = 2000) -> LTBReport:
    """Run one large-time experiment and measure convergence to its limit.

    steady:             lam > 0 (or lam = 0 with certified c < -c_margin);
                        distance to the stationary solution.
    ergodic-positive-c: lam = 0, c > c_margin; distance of u + c*t to
                        u_inf + K, plus a bounded-orbit check and a stationary
                        nonexistence probe.
    c-zero:             lam = 0, |c| <= c_margin; distance to u_inf + K with
                        the boundary admissibility check on the limit.
    """
    if mode not in MODES:
        raise ValueError(f"unknown ltb mode {mode!r}")

    c = None
    if problem.lam == 0.0 or mode != STEADY:
        if ergodic is None:
            ergodic = ergodic_constant_discount(problem, alpha_schedule)
        c = ergodic.c_discount

    if mode == STEADY:
        if problem.lam == 0.0 and not (c is not None and c < -c_margin):
            raise ValueError(
                f"steady mode with lam=0 needs ergodic constant < -{c_margin}, "
                f"got {c}")
    elif mode == ERGODIC_POSITIVE:
        if problem.lam != 0.0 or not c > c_margin:
            raise ValueError(
                f"ergodic-positive-c mode needs lam=0 and c > {c_margin}, "
                f"got lam={problem.lam}, c={c}")
    else:
        if problem.lam != 0.0 or not abs(c) <= c_margin:
            raise ValueError(
                f"c-zero mode needs lam=0 and |c| <= {c_margin}, got c={c}")

    traj = solve_evolution(problem, T, store_every=store_every,
                           requested_dt=requested_dt)
    times = traj.times
    verdicts = {"mode_constant": c}

    if mode == STEADY:
        stat = solve_stationary(problem, tol=min(tol, 1e-9),
                                ergodic_constant=c)
        target = stat.u
        distances = np.max(np.abs(traj.fields - target[None, :]), axis=1)
        fitted_k = None
        kap = kappa_curve(traj, target)
        verdicts["stationary_residual"] = stat.residual_norm
    elif mode == ERGODIC_POSITIVE:
        u_inf = ergodic.u_infinity
        shifted = traj.fields + c * times[:, None]
        k_per_time = (shifted - u_inf[None, :]).mean(axis=1)
        distances = np.max(np.abs(shifted - u_inf[None, :]
                                  - k_per_time[:, None]), axis=1)
        fitted_k = float(k_per_time[-1])
        target = u_inf + fitted_k
        shifted_traj = Trajectory(grid=traj.grid, times=times, fields=shifted)
        kap = kappa_curve(shifted_traj, u_inf)
        verdicts["renormalized_sup"] = float(np.max(np.abs(shifted)))
        # Case I predicts the undiscounted stationary problem is unsolvable
        try:
            solve_stationary(problem, tol=tol, max_iter=probe_max_iter,
                             check_solvability=False)
        except ConvergenceError as exc:
            verdicts["stationary_probe"] = {
                "converged": False,
                "residual_norm": float(exc.residual_norm),
                "iterations": exc.iterations,
            }
        else:
            verdicts["stationary_probe"] = {"converged": True}
    else:
        u_inf = ergodic.u_infinity
        fitted_k = float((traj.fields[-1] - u_inf).mean())
        target = u_inf + fitted_k
        distances = np.max(np.abs(traj.fields - target[None, :]), axis=1)
        kap = kappa_curve(traj, target)
        phi0, phiN = problem.phi_at(times[-1])
        verdicts["boundary_admissible"] = {
            "left_slack": float(phi0 - target[0]),
            "right_slack": float(phiN - target[-1]),
            "ok": bool(target[0] <= phi0 + tol and target[-1] <= phiN + tol),
        }

    final_error = float(distances[-1])
    verdicts["distance_curve_rising"] = _distance_curve_flag(distances, tol)
    return LTBReport(mode=mode, times=times, distances=distances,
                     fitted_K=fitted_k, final_error=final_error,
                     verdicts=verdicts, kappa_violation=kap.max_violation,
                     limit=target, trajectory=traj)
