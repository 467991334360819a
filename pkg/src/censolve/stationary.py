"""Stationary generalized Dirichlet and state-constraint solver.

Solves lam*u - I_h(u) + b*|Du|^m = f by nonlinear Gauss-Seidel on the
monotone scheme.  Each node update is a strictly monotone scalar root-find;
Dirichlet boundary nodes take the smaller of the boundary datum and their own
state-constraint value, which detects loss of the boundary condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._numerics import gs_iteration, residual_vector
from .discretize import DiscreteOperator, Grid, assemble_operator
from .kernels import KernelSpec

DIRICHLET = "dirichlet"
STATE_CONSTRAINT = "state-constraint"
MODES = (DIRICHLET, STATE_CONSTRAINT)

COMPATIBILITY_TOL = 1e-12


def _as_node_values(value, n_nodes: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n_nodes, float(arr))
    if arr.shape != (n_nodes,):
        raise ValueError(f"{name} must be scalar or have {n_nodes} entries")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Data of lam*u - I(u) + b|Du|^m = f with boundary/initial conditions.

    ``phi`` is a pair (left, right) for time-independent data, or a callable
    t -> (left, right).  ``u0`` is only needed for evolution runs; in
    Dirichlet mode it must match phi at the boundary nodes at t=0.
    """

    kernel: KernelSpec
    grid: Grid
    lam: float
    b: object
    m: float
    f: object
    phi: object = (0.0, 0.0)
    u0: object = None
    mode: str = DIRICHLET

    def __post_init__(self):
        if self.kernel.domain != self.grid.domain:
            raise ValueError("kernel and grid must share the domain")
        if self.lam < 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not self.m > self.kernel.sigma:
            raise ValueError(
                f"m must exceed sigma={self.kernel.sigma}, got m={self.m}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        n = self.grid.N + 1
        b = _as_node_values(self.b, n, "b")
        if not np.all(b > 0.0):
            raise ValueError("b must be strictly positive at every node")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "f", _as_node_values(self.f, n, "f"))
        if self.u0 is not None:
            u0 = _as_node_values(self.u0, n, "u0")
            object.__setattr__(self, "u0", u0)
            if self.mode == DIRICHLET:
                p0, pN = self.phi_at(0.0)
                if abs(u0[0] - p0) > COMPATIBILITY_TOL or \
                        abs(u0[-1] - pN) > COMPATIBILITY_TOL:
                    raise ValueError(
                        "u0 must match phi at the boundary nodes (compatibility)")

    def phi_at(self, t: float) -> tuple[float, float]:
        if callable(self.phi):
            left, right = self.phi(t)
        else:
            left, right = self.phi
        return float(left), float(right)

    def operator(self) -> DiscreteOperator:
        return assemble_operator(self.kernel, self.grid)


@dataclass
class SolutionField:
    """Converged grid function with its residual certificate."""

    u: np.ndarray
    residual_norm: float
    iterations: int
    boundary_loss_flags: tuple[bool, bool]
    residuals: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "boundary_loss_flags": list(self.boundary_loss_flags),
        }


class ConvergenceError(RuntimeError):
    """Solver failed to reach the tolerance; carries the final state."""

    def __init__(self, message: str, residual_norm: float, iterations: int,
                 u: np.ndarray | None = None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations
        self.u = u


def _interior_residual_norm(r: np.ndarray) -> float:
    return float(np.max(np.abs(r[1:-1])))


def solve_stationary(problem: ProblemSpec, tol: float = 1e-8,
                     max_iter: int = 50000, *, initial: np.ndarray | None = None,
                     op: DiscreteOperator | None = None,
                     ergodic_constant: float | None = None,
                     check_solvability: bool = True) -> SolutionField:
    """Gauss-Seidel iteration (ascending then descending order) to residual tol.

    Dirichlet mode with lam = 0 is accepted only with a negative ergodic
    constant supplied by the caller (the convex-case solvability certificate);
    ``check_solvability=False`` skips that gate for nonexistence probes.
    State-constraint mode requires lam > 0 and uses each node's own operator
    row up to the boundary; there the iteration is accelerated by an exact
    constant shift, which leaves the scheme's fixed point untouched because
    both I_h and the upwind term are invariant under adding constants.
    """
    if check_solvability:
        if problem.mode == DIRICHLET and problem.lam == 0.0:
            if ergodic_constant is None or not ergodic_constant < 0.0:
                raise ValueError(
                    "dirichlet mode with lambda=0 needs a certified negative "
                    "ergodic constant; none was supplied")
        if problem.mode == STATE_CONSTRAINT and not problem.lam > 0.0:
            raise ValueError("state-constraint mode requires lambda > 0")

    if op is None:
        op = problem.operator()
    grid = problem.grid
    n = grid.N
    u = np.zeros(n + 1) if initial is None else np.array(initial, dtype=float)
    w, rowsums = op.weights, op.row_sums
    lam, b, m, f, h = problem.lam, problem.b, problem.m, problem.f, grid.h
    dirichlet = problem.mode == DIRICHLET
    phi0, phiN = problem.phi_at(0.0) if dirichlet else (0.0, 0.0)

    sup = np.inf
    res_norm = np.inf
    for it in range(1, max_iter + 1):
        sup = gs_iteration(u, w, rowsums, lam, b, m, h, f, dirichlet, phi0, phiN)
        if np.isnan(sup):
            raise ConvergenceError("scalar update lost its bracket "
                                   "(equation has no root at some node)",
                                   np.inf, it, u)
        if not dirichlet:
            r = residual_vector(u, w, rowsums, lam, b, m, h, f)
            shift = -(r.max() + r.min()) / (2.0 * lam)
            u += shift
            res_norm = (r.max() - r.min()) / 2.0
            if res_norm <= tol:
                return _finish(problem, u, res_norm, it, w, rowsums, tol)
            if sup < 1e-13 * (1.0 + np.max(np.abs(u))):
                raise ConvergenceError(
                    f"stalled at residual {res_norm:.3e} > tol {tol:.3e} "
                    "(tolerance below the scalar-solve floor)",
                    res_norm, it, u)
        elif sup < tol:
            r = residual_vector(u, w, rowsums, lam, b, m, h, f)
            res_norm = _interior_residual_norm(r)
            bc_ok = all(
                abs(u[i] - phi_b) <= tol or abs(r[i]) <= tol
                for i, phi_b in ((0, phi0), (n, phiN)))
            if res_norm <= tol and bc_ok:
                return _finish(problem, u, res_norm, it, w, rowsums, tol)
            if sup < 1e-13 * (1.0 + np.max(np.abs(u))):
                raise ConvergenceError(
                    f"stalled at residual {res_norm:.3e} > tol {tol:.3e} "
                    "(tolerance below the scalar-solve floor)",
                    res_norm, it, u)
    if dirichlet and not np.isfinite(res_norm):
        r = residual_vector(u, w, rowsums, lam, b, m, h, f)
        res_norm = _interior_residual_norm(r)
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations "
        f"(last update {sup:.3e}, residual {res_norm:.3e})",
        res_norm, max_iter, u)


def _finish(problem, u, res_norm, iterations, w, rowsums, tol):
    r = residual_vector(u, w, rowsums, problem.lam, problem.b, problem.m,
                        problem.grid.h, problem.f)
    field_ = SolutionField(u=u, residual_norm=float(res_norm),
                           iterations=iterations,
                           boundary_loss_flags=(False, False), residuals=r)
    if problem.mode == DIRICHLET:
        flags, _ = detect_boundary_loss(field_, problem.phi_at(0.0), tol)
        field_.boundary_loss_flags = flags
    return field_


def detect_boundary_loss(solution: SolutionField, phi, tol: float = 1e-8):
    """Flag boundary nodes where u sits strictly below phi on its own equation.

    A node is flagged iff u_b < phi_b - tol while the state-constraint
    residual there is within tol.  The subsolution side u_b <= phi_b + tol
    must always hold for a converged field.
    """
    left, right = float(phi[0]), float(phi[1])
    u, r = solution.u, solution.residuals
    flags = []
    for i, phi_b in ((0, left), (-1, right)):
        if u[i] > phi_b + tol:
            raise RuntimeError(
                f"boundary value {u[i]} exceeds datum {phi_b} beyond tol")
        flags.append(bool(u[i] < phi_b - tol and abs(r[i]) <= tol))
    report = {
        "left": {"u": float(u[0]), "phi": left, "sc_residual": float(r[0]),
                 "lost": flags[0]},
        "right": {"u": float(u[-1]), "phi": right, "sc_residual": float(r[-1]),
                  "lost": flags[1]},
    }
    return (flags[0], flags[1]), report


def with_params(problem: ProblemSpec, **kwargs) -> ProblemSpec:
    """Copy of the problem with some fields replaced (validated again)."""
    return replace(problem, **kwargs)
