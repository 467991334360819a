import numpy as np
import pytest

import censolve as cs

UNIT = cs.Domain1D(0.0, 1.0)


def make_problem(grid, lam=1.0, b=1.0, m=2.0, f=0.0, phi=(0.0, 0.0), **kw):
    spec = cs.KernelSpec(kind=cs.CENSORED, sigma=0.5, domain=UNIT)
    return cs.ProblemSpec(kernel=spec, grid=grid, lam=lam, b=b, m=m, f=f,
                          phi=phi, **kw)


@pytest.fixture(scope="module")
def grid():
    return cs.Grid(domain=UNIT, N=64)


# --- spec validation --------------------------------------------------------

def test_problem_spec_validation(grid):
    with pytest.raises(ValueError):
        make_problem(grid, b=0.0)
    with pytest.raises(ValueError):
        make_problem(grid, b=-1.0)
    with pytest.raises(ValueError):
        make_problem(grid, m=0.4)  # m must exceed sigma
    with pytest.raises(ValueError):
        make_problem(grid, lam=-0.5)
    with pytest.raises(ValueError):
        make_problem(grid, mode="periodic")
    with pytest.raises(ValueError):
        # incompatible initial data in dirichlet mode
        make_problem(grid, phi=(0.0, 0.0), u0=np.ones(grid.N + 1))
    # compatible u0 passes
    u0 = np.sin(np.pi * grid.nodes)
    make_problem(grid, phi=(0.0, 0.0), u0=u0)


# --- trivial solutions ------------------------------------------------------

def test_zero_data_gives_zero(grid):
    sol = cs.solve_stationary(make_problem(grid), tol=1e-10)
    assert np.max(np.abs(sol.u)) <= 1e-10
    assert sol.boundary_loss_flags == (False, False)


def test_constant_one(grid):
    sol = cs.solve_stationary(make_problem(grid, f=1.0, phi=(1.0, 1.0)),
                              tol=1e-10)
    assert np.max(np.abs(sol.u - 1.0)) <= 1e-10
    assert sol.boundary_loss_flags == (False, False)


# --- comparison principle ---------------------------------------------------

def test_comparison_and_nonexpansiveness(grid):
    rng = np.random.default_rng(42)
    n = grid.N + 1
    for _ in range(5):
        f1 = rng.uniform(-1.0, 1.0, size=n)
        f2 = f1 + rng.uniform(0.0, 1.0, size=n)
        p1 = make_problem(grid, f=f1)
        p2 = make_problem(grid, f=f2)
        u1 = cs.solve_stationary(p1, tol=1e-9).u
        u2 = cs.solve_stationary(p2, tol=1e-9).u
        assert np.all(u1 <= u2 + 1e-8)
        assert np.max(np.abs(u1 - u2)) <= np.max(np.abs(f1 - f2)) + 1e-8


def test_sup_norm_bound(grid):
    rng = np.random.default_rng(3)
    f = rng.uniform(-2.0, 2.0, size=grid.N + 1)
    phi = (0.3, -0.2)
    lam = 1.5
    sol = cs.solve_stationary(make_problem(grid, lam=lam, f=f, phi=phi),
                              tol=1e-9)
    bound = np.max(np.abs(f)) / lam + max(abs(p) for p in phi) + 1e-9
    assert np.max(np.abs(sol.u)) <= bound


# --- residual certificate ---------------------------------------------------

def test_residual_certificate(grid):
    f = np.sin(2 * np.pi * grid.nodes)
    tol = 1e-9
    sol = cs.solve_stationary(make_problem(grid, f=f), tol=tol)
    op = cs.assemble_operator(cs.KernelSpec(kind=cs.CENSORED, sigma=0.5,
                                            domain=UNIT), grid)
    for i in range(1, grid.N):
        res = (1.0 * sol.u[i] - op.apply(sol.u, i)
               + cs.numerical_hamiltonian(grid, sol.u, i, 1.0, 2.0) - f[i])
        assert abs(res) <= tol


# --- boundary behaviour -----------------------------------------------------

def test_boundary_loss_on_coercive_instance(grid):
    # gradient cost caps the attainable boundary value on the right
    sol = cs.solve_stationary(make_problem(grid, m=3.0, phi=(0.0, 10.0)),
                              tol=1e-9)
    flags, report = cs.detect_boundary_loss(sol, (0.0, 10.0), tol=1e-8)
    assert flags == (False, True)
    assert report["right"]["u"] < 10.0
    assert sol.u[0] <= 0.0 + 1e-8 and sol.u[-1] <= 10.0 + 1e-8


def test_no_loss_when_boundary_attained(grid):
    sol = cs.solve_stationary(make_problem(grid, f=1.0, phi=(1.0, 1.0)),
                              tol=1e-10)
    flags, _ = cs.detect_boundary_loss(sol, (1.0, 1.0), tol=1e-8)
    assert flags == (False, False)


# --- solvability gates ------------------------------------------------------

def test_lambda_zero_dirichlet_requires_certificate(grid):
    p = make_problem(grid, lam=0.0, f=1.0)
    with pytest.raises(ValueError):
        cs.solve_stationary(p)
    with pytest.raises(ValueError):
        cs.solve_stationary(p, ergodic_constant=0.5)  # wrong sign


def test_lambda_zero_dirichlet_with_negative_constant(grid):
    # f = 1 forces ergodic constant -1 < 0, the convex solvable case
    p = make_problem(grid, lam=0.0, f=1.0)
    sol = cs.solve_stationary(p, tol=1e-8, ergodic_constant=-1.0)
    assert sol.residual_norm <= 1e-8
    assert np.all(sol.u >= -1e-8)


def test_state_constraint_needs_positive_lambda(grid):
    p = make_problem(grid, lam=0.0, mode=cs.STATE_CONSTRAINT)
    with pytest.raises(ValueError):
        cs.solve_stationary(p)


def test_state_constraint_solve_certifies_all_rows(grid):
    f = np.cos(np.pi * grid.nodes)
    p = make_problem(grid, lam=0.7, f=f, mode=cs.STATE_CONSTRAINT)
    tol = 1e-10
    sol = cs.solve_stationary(p, tol=tol)
    assert np.max(np.abs(sol.residuals)) <= 2 * tol


def test_nonconvergence_reports_residual(grid):
    # lam = 0 with negative forcing has no bounded discrete solution
    p = make_problem(grid, lam=0.0, f=-1.0)
    with pytest.raises(cs.ConvergenceError) as err:
        cs.solve_stationary(p, tol=1e-9, max_iter=300,
                            check_solvability=False)
    assert err.value.iterations == 300
    assert np.isfinite(err.value.residual_norm)


# --- parameter robustness -----------------------------------------------------

@pytest.mark.parametrize("sigma", [0.2, 0.8])
def test_solver_across_orders(sigma):
    dom = cs.Domain1D(-2.0, 3.0)
    spec = cs.KernelSpec(kind=cs.CENSORED, sigma=sigma, domain=dom)
    g = cs.Grid(domain=dom, N=80)
    f = np.sin(2 * np.pi * (g.nodes + 2.0) / 5.0)
    p = cs.ProblemSpec(kernel=spec, grid=g, lam=1.0, b=1.0, m=2.0, f=f,
                       phi=(0.1, -0.3))
    sol = cs.solve_stationary(p, tol=1e-8)
    assert sol.residual_norm <= 1e-8
    assert np.max(np.abs(sol.u)) <= np.max(np.abs(f)) + 0.3 + 1e-8


def test_sublinear_gradient_power():
    # sigma < m < 1: the scalar solves and the step bound must both cope
    dom = cs.Domain1D(-2.0, 3.0)
    spec = cs.KernelSpec(kind=cs.CENSORED, sigma=0.3, domain=dom)
    g = cs.Grid(domain=dom, N=80)
    f = np.cos(np.pi * g.nodes / 5.0)
    p = cs.ProblemSpec(kernel=spec, grid=g, lam=1.0, b=1.0, m=0.7, f=f,
                       phi=(0.0, 0.0), u0=np.zeros(81))
    sol = cs.solve_stationary(p, tol=1e-8)
    assert sol.residual_norm <= 1e-8
    traj = cs.solve_evolution(p, 1.0, store_every=25)
    assert traj.dt_history.min() > 1e-4


# --- determinism ------------------------------------------------------------

def test_solver_is_deterministic(grid):
    f = np.sin(2 * np.pi * grid.nodes)
    p = make_problem(grid, f=f)
    u1 = cs.solve_stationary(p, tol=1e-9).u
    u2 = cs.solve_stationary(p, tol=1e-9).u
    assert np.array_equal(u1, u2)
