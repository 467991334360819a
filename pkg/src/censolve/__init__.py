"""censolve: a monotone finite-difference laboratory for censored nonlocal
Hamilton-Jacobi equations with coercive gradient terms on an interval."""

__version__ = "0.1.0"

from .discretize import (BarrierRatioReport, DiscreteOperator, Grid,
                         QuadratureError, apply_operator, assemble_operator,
                         distance_barrier_ratio, dump_operator,
                         numerical_hamiltonian, oracle_apply)
from .ergodic import (BarrierReport, CoveringReport, ErgodicResult,
                      barrier_residual, certify_barrier, covering_sets,
                      default_x_star, ergodic_constant_discount,
                      ergodic_constant_slope, solve_discounted)
from .kernels import (CENSORED, REGIONAL, TABLE, AssumptionReport, Domain1D,
                      KernelSpec, h_function, moment_integral,
                      support_interval, total_variation_moment,
                      validate_assumptions)
from .ltb import C_ZERO, ERGODIC_POSITIVE, STEADY, LTBReport, run_ltb
from .parabolic import (KappaReport, Trajectory, advance, cfl_bound,
                        kappa_curve, solve_evolution, sup_convolution_time,
                        time_lipschitz_ratio)
from .regularity import (RegularityReport, fitted_exponent,
                         gradient_weight_profile, holder_seminorm,
                         regularity_report)
from .stationary import (DIRICHLET, STATE_CONSTRAINT, ConvergenceError,
                         ProblemSpec, SolutionField, detect_boundary_loss,
                         solve_stationary, with_params)
