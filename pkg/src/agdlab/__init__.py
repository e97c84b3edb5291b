"""agdlab: a laboratory for first-order optimization dynamics.

Objectives with exact oracles, discrete methods, their continuous-time
flows with manifold diagnostics, estimate-sequence certificates, rate and
cycle analysis, and a deterministic batch harness (`agdlab` on the command
line, `agdlab.harness` as a library).
"""

__version__ = "0.1.0"

from . import analysis, estimation, flows, geometry, objectives, optimizers
from .analysis import (CycleReport, RateReport, check_convex_bound,
                       check_sc_rate, compare_discrete_flow, detect_cycle,
                       deviation_profile, fit_rate, monotonicity_report,
                       spectral_gap)
from .estimation import (EstimationState, coupled_nag_run, evaluate_phi,
                         verify_envelope, verify_lower_bound)
from .exceptions import (AgdlabError, ConfigValidationError, DivergenceError,
                         InsufficientDataError, InternalConsistencyError,
                         InvalidSpecError, MethodInapplicableError,
                         TimeDomainError, TrajectoryMismatchError,
                         UndefinedConditionNumberError)
from .flows import (FlowSpec, FlowTrajectory, default_step, integrate,
                    integrate_euler)
from .geometry import (ManifoldParams, PhaseState, TangentSplit, connection,
                       control_law, metric_r, residual_m0, residual_mp,
                       split_tangent, storage)
from .objectives import (Objective, PiecewiseGradient1DSpec, QuadraticSpec,
                         canonical_log_sum_exp, canonical_quadratic, catalog,
                         check_gradient, check_piecewise_continuity,
                         condition_number, ill_scaled_quadratic,
                         locate_minimizer, make_counterexample_1d,
                         make_log_sum_exp, make_piecewise_gradient_1d,
                         make_quadratic)
from .optimizers import (IterState, MethodSpec, Trajectory,
                         polyak_parameters, run,
                         triple_momentum_parameters)
from .rng import Lcg64
