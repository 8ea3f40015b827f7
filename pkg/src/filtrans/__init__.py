"""Joint state and parameter estimation through filtered transformations.

The library integrates a scalar-output plant together with vector- and
matrix-filter immersion-and-invariance estimators, and reports excitation
diagnostics on the resulting traces.
"""

from .diagnostics import (
    ExcitationReport,
    GainValidation,
    OvershootMetric,
    det_l2_report,
    lambda_m_sq,
    log_growth_fit,
    lyapunov_monitor,
    overshoot,
    pe_margin,
    running_integral,
    validate_gains,
    windowed_gram_min_eig,
)
from .gains import EstimatorGains, OutputMap, linear_output_map, benchmark_gains
from .mat_estimator import ErrorStateMat, MatEstimatorState, error_mat, estimates_mat, lyapunov_mat
from .model import (
    ModelEvaluationError,
    PlantState,
    SystemModel,
    TrueExtendedState,
    make_example_system,
    plant_rhs,
    true_extended_state,
)
from .ode import FlatLayout, IntegrationError, StepConfig, Trajectory, integrate, rk4_step
from .signals import BenchmarkSignalParams, DSignal, M_ss, det_M_ss, mu_ss
from .simulation import EstimatorSpec, SimulationResult, simulate
from .vec_estimator import ErrorStateVec, VecEstimatorState, error_vec, estimates_vec, lyapunov_vec

__version__ = "0.1.0"
