"""Thermodynamic length and optimal slow driving for Gaussian open quantum systems."""

from .catalog import (
    ClassicalRelaxationParams,
    DampedOscillatorParams,
    DisplacementModelParams,
    analytic_lambda_damped,
    analytic_xi_damped,
    classical_relaxation_fields,
    classical_relaxation_model,
    damped_lambda_geodesic_rhs,
    damped_oscillator_model,
    displacement_flat_metrics,
    displacement_model,
    exact_lambda_damped,
    exact_xi_damped,
    get_model,
)
from .errors import *  # noqa: F401,F403
from .gaussian import (
    GaussianModel,
    ThermalGaussianState,
    cayley_residual,
    diffusion_matrix,
    drift_matrix,
    free_energy,
    linear_model_from_config,
    load_model_config,
    relaxation_integral,
    stationarity_residual,
    symplectic_eigenvalues,
    symplectic_form,
    thermal_covariance,
)
from .geometry import (
    GeodesicSolution,
    MetricField,
    PathGrid,
    christoffel,
    geodesic_solve,
    linear_path,
    path_action,
    path_length,
    quadrature_geodesic_diag,
    siegel_geodesic,
    siegel_length,
)
from .matfun import apply_matrix_function, bounded_exp_gram, lyapunov_solve, spectral_abscissa
from .metrics import (
    MetricTensor,
    classical_lambda,
    classical_xi,
    fdr_gap,
    lambda_tensor,
    metric_field,
    metric_values,
    xi_tensor,
)
from .work import (
    Protocol,
    WorkReport,
    evaluate_protocol,
    excess_work,
    fano,
    linear_protocol,
    quantum_correction,
    savings,
    work_variance,
)

__version__ = "0.1.0"
