"""Time-dependent quantum geometric tensor for Gaussian oscillator families.

The tensor is defined on the joint manifold of time and Hamiltonian
parameters.  Its real part is a metric whose scalar curvature can be computed
numerically, and its imaginary part is a curvature two-form.
"""

__version__ = "0.1.0"

from .analysis import (
    FitResult,
    NormalizedCurvature,
    Trajectory,
    fit_damped_trajectory,
    normalized_curvature,
    track_extrema,
)
from .entanglement import (
    CovarianceMatrix,
    PurityResult,
    bifurcation_scan,
    block_purity,
    covariance_matrix,
    purity,
)
from .errors import (
    BifurcationBoundary,
    ConfigError,
    DegenerateMetric,
    DegenerateNormalization,
    DomainError,
    ErmakovResidualError,
    EvaluationRangeError,
    InvalidPath,
    NoSolution,
    QGeoError,
    UnsupportedModel,
)
from .geometry import (
    christoffel,
    curvature_of_field,
    independent_coords,
    palumbo_factor,
    palumbo_residual,
    scalar_curvature,
    submetric,
)
from .models import (
    ChainModel,
    HOModel,
    HOTDFModel,
    IHOModel,
    OscillatorModel,
    b_solutions,
    build_model,
    density_analysis,
    extremal_b,
    fidelity_overlap,
    fock_coefficients,
    hotdf_closed_forms,
    lewis_tensors,
    normal_mode_decomposition,
    overlap_distance,
)
from .params import CoordinateSet, DiffConfig, ParameterPoint, make_grid
from .qgt import QGTResult, berry_connection, energy_dispersion, gauge_check, tqgt
