"""freqlab: a numerical laboratory for frequency functions of harmonic
functions that vanish on part of a rough graph boundary.

The package measures, on concrete fixtures, the quantities that organize the
study of critical sets near such boundaries: Almgren-type frequency
quotients and their derivative decomposition, doubling ratios, a smoothed
slope modulus and the critical scale it defines, the straightened
divergence-form extension across the boundary, direct critical-point
detection with Minkowski-content estimates, and the planar conformal
transfer of critical points to a half-plane.
"""

from .geometry import (
    DiniParameter, GraphDomain, CriticalScale, AdmissibilityReport,
    dini_integral, smooth_theta, normal_vector, nearest_boundary,
    critical_scale, admissibility,
)
from .quadrature import (
    QuadratureSpec, IntegralResult,
    ball_integral, sphere_cap_integral, boundary_patch_integral,
)
from .harmonic import (
    ScalarField, PolynomialField, MFSField, SimonField, FitReport,
    SimonFixture, plane_harmonic, exact_polynomial, solve_mfs,
    graph_adapted_data, simon_fixture, rescale, laplacian_residual,
    fd_gradient, fd_hessian,
)
from .frequency import (
    FrequencyReport, DerivativeTerms, BoundaryFrequency, DoublingReport,
    SphereComparison, SpatialVariation, frequency_report, derivative_terms,
    boundary_frequency, fd_frequency_derivative, doubling_ratios,
    sphere_comparison, pinch, err_beta, spatial_variation_check,
)
from .straighten import (
    Mollifier, StraighteningMap, CoefficientField, ExtendedField,
    map_G, jacobian_DG, coefficient_A, extend_field, weak_residual,
    conormal_jump, radial_bump, separation_pairs, modulus_certificate,
)
from .critical import (
    Region, CriticalPoint, CriticalSetEstimate, ContentRow,
    DoublingCertificate, PipelineReport, find_critical_points,
    minkowski_content, certificate_grid, doubling_certificate,
    theorem_pipeline,
)
from .conformal2d import (
    ConformalMap2D, PushedField, TransferReport, MapChecks,
    build_map, transfer_count, map_checks,
)
from .config import Config, parse_config, schema_text
from .experiments import ExperimentResult, run_experiment
from .verify import SuiteReport, CriterionResult, verify_all
from .errors import (
    FreqlabError, GeometryError, QuadratureError, FieldError,
    TrivialFieldError, DegenerateNormalizationError, BoundaryFitError,
    WorkingBallError, FrequencyError, MapQualityError, SelfCheckError,
    PipelineStageError, ConfigError,
)

__version__ = "0.1.0"
