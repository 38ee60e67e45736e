"""Numerical laboratory for fractional GJMS operators on S^n.

Zonal spectral calculus on the sphere, sharp Sobolev-type inequalities and
their deficits, the scattering (Poisson) problem on the hyperbolic ball, and
the boundary-operator calculus of two-branch rho-jets.
"""
from .errors import (
    AmbiguousPole,
    BracketingError,
    BudgetExhausted,
    ConvergenceError,
    DomainError,
    GJMSError,
    GridMismatch,
    IntegerGamma,
    JetMisalignment,
    KernelSingularity,
    NonPositiveValue,
    NotPolyharmonic,
    PoleError,
    UnimplementedCase,
    UnsupportedGamma,
)
from .specfun import (
    QuadratureRule,
    SignedLogValue,
    gamma_ratio,
    gamma_signed,
    gauss_gegenbauer_rule,
    gegenbauer_eval,
    gegenbauer_norm,
    hyp2f1,
    pochhammer,
    reciprocal_gamma,
)
from .zonal import (
    SphereGeometry,
    ZonalFunction,
    analyze,
    from_callable,
    integrate,
    lp_norm,
    make_grid,
    random_positive,
    synthesize,
)
from .conformal import ConformalMap, center_of_mass, conformal_factor, normalize_center_of_mass, pushforward
from .gjms import (
    OperatorSpectrum,
    apply_gjms,
    apply_spectrum,
    conformal_energy,
    funk_hecke_eigenvalue,
    gjms_multiplier,
    gjms_spectrum,
    inverse_kernel_apply,
)
from .inequalities import (
    DeficitReport,
    StabilityReport,
    beckner_deficit,
    counterexample_search,
    duality_gap,
    extremal_profile,
    nonneg_energy_check,
    reverse_hls_ratio,
    sobolev_deficit,
    stability_bound,
)
from .jets import RhoJet, jet_laplacian
from .scattering import BallPoint, PoissonSolution, c_gamma, extension_jet, scattering_apply
from .boundary import (
    BoundaryCoefficients,
    BoundaryData,
    boundary_coeffs,
    boundary_op_large,
    boundary_op_small,
    conformal_covariance_check,
    dirichlet_extend,
    dirichlet_form,
    green_identity_check,
    hardy_check,
    trace_deficit,
)

__version__ = "0.1.0"
