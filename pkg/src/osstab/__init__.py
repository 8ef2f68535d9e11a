"""Half-line Orr-Sommerfeld solvers with estimate-verification campaigns."""

from .airy import AiryEval, FastMode, a0, a0_ratios, airy_ai, fast_mode
from .exceptions import (
    CompatibilityError,
    DegenerateDenominatorError,
    DivergentIntegralError,
    EnvelopeExceededError,
    InvalidParameterError,
    InvalidSizeError,
    NoConvergenceError,
    OsstabError,
    OverlapMismatchError,
    ResolutionInsufficientError,
    SingularSystemError,
    SpectralConditionUnverifiedError,
    TruncationWarning,
)
from .grid import DiffOperator, Grid, GridFunction, GridKind, helm_apply, make_grid, weighted_norm
from .helmholtz import (
    boundary_derivative,
    fast_decay_part,
    solve_dirichlet,
    solve_dirichlet_collocation,
)
from .modified_airy import AiryBC, AirySolve, solve_modified_airy, verify_airy_estimates
from .ns import (
    ModeField,
    ModeParams,
    NSSolver,
    SpectralState,
    picard_step,
    solve_nonlinear,
    solve_zero_mode,
    state_from_json,
    state_to_json,
    verify_resolvent_regimes,
    x_norm,
    zero_state,
)
from .os_solver import (
    Corrector,
    CorrectorBranch,
    GapReport,
    OSParams,
    OSRegime,
    OSSolution,
    boundary_corrector,
    solve_os_artificial,
    solve_os_full,
    solve_os_nonslip,
    solve_os_nonslip_direct,
    spectral_gap,
)
from .profiles import ProfileKind, ShearProfile, StructureReport, make_profile, verify_structure
from .rayleigh import (
    RayleighSolve,
    SlowMode,
    homogeneous_rayleigh,
    operator_L,
    sigma_op,
    slow_mode,
    solve_rayleigh,
)
from .reports import EstimateReport, fit_exponent, ratio_spread

__version__ = "0.1.0"
