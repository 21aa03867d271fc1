"""Zeta-regularized determinants on glued product manifolds.

Library layout:

    spectral_core -- eigenvalue sequences, zeta data, heat traces
    base1d        -- closed forms for the 1-D circle/interval problems
    glue          -- assembled geometry, determinants, boundary operator
    scattering    -- scattering families, model operators, small eigenvalues
    adiabatic     -- stretch sweeps, limit extraction, verification suites
    cli           -- configuration-driven experiment runner
"""

from .spectral_core import (
    ArithmeticFamily,
    EigenvalueSeq,
    FiberSpectrum,
    HeatCoefficientMismatch,
    TailNotConverged,
    ZetaData,
    fiber_scaled_sqrt_logdet,
    fiber_sqrt_zeta_at_minus_one,
    fiber_sqrt_zeta_data,
    fiber_zeta_data,
    heat_trace_circle,
    heat_trace_dirichlet,
    heat_trace_mode,
    zeta_from_sequence,
    zeta_via_heat,
)
from .base1d import (
    Circle,
    DirichletInterval,
    DNBlock,
    ModeProblem,
    dn_block,
    logdet_circle_mode,
    logdet_dirichlet_mode,
    oracle_logdet_truncated,
)
from .glue import (
    AssembledDeterminants,
    ConditionAViolation,
    GlueGeometry,
    assemble_R,
    bfk_ratio,
    condition_A_check,
    heat_route_crosscheck,
    logdet_closed,
    trace_perp_inverse_diff,
)
from .scattering import (
    EigenphaseTrack,
    ScatteringFamily,
    SValueReport,
    c12_family,
    det_L_identity,
    dn_zero_mode_asymptotics,
    model_identities,
    model_logdet,
    model_spectrum,
    scattering_matrix,
    svalue_match,
    svalue_report,
    svalues_exact,
)
from .adiabatic import (
    FitReport,
    SweepResult,
    predicted_bfk_constant,
    predicted_dn_limit,
    predicted_main_limit,
    relative_heat_trace,
    sweep,
    verify_bfk_corollary,
    verify_lemma_cancellation,
    verify_smalltime_largetime_split,
    verify_theorem_dn,
    verify_theorem_main,
)

__version__ = "0.1.0"
