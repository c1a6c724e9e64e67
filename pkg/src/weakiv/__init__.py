"""Weak-instrument robust inference in the Gaussian reduced-form limit
experiment with known covariance.

The package provides the AR, LM, CLR and CQLR test statistics with
Monte-Carlo conditional critical values, total-variation distance bounds
on the attainable power-size gap, fixed-alternative LM asymptotics,
impossibility-design diagnostics with a constrained-quadratic solver,
and a deterministic power-curve engine.
"""

from ._engine import ALL_TESTS, TEST_AR, TEST_CLC, TEST_CLR, TEST_CQLR1, TEST_CQLR2, TEST_LM
from .asymptotics import (
    AsymptoticInputs,
    lm_fa_drift,
    lm_fa_variance,
    lm_fa_variance_components,
    lm_id_limit,
    lm_la_drift,
)
from .conditional import McOptions, TestOutcome, conditional_critical_value, run_test
from .diagnostics import (
    DiagnosticReport,
    IdGeometry,
    build_id_geometry,
    confidence_bound,
    diagnose,
    eta_min,
    geometry_from_parts,
    id_feasible,
    make_id_design,
)
from .distance import (
    SeparationSpec,
    chi2_cdf,
    chi2_quantile,
    clr_power_lower_bound,
    delta_squared,
    hull_tv_upper_bound,
    min_delta_constrained,
    normal_cdf,
    tv_gaussian,
    tv_gaussian_chi2_form,
)
from .errors import (
    DegenerateDenominator,
    DegenerateDirection,
    DegenerateGamma,
    DimensionMismatch,
    Infeasible,
    InsufficientDraws,
    InvalidInput,
    InvalidWeight,
    NonPositiveDefinite,
    NoRootFound,
    NumericalError,
    SingularFoc,
    SingularMap,
    ValidationError,
    WeakIvError,
)
from .model import (
    DesignPoint,
    ModelConfig,
    RotatedBlocks,
    StatPair,
    build_blocks,
    compute_st,
    invert_st,
    make_design_point,
    sample_vec_r,
)
from .power import PowerRequest, PowerRow, PowerTable, power_curve, size_sweep
from .statistics import (
    StatBundle,
    ar_stat,
    clc_stat,
    compute_bundle,
    lm_stats,
    lr_stat,
    minimize_q,
    q_beta,
    q_direction,
    qlr_stat,
    rank_stats,
)

__version__ = "0.1.0"
