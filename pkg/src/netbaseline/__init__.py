"""Estimation and goodness-of-fit testing for proportional-hazards event
intensities on dynamic networks."""

from .errors import (
    DegenerateLikelihoodError,
    EmptyRiskRegionError,
    IntensityBoundError,
    NetBaselineError,
    NumericalError,
    PanelFormatError,
)
from .estimators import (
    FitOptions,
    ParametricFit,
    PartialFit,
    fit_mle,
    fit_partial,
    log_likelihood,
    nelson_aalen,
    parametric_baseline_curve,
    partial_log_likelihood,
    smoothed_parametric_baseline,
)
from .gof import (
    PlugInQuantities,
    TestOptions,
    TestReport,
    compute_A_n,
    compute_B,
    compute_T_n,
    compute_a_n,
    compute_xbar,
    default_bandwidth,
    edge_fraction_curve,
    local_alternative_drift,
    plug_in_quantities,
    run_test,
)
from .kernels import (
    BaselineCurve,
    KernelSpec,
    QuadratureGrid,
    WeightFunction,
    default_weight,
    fn_weight,
    k2_constant,
    kernel_at,
    smooth_curve,
    test_interval_weight,
)
from .model import (
    BaselineSpec,
    LinkSpec,
    ModelSpec,
    StudyDesign,
    SystemCovariates,
    clock_baseline,
    constant_baseline,
    evaluate_baseline,
    evaluate_link,
    weather_clock_baseline,
)
from .panel import (
    PairKey,
    PairPanel,
    PairRecord,
    aggregate_risk,
    build_panel,
    empirical_edge_fraction,
    pooled_event_times,
    validate_panel,
)
from .panel_io import read_panel, write_panel
from .paths import PiecewisePath
from .simulate import (
    BumpSpec,
    SimConfig,
    SimTruth,
    boundary_amplitude,
    simulate_study,
)
from .studies import StudyConfig, StudyResult, calibrate_boundary_bump, run_study

__version__ = "0.1.0"

__all__ = [
    "BaselineCurve",
    "BaselineSpec",
    "BumpSpec",
    "DegenerateLikelihoodError",
    "EmptyRiskRegionError",
    "FitOptions",
    "IntensityBoundError",
    "KernelSpec",
    "LinkSpec",
    "ModelSpec",
    "NetBaselineError",
    "NumericalError",
    "PairKey",
    "PairPanel",
    "PairRecord",
    "PanelFormatError",
    "ParametricFit",
    "PartialFit",
    "PiecewisePath",
    "PlugInQuantities",
    "QuadratureGrid",
    "SimConfig",
    "SimTruth",
    "StudyConfig",
    "StudyDesign",
    "StudyResult",
    "SystemCovariates",
    "TestOptions",
    "TestReport",
    "WeightFunction",
    "aggregate_risk",
    "boundary_amplitude",
    "build_panel",
    "calibrate_boundary_bump",
    "clock_baseline",
    "compute_A_n",
    "compute_B",
    "compute_T_n",
    "compute_a_n",
    "compute_xbar",
    "constant_baseline",
    "default_bandwidth",
    "default_weight",
    "edge_fraction_curve",
    "empirical_edge_fraction",
    "evaluate_baseline",
    "evaluate_link",
    "fit_mle",
    "fit_partial",
    "fn_weight",
    "k2_constant",
    "kernel_at",
    "local_alternative_drift",
    "log_likelihood",
    "nelson_aalen",
    "parametric_baseline_curve",
    "partial_log_likelihood",
    "plug_in_quantities",
    "pooled_event_times",
    "read_panel",
    "run_study",
    "run_test",
    "simulate_study",
    "smooth_curve",
    "smoothed_parametric_baseline",
    "test_interval_weight",
    "validate_panel",
    "weather_clock_baseline",
    "write_panel",
]
