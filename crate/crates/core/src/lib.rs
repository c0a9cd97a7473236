//! Goodness-of-fit tests for circular regression with real-valued covariates.
//!
//! The crate fits the atan-link family `β₀ + 2·atan(β₁ᵀx)` by circular least
//! squares, smooths responses with atan2 local polynomial estimators,
//! compares the two through weighted circular distances, and calibrates the
//! comparison with residual bootstraps for independent or spatially
//! correlated errors.

pub mod bootstrap;
pub mod circular;
pub mod dataset;
pub mod error;
pub mod gof;
pub mod nonparam;
pub mod param;
pub mod rng;
pub mod sim;
pub mod spatial;

pub use bootstrap::{
    residuals, run_batch, run_iid_bootstrap, run_spatial_bootstrap, BatchOutcome, BatchSpec,
    BootstrapRun, BootstrapScheme, CellOutcome, ResidualSource, SchemeKind,
};
pub use circular::{circ_dist, mean_direction, sample_von_mises, wrap, Angle, VonMisesParams, TAU};
pub use dataset::{
    boundary_weight, default_resolution, load_csv, make_grid, parse_csv, parse_points_csv,
    AngleUnit, BoundaryWeight, BoxRegion, Dataset, EvalGrid, Points,
};
pub use error::{Error, Result};
pub use gof::{
    compute_statistic, evaluate_statistics, p_value, statistic_t1, statistic_t2, Statistic,
    StatisticPlan, TestConfig, TestResult,
};
pub use nonparam::{
    case_score, estimate_m, kernel_weight, select_bandwidth_case, smooth_parametric, BandwidthSpec,
    Degree, KernelSpec, LocalFit,
};
pub use param::{fit_circular_ls, ls_objective, predict, FitConfig, FitReport, ParametricModel};
pub use sim::{
    generate_dataset, reproduce_table, run_experiment, run_experiment_with_factor, table_spec,
    true_m_bi, true_m_uni, Design, ErrorModel, Factor, RejectionTable, RepeatRecord, Scale,
    Scenario, TableCell, TableSpec, VariancePreset,
};
pub use spatial::{
    covariance_matrix, mh_fit, simulate_field, ExponentialCovariance, PosteriorSummary,
    SpatialFitConfig, SpatialModel,
};

/// Tool version embedded in every output artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
