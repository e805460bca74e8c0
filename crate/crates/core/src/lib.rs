//! Maximum-likelihood inference for Poisson autoregressive count models and
//! sequential change-point monitoring with Monte Carlo critical values.

pub mod boundary;
pub mod critical_values;
pub mod error;
pub mod experiments;
pub mod likelihood;
pub mod models;
pub mod monitor;
mod optim;
pub mod rng;
pub mod series;
pub mod simulate;

pub use boundary::BoundaryShape;
pub use critical_values::{
    draw_u, quantile_c_alpha, QuantileCache, QuantileRequest, QuantileResult,
};
pub use error::{Error, Result};
pub use experiments::{
    emit_detector_series, load_counts_csv, read_detector_series, run_delay_stats, run_experiment,
    run_level_power, write_detector_series, DelayStats, ExperimentConfig, ResultTable, Scenario,
};
pub use likelihood::{fit_mle, loglik, score, sigma_hat, FitOptions, FitResult, SigmaEstimate};
pub use models::{
    check_domain, contraction_norm, intensity_path, psi_coefficients, DomainReport, IntensityPath,
    ModelSpec, Theta, ThetaDomain, Violation,
};
pub use monitor::{
    detector, run_monitor, window_pi, Monitor, MonitorConfig, MonitorTrace, RefitPolicy,
    StepRecord, StrideRule,
};
pub use series::{CountSeries, Window};
pub use simulate::{simulate_stationary, simulate_with_change, ChangeSpec};
