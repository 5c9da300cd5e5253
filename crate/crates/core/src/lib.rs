//! Fixed-target statistical forecasts of monthly Arctic sea ice extent.
//!
//! A target-month average (September by default) is regressed on an
//! intercept, a linear time trend, last month's average, a recent-window
//! average and the latest daily value, with one model per forecast date
//! estimated on past years. The crate covers the whole path from the daily
//! extent file to point, interval and density forecasts, day-by-day sweeps,
//! residual bootstraps and backtests against naive benchmarks.

pub mod bootstrap;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod forecast;
pub mod ingest;
pub mod regression;
pub mod report;
pub mod synthetic;

pub use bootstrap::{
    quantile_interval, residual_bootstrap, BootstrapConfig, BootstrapDistribution, BootstrapMode,
};
pub use error::{Result, SieError};
pub use evaluation::{
    backtest, backtest_with, benchmark_forecast, skill_score, BacktestRow, BacktestTemplate,
    BenchmarkKind, Forecaster, SkillReport,
};
pub use features::{
    build_feature_rows, month_average, month_to_date_average, trailing_average, FeatureRow,
    FeatureSet,
};
pub use forecast::{
    density_at, fit_model, forecast, sweep, ForecastDistribution, ForecastSpec, OffsetBasis,
    PredictiveDensity, SweepConfig, SweepEntry, SweepResult, Variant,
};
pub use ingest::{
    impute_missing, load_any, load_sea_ice_index, parse_sea_ice_index, validate_series,
    DailySeries, ImputationPolicy, RawRecord, ValidationReport,
};
pub use regression::{ols_fit, predict, DesignMatrix, RegressionFit};
