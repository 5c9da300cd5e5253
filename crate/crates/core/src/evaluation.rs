//! Leave-future-out backtests and MSE skill scores against naive benchmarks.

use std::ops::RangeInclusive;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::error::{Result, SieError};
use crate::features::{build_feature_rows, month_average, same_day_in_year};
use crate::forecast::{forecast, DataUse, FitSummary, ForecastDistribution, ForecastSpec, Variant};
use crate::ingest::DailySeries;
use crate::regression::{ols_fit, predict, DesignMatrix};

/// Forecast date, variant and lag applied to every backtest year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BacktestTemplate {
    pub month: u32,
    pub day: u32,
    pub target_month: u32,
    pub variant: Variant,
    pub lag_days: u32,
    pub first_training_year: i32,
    /// Years with fewer training years than this are skipped.
    pub min_training_years: i32,
}

impl BacktestTemplate {
    pub fn new(month: u32, day: u32) -> Self {
        Self {
            month,
            day,
            target_month: 9,
            variant: Variant::MonthToDate,
            lag_days: ForecastSpec::DEFAULT_LAG_DAYS,
            first_training_year: ForecastSpec::DEFAULT_FIRST_TRAINING_YEAR,
            min_training_years: 10,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_lag(mut self, lag_days: u32) -> Self {
        self.lag_days = lag_days;
        self
    }

    pub fn with_target_month(mut self, month: u32) -> Self {
        self.target_month = month;
        self
    }

    pub fn spec_for(&self, year: i32) -> Result<ForecastSpec> {
        // Feb 29 templates fall back to Feb 28 in common years.
        let date = NaiveDate::from_ymd_opt(2000, self.month, self.day)
            .map(|d| same_day_in_year(d, year))
            .ok_or_else(|| {
                SieError::Argument(format!(
                    "invalid template date {:02}-{:02}",
                    self.month, self.day
                ))
            })?;
        Ok(ForecastSpec::new(year, self.target_month, date)
            .with_variant(self.variant)
            .with_lag(self.lag_days)
            .with_first_training_year(self.first_training_year))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestRow {
    pub target_year: i32,
    pub forecast_date: NaiveDate,
    pub mu: f64,
    pub sigma: f64,
    pub realized: f64,
    /// `mu - realized`.
    pub error: f64,
    pub interval_hit: bool,
    pub data_use: DataUse,
}

impl BacktestRow {
    pub fn interval(&self) -> (f64, f64) {
        (self.mu - 2.0 * self.sigma, self.mu + 2.0 * self.sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    Climatology,
    TrendOnly,
    LastMonthPersistence,
}

impl BenchmarkKind {
    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkKind::Climatology => "climatology",
            BenchmarkKind::TrendOnly => "trend-only",
            BenchmarkKind::LastMonthPersistence => "persistence",
        }
    }
}

impl std::str::FromStr for BenchmarkKind {
    type Err = SieError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "climatology" => Ok(BenchmarkKind::Climatology),
            "trend-only" | "trend" => Ok(BenchmarkKind::TrendOnly),
            "persistence" => Ok(BenchmarkKind::LastMonthPersistence),
            other => Err(SieError::Argument(format!("unknown benchmark {other:?}"))),
        }
    }
}

/// Model evaluated in a backtest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Forecaster {
    Regression,
    Benchmark(BenchmarkKind),
}

impl Forecaster {
    pub fn name(&self) -> &'static str {
        match self {
            Forecaster::Regression => "regression",
            Forecaster::Benchmark(kind) => kind.name(),
        }
    }

    pub fn forecast(
        &self,
        series: &DailySeries,
        spec: &ForecastSpec,
    ) -> Result<ForecastDistribution> {
        match self {
            Forecaster::Regression => forecast(series, spec),
            Forecaster::Benchmark(kind) => benchmark_forecast(series, spec, *kind),
        }
    }
}

pub fn backtest(
    series: &DailySeries,
    years: RangeInclusive<i32>,
    template: &BacktestTemplate,
) -> Vec<BacktestRow> {
    backtest_with(series, years, template, Forecaster::Regression)
}

/// One row per year with a completed target month; each year is trained only
/// on the years before it. Years that cannot be forecast are skipped and logged.
pub fn backtest_with(
    series: &DailySeries,
    years: RangeInclusive<i32>,
    template: &BacktestTemplate,
    forecaster: Forecaster,
) -> Vec<BacktestRow> {
    let years: Vec<i32> = years.collect();
    let rows: Vec<Option<BacktestRow>> = years
        .par_iter()
        .map(
            |&year| match backtest_year(series, year, template, forecaster) {
                Ok(row) => Some(row),
                Err(reason) => {
                    log::info!("backtest {}: skipping {year}: {reason}", forecaster.name());
                    None
                }
            },
        )
        .collect();
    rows.into_iter().flatten().collect()
}

fn backtest_year(
    series: &DailySeries,
    year: i32,
    template: &BacktestTemplate,
    forecaster: Forecaster,
) -> Result<BacktestRow> {
    let training_years = year - template.first_training_year;
    if training_years < template.min_training_years {
        return Err(SieError::InsufficientData(format!(
            "{training_years} training years, need {}",
            template.min_training_years
        )));
    }
    let realized = month_average(series, year, template.target_month)?;
    let spec = template.spec_for(year)?;
    let dist = forecaster.forecast(series, &spec)?;
    let (lo, hi) = (dist.interval_lo, dist.interval_hi);
    Ok(BacktestRow {
        target_year: year,
        forecast_date: spec.forecast_date,
        mu: dist.mu,
        sigma: dist.sigma,
        realized,
        error: dist.mu - realized,
        interval_hit: lo <= realized && realized <= hi,
        data_use: dist.data_use,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkillReport {
    pub model_mse: f64,
    pub benchmark_mse: f64,
    /// `1 - model_mse / benchmark_mse`; positive when the model is better.
    pub skill: f64,
    pub n_years: usize,
    pub benchmark_name: String,
}

fn mse(rows: &[BacktestRow]) -> f64 {
    rows.iter().map(|r| r.error * r.error).sum::<f64>() / rows.len() as f64
}

pub fn skill_score(
    model_rows: &[BacktestRow],
    benchmark_rows: &[BacktestRow],
    benchmark_name: &str,
) -> Result<SkillReport> {
    let mut a: Vec<i32> = model_rows.iter().map(|r| r.target_year).collect();
    let mut b: Vec<i32> = benchmark_rows.iter().map(|r| r.target_year).collect();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(SieError::Argument(
            "model and benchmark rows cover different years".into(),
        ));
    }
    if a.is_empty() {
        return Err(SieError::InsufficientData("no backtest rows".into()));
    }
    let model_mse = mse(model_rows);
    let benchmark_mse = mse(benchmark_rows);
    if benchmark_mse == 0.0 {
        return Err(SieError::UndefinedSkill);
    }
    Ok(SkillReport {
        model_mse,
        benchmark_mse,
        skill: 1.0 - model_mse / benchmark_mse,
        n_years: a.len(),
        benchmark_name: benchmark_name.to_string(),
    })
}

/// Naive forecasts over the same training years as the regression.
///
/// Climatology is the mean of past target-month averages, TrendOnly an OLS
/// line in `Time`, and persistence carries the previous month's average
/// forward with `sigma` the root mean squared historical persistence error.
pub fn benchmark_forecast(
    series: &DailySeries,
    spec: &ForecastSpec,
    kind: BenchmarkKind,
) -> Result<ForecastDistribution> {
    let features = build_feature_rows(series, spec)?;
    let targets: Vec<f64> = features
        .training
        .iter()
        .map(|r| r.target.expect("training rows carry targets"))
        .collect();
    let data_use = DataUse {
        covariates_through: features.effective_date,
        targets_through: features
            .training
            .iter()
            .filter_map(|r| r.target_through)
            .max(),
    };

    let (mu, sigma, fit) = match kind {
        BenchmarkKind::Climatology | BenchmarkKind::TrendOnly => {
            let (names, rows, x): (Vec<String>, Vec<Vec<f64>>, Vec<f64>) = match kind {
                BenchmarkKind::Climatology => (
                    vec!["c".into()],
                    features.training.iter().map(|_| vec![1.0]).collect(),
                    vec![1.0],
                ),
                _ => (
                    vec!["c".into(), "time".into()],
                    features
                        .training
                        .iter()
                        .map(|r| vec![1.0, r.time_index as f64])
                        .collect(),
                    vec![1.0, features.forecast.time_index as f64],
                ),
            };
            let design = DesignMatrix::new(names, &rows)?;
            let fit = ols_fit(&design, &targets)?;
            let mu = predict(&fit, &x)?;
            (mu, fit.sigma_hat, FitSummary::from_fit(&fit))
        }
        BenchmarkKind::LastMonthPersistence => {
            if targets.is_empty() {
                return Err(SieError::InsufficientData("no training years".into()));
            }
            let sq: f64 = features
                .training
                .iter()
                .zip(&targets)
                .map(|(r, t)| (t - r.sie_last_month).powi(2))
                .sum();
            let summary = FitSummary {
                names: vec![],
                beta: vec![],
                r2_adj: f64::NAN,
                n: targets.len(),
                k: 0,
            };
            (
                features.forecast.sie_last_month,
                (sq / targets.len() as f64).sqrt(),
                summary,
            )
        }
    };
    Ok(ForecastDistribution::gaussian(
        spec.clone(),
        features.effective_date,
        mu,
        sigma,
        fit,
        data_use,
    ))
}
