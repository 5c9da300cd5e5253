//! Direct-projection forecasts of a target-month average.
//!
//! Each forecast date gets its own regression estimated on past years only,
//! evaluated at that date's covariates. The point forecast is the fitted
//! conditional mean, the interval is `mu ± 2 sigma_hat`, and the predictive
//! density is `N(mu, sigma_hat²)` unless bootstrap draws are attached.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use chrono::{Days, NaiveDate};
use rayon::prelude::*;

use crate::error::{Result, SieError};
use crate::features::{
    build_feature_rows, last_of_month, month_average, FeatureSet, REGRESSOR_NAMES,
};
use crate::ingest::DailySeries;
use crate::regression::{ols_fit, predict, DesignMatrix, RegressionFit};

/// Which recent-window covariate the regression uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Average from the 1st of the forecast month through the effective date.
    MonthToDate,
    /// Average of the 30 days ending at the effective date.
    Trailing30,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::MonthToDate => "month-to-date",
            Variant::Trailing30 => "trailing30",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = SieError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "month-to-date" => Ok(Variant::MonthToDate),
            "trailing30" => Ok(Variant::Trailing30),
            other => Err(SieError::Argument(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForecastSpec {
    pub target_year: i32,
    pub target_month: u32,
    pub forecast_date: NaiveDate,
    pub variant: Variant,
    pub lag_days: u32,
    pub first_training_year: i32,
}

impl ForecastSpec {
    pub const DEFAULT_LAG_DAYS: u32 = 1;
    pub const DEFAULT_FIRST_TRAINING_YEAR: i32 = 1979;

    pub fn new(target_year: i32, target_month: u32, forecast_date: NaiveDate) -> Self {
        Self {
            target_year,
            target_month,
            forecast_date,
            variant: Variant::MonthToDate,
            lag_days: Self::DEFAULT_LAG_DAYS,
            first_training_year: Self::DEFAULT_FIRST_TRAINING_YEAR,
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

    pub fn with_first_training_year(mut self, year: i32) -> Self {
        self.first_training_year = year;
        self
    }

    pub fn target_end(&self) -> Result<NaiveDate> {
        last_of_month(self.target_year, self.target_month)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=12).contains(&self.target_month) {
            return Err(SieError::Argument(format!(
                "target month {} outside 1..=12",
                self.target_month
            )));
        }
        let end = self.target_end()?;
        if self.forecast_date > end {
            return Err(SieError::Argument(format!(
                "forecast date {} is after the end of the target month {end}",
                self.forecast_date
            )));
        }
        Ok(())
    }

    /// Forecast date minus the availability lag.
    pub fn effective_date(&self) -> Result<NaiveDate> {
        self.forecast_date
            .checked_sub_days(Days::new(self.lag_days as u64))
            .ok_or_else(|| SieError::Argument("lag moves the effective date out of range".into()))
    }

    /// Days from the forecast date to the last day of the target month (≤ 0).
    pub fn offset(&self) -> Result<i64> {
        Ok((self.forecast_date - self.target_end()?).num_days())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    /// `NaN` where undefined (e.g. persistence benchmarks).
    pub r2_adj: f64,
    pub n: usize,
    pub k: usize,
}

impl FitSummary {
    pub(crate) fn from_fit(fit: &RegressionFit) -> Self {
        Self {
            names: fit.design().names().to_vec(),
            beta: fit.beta.clone(),
            r2_adj: fit.r2_adj,
            n: fit.n,
            k: fit.k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictiveDensity {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    /// Histogram over bins `[j*w, (j+1)*w)` of the attached draws.
    Empirical {
        draws: Vec<f64>,
        bin_width: f64,
    },
}

/// Which days fed a forecast; used to audit for look-ahead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataUse {
    /// Latest day read by any covariate, training rows included.
    pub covariates_through: NaiveDate,
    /// Latest day read by any training target.
    pub targets_through: Option<NaiveDate>,
}

impl DataUse {
    fn of(features: &FeatureSet) -> Self {
        let rows = features
            .training
            .iter()
            .chain(std::iter::once(&features.forecast));
        let covariates_through = rows
            .clone()
            .map(|r| r.covariates_through)
            .max()
            .expect("forecast row present");
        let targets_through = rows.filter_map(|r| r.target_through).max();
        Self {
            covariates_through,
            targets_through,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastDistribution {
    pub spec: ForecastSpec,
    pub effective_date: NaiveDate,
    pub mu: f64,
    pub sigma: f64,
    pub interval_lo: f64,
    pub interval_hi: f64,
    pub fit: FitSummary,
    pub density: PredictiveDensity,
    pub data_use: DataUse,
}

impl ForecastDistribution {
    pub(crate) fn gaussian(
        spec: ForecastSpec,
        effective_date: NaiveDate,
        mu: f64,
        sigma: f64,
        fit: FitSummary,
        data_use: DataUse,
    ) -> Self {
        Self {
            spec,
            effective_date,
            mu,
            sigma,
            interval_lo: mu - 2.0 * sigma,
            interval_hi: mu + 2.0 * sigma,
            fit,
            density: PredictiveDensity::Gaussian {
                mean: mu,
                sd: sigma,
            },
            data_use,
        }
    }

    /// Replace the Gaussian density with an empirical histogram of `draws`.
    pub fn with_draws(mut self, draws: Vec<f64>, bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(SieError::Argument(format!(
                "bin width {bin_width} must be positive"
            )));
        }
        if draws.is_empty() {
            return Err(SieError::Argument("no draws to attach".into()));
        }
        self.density = PredictiveDensity::Empirical { draws, bin_width };
        Ok(self)
    }
}

/// A model estimated for one [`ForecastSpec`], before it is reduced to a distribution.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub spec: ForecastSpec,
    pub features: FeatureSet,
    pub fit: RegressionFit,
    pub forecast_regressors: Vec<f64>,
    pub mu: f64,
}

impl FittedModel {
    pub fn distribution(&self) -> ForecastDistribution {
        ForecastDistribution::gaussian(
            self.spec.clone(),
            self.features.effective_date,
            self.mu,
            self.fit.sigma_hat,
            FitSummary::from_fit(&self.fit),
            DataUse::of(&self.features),
        )
    }
}

/// Build features for `spec`, estimate the regression on training years and
/// evaluate it at the forecast row.
pub fn fit_model(series: &DailySeries, spec: &ForecastSpec) -> Result<FittedModel> {
    let features = build_feature_rows(series, spec)?;
    let rows: Vec<Vec<f64>> = features
        .training
        .iter()
        .map(|r| r.regressors().to_vec())
        .collect();
    let y: Vec<f64> = features
        .training
        .iter()
        .map(|r| r.target.expect("training rows carry targets"))
        .collect();
    let design = DesignMatrix::new(
        REGRESSOR_NAMES.iter().map(|s| s.to_string()).collect(),
        &rows,
    )?;
    let fit = ols_fit(&design, &y)?;
    let forecast_regressors = features.forecast.regressors().to_vec();
    let mu = predict(&fit, &forecast_regressors)?;
    Ok(FittedModel {
        spec: spec.clone(),
        features,
        fit,
        forecast_regressors,
        mu,
    })
}

pub fn forecast(series: &DailySeries, spec: &ForecastSpec) -> Result<ForecastDistribution> {
    Ok(fit_model(series, spec)?.distribution())
}

/// Predictive density at `x`, per million km².
pub fn density_at(dist: &ForecastDistribution, x: f64) -> Result<f64> {
    match &dist.density {
        PredictiveDensity::Gaussian { mean, sd } => {
            if *sd <= 0.0 {
                return Err(SieError::DegenerateDensity { mu: *mean });
            }
            let z = (x - mean) / sd;
            Ok((-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt()))
        }
        PredictiveDensity::Empirical { draws, bin_width } => {
            let bin = (x / bin_width).floor();
            let count = draws
                .iter()
                .filter(|d| (*d / bin_width).floor() == bin)
                .count();
            Ok(count as f64 / (draws.len() as f64 * bin_width))
        }
    }
}

/// Whether sweep offsets count from the forecast date or from the lagged
/// effective date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffsetBasis {
    #[default]
    ForecastDate,
    EffectiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub offsets: RangeInclusive<i64>,
    pub variant: Variant,
    pub lag_days: u32,
    pub first_training_year: i32,
    pub basis: OffsetBasis,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            offsets: -120..=0,
            variant: Variant::Trailing30,
            lag_days: ForecastSpec::DEFAULT_LAG_DAYS,
            first_training_year: ForecastSpec::DEFAULT_FIRST_TRAINING_YEAR,
            basis: OffsetBasis::ForecastDate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    /// Days until the last day of the target month.
    pub offset: i64,
    pub spec: ForecastSpec,
    pub outcome: Result<ForecastDistribution>,
}

impl SweepEntry {
    pub fn effective_date(&self) -> Option<NaiveDate> {
        self.spec.effective_date().ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub target_year: i32,
    pub target_month: u32,
    pub variant: Variant,
    pub entries: Vec<SweepEntry>,
    /// Target-month average when the month is complete in the series.
    pub realized: Option<f64>,
}

impl SweepResult {
    pub fn successes(&self) -> impl Iterator<Item = (i64, &ForecastDistribution)> {
        self.entries
            .iter()
            .filter_map(|e| e.outcome.as_ref().ok().map(|d| (e.offset, d)))
    }

    pub fn success_fraction(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.successes().count() as f64 / self.entries.len() as f64
    }

    pub fn get(&self, offset: i64) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.offset == offset)
    }
}

/// Re-estimate a fresh model at every offset in `cfg.offsets`.
///
/// Entries are independent and computed in parallel; the result is ordered by
/// offset regardless of completion order. A failing offset is recorded in its
/// entry and does not abort the sweep.
pub fn sweep(
    series: &DailySeries,
    target_year: i32,
    target_month: u32,
    cfg: &SweepConfig,
) -> Result<SweepResult> {
    if cfg.offsets.is_empty() {
        return Err(SieError::Argument("empty offset range".into()));
    }
    if *cfg.offsets.end() > 0 {
        return Err(SieError::Argument(format!(
            "offsets must be <= 0, got {}",
            cfg.offsets.end()
        )));
    }
    let end = last_of_month(target_year, target_month)?;
    let offsets: Vec<i64> = cfg.offsets.clone().collect();

    let entries: Vec<SweepEntry> = offsets
        .par_iter()
        .map(|&offset| {
            let shift = match cfg.basis {
                OffsetBasis::ForecastDate => offset,
                OffsetBasis::EffectiveDate => offset + cfg.lag_days as i64,
            };
            let forecast_date = if shift <= 0 {
                end - Days::new(shift.unsigned_abs())
            } else {
                end + Days::new(shift as u64)
            };
            let spec = ForecastSpec::new(target_year, target_month, forecast_date)
                .with_variant(cfg.variant)
                .with_lag(cfg.lag_days)
                .with_first_training_year(cfg.first_training_year);
            let outcome = forecast(series, &spec);
            SweepEntry {
                offset,
                spec,
                outcome,
            }
        })
        .collect();

    Ok(SweepResult {
        target_year,
        target_month,
        variant: cfg.variant,
        entries,
        realized: month_average(series, target_year, target_month).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::month_average;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn gaussian(mu: f64, sigma: f64) -> ForecastDistribution {
        ForecastDistribution::gaussian(
            ForecastSpec::new(2020, 9, d(2020, 6, 10)),
            d(2020, 6, 9),
            mu,
            sigma,
            FitSummary {
                names: vec![],
                beta: vec![],
                r2_adj: f64::NAN,
                n: 0,
                k: 0,
            },
            DataUse {
                covariates_through: d(2020, 6, 9),
                targets_through: None,
            },
        )
    }

    #[test]
    fn gaussian_mode_and_shoulder() {
        let g = gaussian(4.0, 0.5);
        let mode = density_at(&g, 4.0).unwrap();
        assert!((mode - 1.0 / (0.5 * (2.0 * PI).sqrt())).abs() < 1e-15);
        for x in [3.5, 4.5] {
            assert!((density_at(&g, x).unwrap() - mode * (-0.5f64).exp()).abs() < 1e-15);
        }
        assert_eq!(g.interval_hi - g.interval_lo, 4.0 * g.sigma);
    }

    #[test]
    fn zero_sigma_density_is_an_error() {
        let g = gaussian(4.0, 0.0);
        assert_eq!(
            density_at(&g, 4.0),
            Err(SieError::DegenerateDensity { mu: 4.0 })
        );
        assert_eq!((g.interval_lo, g.interval_hi), (4.0, 4.0));
    }

    #[test]
    fn empirical_histogram_density() {
        let g = gaussian(4.0, 0.5)
            .with_draws(vec![4.01, 4.02, 4.06, 4.13], 0.05)
            .unwrap();
        assert!((density_at(&g, 4.03).unwrap() - 2.0 / (4.0 * 0.05)).abs() < 1e-12);
        assert!((density_at(&g, 4.07).unwrap() - 1.0 / (4.0 * 0.05)).abs() < 1e-12);
        assert_eq!(density_at(&g, 5.0).unwrap(), 0.0);
        assert!(gaussian(4.0, 0.5).with_draws(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn spec_validation() {
        let spec = ForecastSpec::new(2020, 9, d(2020, 10, 1));
        assert!(spec.validate().is_err());
        let spec = ForecastSpec::new(2020, 9, d(2020, 9, 30));
        assert_eq!(spec.offset().unwrap(), 0);
        assert_eq!(spec.effective_date().unwrap(), d(2020, 9, 29));
        assert_eq!(
            ForecastSpec::new(2020, 9, d(2020, 6, 10)).offset().unwrap(),
            -112
        );
        assert!("weekly".parse::<Variant>().is_err());
        assert_eq!(
            "trailing30".parse::<Variant>().unwrap(),
            Variant::Trailing30
        );
    }

    /// September average is an exact linear function of the covariates.
    fn exact_series() -> DailySeries {
        // Synthetic daily values with September overwritten so that its mean
        // equals 1 + 0.01*time + 0.5*august exactly.
        let cfg = crate::synthetic::SyntheticConfig {
            first_date: d(1979, 1, 1),
            ..Default::default()
        };
        let start = cfg.first_date;
        let mut values: Vec<f64> = crate::synthetic::synthetic_values(&cfg)
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        let round3 = |v: f64| (v * 1000.0).round() / 1000.0;
        for year in 1979..=2020 {
            // Nudge Aug 1 so the August mean is a 3-decimal number.
            let aug_first = (d(year, 8, 1) - start).num_days() as usize;
            let sum = round3(values[aug_first..aug_first + 31].iter().sum::<f64>());
            let aug = round3(sum / 31.0);
            values[aug_first] = round3(values[aug_first] + 31.0 * aug - sum);
            let target = 1.0 + 0.01 * (year - 1978) as f64 + 0.5 * aug;
            let first = (d(year, 9, 1) - start).num_days() as usize;
            for v in &mut values[first..first + 30] {
                *v = target;
            }
        }
        DailySeries::from_values(start, values)
    }

    #[test]
    fn exact_fit_gives_degenerate_interval() {
        let s = exact_series();
        // Covariates from August only: forecast on Sep 1 with lag 1 uses Aug 31.
        let spec = ForecastSpec::new(2020, 9, d(2020, 9, 1)).with_variant(Variant::Trailing30);
        let f = forecast(&s, &spec).unwrap();
        assert_eq!(f.sigma, 0.0);
        assert_eq!(f.interval_lo, f.mu);
        assert_eq!(f.interval_hi, f.mu);
        let expected = 1.0 + 0.01 * 42.0 + 0.5 * month_average(&s, 2020, 8).unwrap();
        assert!((f.mu - expected).abs() < 1e-6);
    }

    #[test]
    #[allow(clippy::reversed_empty_ranges)]
    fn empty_sweep_is_rejected() {
        let s = exact_series();
        let cfg = SweepConfig {
            offsets: 0..=-1,
            ..SweepConfig::default()
        };
        assert!(sweep(&s, 2020, 9, &cfg).is_err());
    }
}
