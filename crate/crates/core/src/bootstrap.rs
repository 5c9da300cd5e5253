//! Residual-bootstrap predictive distributions.
//!
//! Draws come from a ChaCha8 stream seeded with `BootstrapConfig::seed`, so a
//! given seed reproduces the same draws on every platform. Residuals are used
//! raw, without leverage correction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SieError};
use crate::forecast::{fit_model, FittedModel, ForecastSpec};
use crate::ingest::DailySeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BootstrapMode {
    /// `mu + e*` with `e*` drawn from the fitted residuals.
    #[default]
    ShiftOnly,
    /// Refit on `fitted + e*`, predict, then add one more resampled residual.
    Refit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapConfig {
    pub draws: usize,
    pub seed: u64,
    pub mode: BootstrapMode,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            draws: 10_000,
            seed: 0,
            mode: BootstrapMode::ShiftOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDistribution {
    pub spec: ForecastSpec,
    pub config: BootstrapConfig,
    /// Point forecast of the underlying fit.
    pub mu: f64,
    /// Draws in generation order.
    pub draws: Vec<f64>,
    sorted: Vec<f64>,
}

impl BootstrapDistribution {
    /// Empirical quantile with linear interpolation between order statistics:
    /// `h = (B - 1) p`, `q = x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h])`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SieError::Argument(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        Ok(interpolated_quantile(&self.sorted, p))
    }

    pub fn mean(&self) -> f64 {
        self.draws.iter().sum::<f64>() / self.draws.len() as f64
    }

    /// Sample standard deviation (divisor `B - 1`; zero for a single draw).
    pub fn std_dev(&self) -> f64 {
        let b = self.draws.len();
        if b < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (b - 1) as f64).sqrt()
    }

    /// One value per line, six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.draws.len() * 10);
        for d in &self.draws {
            out.push_str(&format!("{d:.6}\n"));
        }
        out
    }
}

fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn residual_bootstrap(
    series: &DailySeries,
    spec: &ForecastSpec,
    cfg: &BootstrapConfig,
) -> Result<BootstrapDistribution> {
    let model = fit_model(series, spec)?;
    bootstrap_model(&model, cfg)
}

/// Bootstrap an already estimated model.
pub fn bootstrap_model(
    model: &FittedModel,
    cfg: &BootstrapConfig,
) -> Result<BootstrapDistribution> {
    if cfg.draws == 0 {
        return Err(SieError::Argument(
            "bootstrap needs at least one draw".into(),
        ));
    }
    let residuals = &model.fit.residuals;
    let n = residuals.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let draws: Vec<f64> = match cfg.mode {
        BootstrapMode::ShiftOnly => (0..cfg.draws)
            .map(|_| model.mu + residuals[rng.random_range(0..n)])
            .collect(),
        BootstrapMode::Refit => {
            let fitted = model.fit.fitted();
            let x = &model.forecast_regressors;
            let mut y_star = vec![0.0; n];
            let mut draws = Vec::with_capacity(cfg.draws);
            for _ in 0..cfg.draws {
                for (y, f) in y_star.iter_mut().zip(&fitted) {
                    *y = f + residuals[rng.random_range(0..n)];
                }
                let beta = model.fit.refit_coefficients(&y_star)?;
                let point: f64 = beta.iter().zip(x).map(|(b, v)| b * v).sum();
                draws.push(point + residuals[rng.random_range(0..n)]);
            }
            draws
        }
    };

    let mut sorted = draws.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BootstrapDistribution {
        spec: model.spec.clone(),
        config: *cfg,
        mu: model.mu,
        draws,
        sorted,
    })
}

/// Central percentile interval covering `coverage` of the draws.
pub fn quantile_interval(dist: &BootstrapDistribution, coverage: f64) -> Result<(f64, f64)> {
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(SieError::Argument(format!(
            "coverage {coverage} outside (0, 1)"
        )));
    }
    let tail = (1.0 - coverage) / 2.0;
    Ok((dist.quantile(tail)?, dist.quantile(1.0 - tail)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn dist_from(draws: Vec<f64>) -> BootstrapDistribution {
        let mut sorted = draws.clone();
        sorted.sort_by(f64::total_cmp);
        BootstrapDistribution {
            spec: ForecastSpec::new(2020, 9, NaiveDate::from_ymd_opt(2020, 6, 10).unwrap()),
            config: BootstrapConfig::default(),
            mu: 0.0,
            draws,
            sorted,
        }
    }

    #[test]
    fn interpolated_percentiles() {
        let d = dist_from((1..=100).rev().map(f64::from).collect());
        let (lo, hi) = quantile_interval(&d, 0.5).unwrap();
        assert!((lo - 25.75).abs() < 1e-12);
        assert!((hi - 75.25).abs() < 1e-12);
        assert_eq!(d.quantile(0.0).unwrap(), 1.0);
        assert_eq!(d.quantile(1.0).unwrap(), 100.0);
    }

    #[test]
    fn constant_draws() {
        let d = dist_from(vec![3.5; 17]);
        assert_eq!(quantile_interval(&d, 0.95).unwrap(), (3.5, 3.5));
        assert_eq!(d.std_dev(), 0.0);
    }

    #[test]
    fn coverage_bounds() {
        let d = dist_from(vec![1.0, 2.0]);
        assert!(quantile_interval(&d, 0.0).is_err());
        assert!(quantile_interval(&d, 1.0).is_err());
        assert!(d.quantile(1.5).is_err());
    }

    #[test]
    fn single_draw() {
        let d = dist_from(vec![2.0]);
        assert_eq!(quantile_interval(&d, 0.9).unwrap(), (2.0, 2.0));
    }
}
