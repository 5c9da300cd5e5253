//! Deterministic synthetic daily extent files in the Sea Ice Index layout.
//!
//! Used by tests and benchmarks where the archived data file is not needed.
//! The generator follows a seasonal cycle with a season-dependent downward
//! trend and a persistent daily AR(1) anomaly. It reproduces the reporting
//! quirks of the real record: every other day until August 1987 and a
//! multi-week outage around the 1987/88 turn of the year. The numbers are not
//! observations and carry no physical meaning beyond plausibility.

use std::f64::consts::PI;
use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ingest::{load_sea_ice_index, DailySeries, ImputationPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    /// Before this date only every other day is reported.
    pub alternate_day_until: Option<NaiveDate>,
    /// Inclusive range of days with no report.
    pub outage: Option<(NaiveDate, NaiveDate)>,
    /// Day-to-day persistence of the anomaly.
    pub persistence: f64,
    /// Standard deviation of daily anomaly innovations, million km².
    pub innovation_sd: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 2020,
            first_date: ymd(1978, 10, 26),
            last_date: ymd(2020, 12, 31),
            alternate_day_until: Some(ymd(1987, 8, 20)),
            outage: Some((ymd(1987, 12, 3), ymd(1988, 1, 12))),
            persistence: 0.985,
            innovation_sd: 0.04,
        }
    }
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 in (0, 1].
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Seasonal mean extent for a day, including the long-run decline.
pub fn seasonal_mean(date: NaiveDate) -> f64 {
    let phase = 2.0 * PI * (date.ordinal() as f64 - 70.0) / 365.25;
    let years = date.year() as f64 - 1979.0 + date.ordinal() as f64 / 365.25;
    // Decline is steepest near the September minimum.
    let decline = 0.04 + 0.02 * (1.0 - phase.cos());
    11.6 + 3.9 * phase.cos() + 0.4 * (2.0 * phase).cos() - decline * years
}

/// Full daily values (before thinning), one per day of the configured range.
pub fn synthetic_values(cfg: &SyntheticConfig) -> Vec<(NaiveDate, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let stationary_sd = cfg.innovation_sd / (1.0 - cfg.persistence * cfg.persistence).sqrt();
    let mut anomaly = stationary_sd * standard_normal(&mut rng);
    cfg.first_date
        .iter_days()
        .take_while(|d| *d <= cfg.last_date)
        .map(|date| {
            anomaly = cfg.persistence * anomaly + cfg.innovation_sd * standard_normal(&mut rng);
            let v = (seasonal_mean(date) + anomaly).clamp(1.0, 19.0);
            (date, (v * 1000.0).round() / 1000.0)
        })
        .collect()
}

/// Synthetic file text in the public daily CSV layout.
pub fn synthetic_index_csv(cfg: &SyntheticConfig) -> String {
    let mut out = String::new();
    out.push_str("Year, Month, Day,     Extent,    Missing, Source Data\n");
    out.push_str("YYYY,    MM,  DD, 10^6 sq km, 10^6 sq km, Source data product web sites\n");
    for (i, (date, v)) in synthetic_values(cfg).into_iter().enumerate() {
        if cfg
            .alternate_day_until
            .is_some_and(|cut| date < cut && i % 2 == 1)
        {
            continue;
        }
        if cfg.outage.is_some_and(|(a, b)| date >= a && date <= b) {
            continue;
        }
        let _ = writeln!(
            out,
            "{:4},    {:02},  {:02}, {:>10.3}, {:>10.3}, ['synthetic/{}']",
            date.year(),
            date.month(),
            date.day(),
            v,
            0.0,
            date.format("%Y%m%d")
        );
    }
    out
}

/// Synthetic file parsed and imputed with the default policy.
pub fn synthetic_series(cfg: &SyntheticConfig) -> Result<DailySeries> {
    load_sea_ice_index(&synthetic_index_csv(cfg), &ImputationPolicy::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_plausible() {
        let cfg = SyntheticConfig::default();
        let a = synthetic_index_csv(&cfg);
        assert_eq!(a, synthetic_index_csv(&cfg));
        let s = synthetic_series(&cfg).unwrap();
        assert_eq!(s.start_date(), ymd(1979, 1, 1));
        assert_eq!(s.end_date(), ymd(2020, 12, 31));
        assert!(s.values().iter().all(|v| (1.0..=19.0).contains(v)));
    }
}
