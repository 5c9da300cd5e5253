//! Calendar-aligned covariates and targets.
//!
//! Every training year is evaluated on the same month/day as the forecast
//! year's effective date (forecast date minus the availability lag), so a
//! June 10 model is trained on June 10 covariates from each past year.

use chrono::{Datelike, Days, NaiveDate};

use crate::error::{Result, SieError};
use crate::forecast::{ForecastSpec, Variant};
use crate::ingest::DailySeries;

/// `time_index = year - TIME_ORIGIN`, so 1979 is 1 and 2020 is 42.
pub const TIME_ORIGIN: i32 = 1978;

pub fn days_in_month(year: i32, month: u32) -> Result<u32> {
    let first = first_of_month(year, month)?;
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .ok_or_else(|| SieError::Argument(format!("no month after {year}-{month:02}")))?;
    Ok((next - first).num_days() as u32)
}

pub fn last_of_month(year: i32, month: u32) -> Result<NaiveDate> {
    let n = days_in_month(year, month)?;
    Ok(NaiveDate::from_ymd_opt(year, month, n).expect("valid month end"))
}

fn first_of_month(year: i32, month: u32) -> Result<NaiveDate> {
    NaiveDate::from_ymd_opt(year, month, 1)
        .ok_or_else(|| SieError::Argument(format!("invalid month {year}-{month:02}")))
}

fn previous_month(year: i32, month: u32) -> (i32, u32) {
    if month == 1 {
        (year - 1, 12)
    } else {
        (year, month - 1)
    }
}

/// Same month/day in another year; Feb 29 maps to Feb 28 in common years.
pub(crate) fn same_day_in_year(date: NaiveDate, year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, date.month(), date.day())
        .or_else(|| NaiveDate::from_ymd_opt(year, date.month(), date.day() - 1))
        .expect("valid calendar day")
}

fn window_mean(series: &DailySeries, first: NaiveDate, last: NaiveDate) -> Option<f64> {
    let values = series.slice(first, last)?;
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

fn coverage(series: &DailySeries, what: String) -> SieError {
    SieError::Coverage {
        what,
        first: series.start_date(),
        last: series.end_date(),
    }
}

/// Mean of all daily values in a calendar month.
pub fn month_average(series: &DailySeries, year: i32, month: u32) -> Result<f64> {
    let first = first_of_month(year, month)?;
    let last = last_of_month(year, month)?;
    window_mean(series, first, last).ok_or(SieError::IncompleteMonth {
        year,
        month,
        first: series.start_date(),
        last: series.end_date(),
    })
}

/// Mean of days `1..=through_day` of a month.
pub fn month_to_date_average(
    series: &DailySeries,
    year: i32,
    month: u32,
    through_day: u32,
) -> Result<f64> {
    let n = days_in_month(year, month)?;
    if through_day < 1 || through_day > n {
        return Err(SieError::Argument(format!(
            "through_day {through_day} outside 1..={n} for {year}-{month:02}"
        )));
    }
    let first = first_of_month(year, month)?;
    let last = NaiveDate::from_ymd_opt(year, month, through_day).expect("checked above");
    window_mean(series, first, last).ok_or_else(|| coverage(series, format!("{first}..={last}")))
}

/// Mean of the `window_days` days ending at `end_date` inclusive.
pub fn trailing_average(
    series: &DailySeries,
    end_date: NaiveDate,
    window_days: u32,
) -> Result<f64> {
    if window_days == 0 {
        return Err(SieError::Argument("window_days must be >= 1".into()));
    }
    let first = end_date
        .checked_sub_days(Days::new(window_days as u64 - 1))
        .ok_or_else(|| SieError::Argument("window start out of calendar range".into()))?;
    window_mean(series, first, end_date).ok_or_else(|| {
        coverage(
            series,
            format!("{window_days}-day window {first}..={end_date}"),
        )
    })
}

/// One observation of the regression: covariates at a same-calendar-day
/// effective date and, for training years, the target-month average.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub year: i32,
    pub time_index: i32,
    pub sie_last_month: f64,
    /// Month-to-date average or trailing 30-day average depending on variant.
    pub sie_window: f64,
    pub sie_today: f64,
    pub target: Option<f64>,
    /// Last day whose value entered the covariates.
    pub covariates_through: NaiveDate,
    /// Last day whose value entered the target, when present.
    pub target_through: Option<NaiveDate>,
}

impl FeatureRow {
    /// Regressor vector `[1, Time, LastMonth, Window, Today]`.
    pub fn regressors(&self) -> [f64; 5] {
        [
            1.0,
            self.time_index as f64,
            self.sie_last_month,
            self.sie_window,
            self.sie_today,
        ]
    }
}

pub const REGRESSOR_NAMES: [&str; 5] = ["c", "time", "sie_last_month", "sie_window", "sie_today"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub training: Vec<FeatureRow>,
    pub forecast: FeatureRow,
    pub effective_date: NaiveDate,
    pub warnings: Vec<String>,
}

/// Build the training rows (`first_training_year..target_year`) and the
/// forecast row for `spec`.
///
/// Only data dated on or before the effective date is visible; any training
/// year whose target month is not complete by then fails with a coverage
/// error naming the year.
pub fn build_feature_rows(series: &DailySeries, spec: &ForecastSpec) -> Result<FeatureSet> {
    spec.validate()?;
    let effective = spec.effective_date()?;
    let visible = series.truncated(effective);
    let mut warnings = Vec::new();

    let forecast = covariates_for_year(&visible, spec, spec.target_year, &mut warnings)
        .map_err(|e| e.in_year(spec.target_year))?;

    let mut training =
        Vec::with_capacity((spec.target_year - spec.first_training_year).max(0) as usize);
    let mut scratch = Vec::new();
    for year in spec.first_training_year..spec.target_year {
        let mut row =
            covariates_for_year(&visible, spec, year, &mut scratch).map_err(|e| e.in_year(year))?;
        let target =
            month_average(&visible, year, spec.target_month).map_err(|e| e.in_year(year))?;
        row.target = Some(target);
        row.target_through = Some(last_of_month(year, spec.target_month)?);
        training.push(row);
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(FeatureSet {
        training,
        forecast,
        effective_date: effective,
        warnings,
    })
}

fn covariates_for_year(
    series: &DailySeries,
    spec: &ForecastSpec,
    year: i32,
    warnings: &mut Vec<String>,
) -> Result<FeatureRow> {
    let shift = year - spec.target_year;
    let effective = spec.effective_date()?;
    let eff = same_day_in_year(effective, effective.year() + shift);
    let anchor_year = spec.forecast_date.year() + shift;
    let anchor_month = spec.forecast_date.month();
    let month_start = first_of_month(anchor_year, anchor_month)?;

    let (py, pm) = previous_month(anchor_year, anchor_month);
    let prev_end = last_of_month(py, pm)?;
    if prev_end > eff {
        return Err(SieError::Argument(format!(
            "lag of {} days reaches back before the end of {py}-{pm:02}; last month is not yet complete",
            spec.lag_days
        )));
    }
    let sie_last_month = month_average(series, py, pm)?;

    let sie_window = match spec.variant {
        Variant::MonthToDate if eff >= month_start => {
            month_to_date_average(series, anchor_year, anchor_month, eff.day())?
        }
        Variant::MonthToDate => {
            if shift == 0 {
                warnings.push(format!(
                    "month-to-date window for {} is empty after a {}-day lag; using {eff} as a 1-day window",
                    spec.forecast_date, spec.lag_days
                ));
            }
            trailing_average(series, eff, 1)?
        }
        Variant::Trailing30 => trailing_average(series, eff, 30)?,
    };
    let sie_today = series
        .get(eff)
        .ok_or_else(|| coverage(series, format!("day {eff}")))?;

    Ok(FeatureRow {
        year,
        time_index: year - TIME_ORIGIN,
        sie_last_month,
        sie_window,
        sie_today,
        target: None,
        covariates_through: eff,
        target_through: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    /// Value on day `i` counted from 2000-01-01 is `i`.
    fn ramp() -> DailySeries {
        let n = (d(2002, 12, 31) - d(2000, 1, 1)).num_days() as usize + 1;
        DailySeries::from_values(d(2000, 1, 1), (0..n).map(|i| i as f64 / 100.0).collect())
    }

    fn idx(date: NaiveDate) -> f64 {
        (date - d(2000, 1, 1)).num_days() as f64 / 100.0
    }

    #[test]
    fn month_lengths() {
        assert_eq!(days_in_month(2020, 2).unwrap(), 29);
        assert_eq!(days_in_month(2019, 2).unwrap(), 28);
        assert_eq!(days_in_month(2020, 9).unwrap(), 30);
        assert_eq!(days_in_month(2020, 12).unwrap(), 31);
    }

    #[test]
    fn constant_month_average() {
        let s = DailySeries::from_values(d(2000, 1, 1), vec![5.0; 400]);
        assert_eq!(month_average(&s, 2000, 2).unwrap(), 5.0);
        assert!(matches!(
            month_average(&s, 2001, 2),
            Err(SieError::IncompleteMonth {
                year: 2001,
                month: 2,
                ..
            })
        ));
    }

    #[test]
    fn ramp_averages_are_midpoints() {
        let s = ramp();
        let june = month_average(&s, 2001, 6).unwrap();
        let mid = (idx(d(2001, 6, 1)) + idx(d(2001, 6, 30))) / 2.0;
        assert!((june - mid).abs() < 1e-12);
        let mtd = month_to_date_average(&s, 2001, 7, 10).unwrap();
        assert!((mtd - (idx(d(2001, 7, 1)) + idx(d(2001, 7, 10))) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_windows() {
        let s = ramp();
        assert_eq!(
            month_to_date_average(&s, 2001, 7, 1).unwrap(),
            idx(d(2001, 7, 1))
        );
        assert_eq!(
            trailing_average(&s, d(2001, 9, 10), 1).unwrap(),
            idx(d(2001, 9, 10))
        );
        assert!(matches!(
            month_to_date_average(&s, 2001, 6, 31),
            Err(SieError::Argument(_))
        ));
        assert!(matches!(
            trailing_average(&s, d(2000, 1, 5), 30),
            Err(SieError::Coverage { .. })
        ));
    }

    #[test]
    fn trailing_equals_month_to_date_on_day_30() {
        let s = DailySeries::from_values(
            d(2000, 1, 1),
            (0..1000)
                .map(|i| ((i * 7919) % 1000) as f64 / 97.0)
                .collect(),
        );
        let a = trailing_average(&s, d(2001, 9, 30), 30).unwrap();
        let b = month_to_date_average(&s, 2001, 9, 30).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn feature_rows_for_july_tenth() {
        let s = ramp();
        let spec = ForecastSpec::new(2002, 9, d(2002, 7, 10))
            .with_lag(0)
            .with_first_training_year(2000);
        let set = build_feature_rows(&s, &spec).unwrap();
        assert_eq!(set.training.len(), 2);
        let f = &set.forecast;
        assert_eq!(f.time_index, 24);
        assert_eq!(f.sie_today, idx(d(2002, 7, 10)));
        assert_eq!(f.sie_last_month, month_average(&s, 2002, 6).unwrap());
        assert_eq!(
            f.sie_window,
            month_to_date_average(&s, 2002, 7, 10).unwrap()
        );
        assert_eq!(f.target, None);
        let t = &set.training[1];
        assert_eq!(t.year, 2001);
        assert_eq!(t.covariates_through, d(2001, 7, 10));
        assert_eq!(t.target, Some(month_average(&s, 2001, 9).unwrap()));

        let lagged = build_feature_rows(&s, &spec.clone().with_lag(1)).unwrap();
        assert_eq!(lagged.forecast.sie_today, idx(d(2002, 7, 9)));
        assert_eq!(
            lagged.forecast.sie_window,
            month_to_date_average(&s, 2002, 7, 9).unwrap()
        );
    }

    #[test]
    fn first_of_month_with_lag_falls_back() {
        let s = ramp();
        let spec = ForecastSpec::new(2002, 9, d(2002, 8, 1)).with_first_training_year(2000);
        let set = build_feature_rows(&s, &spec).unwrap();
        assert_eq!(set.forecast.sie_window, idx(d(2002, 7, 31)));
        assert_eq!(
            set.forecast.sie_last_month,
            month_average(&s, 2002, 7).unwrap()
        );
        assert_eq!(set.warnings.len(), 1);
    }

    #[test]
    fn missing_training_year_is_named() {
        let s = ramp().truncated(d(2002, 7, 10));
        let spec = ForecastSpec::new(2002, 9, d(2002, 7, 10)).with_first_training_year(1999);
        match build_feature_rows(&s, &spec) {
            Err(SieError::Year { year: 1999, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn target_month_after_effective_date_is_invisible() {
        // A forecast of Sep 2002 made in March 2001 cannot see Sep 2001.
        let s = ramp();
        let spec = ForecastSpec::new(2002, 9, d(2001, 3, 15))
            .with_lag(0)
            .with_first_training_year(2001);
        assert!(matches!(
            build_feature_rows(&s, &spec),
            Err(SieError::Year { year: 2001, .. })
        ));
    }

    #[test]
    fn feb_29_maps_to_feb_28() {
        assert_eq!(same_day_in_year(d(2020, 2, 29), 2019), d(2019, 2, 28));
        assert_eq!(same_day_in_year(d(2020, 6, 10), 1979), d(1979, 6, 10));
    }
}
