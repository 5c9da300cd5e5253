#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seaice_core::synthetic::{synthetic_series, SyntheticConfig};
use seaice_core::{load_any, DailySeries, DesignMatrix, ImputationPolicy};

pub fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// The default synthetic record, 1979-01-01..2020-12-31, built once per test binary.
pub fn synthetic() -> &'static DailySeries {
    static SERIES: OnceLock<DailySeries> = OnceLock::new();
    SERIES.get_or_init(|| synthetic_series(&SyntheticConfig::default()).unwrap())
}

/// Mid-month reference dates for September 2020.
pub fn reference_dates() -> [NaiveDate; 4] {
    [
        ymd(2020, 6, 10),
        ymd(2020, 7, 10),
        ymd(2020, 8, 10),
        ymd(2020, 9, 10),
    ]
}

/// Location of the archived daily extent file, if present.
pub fn archived_path() -> PathBuf {
    std::env::var_os("SEAICE_NSIDC_CSV")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("tests/fixtures/N_seaice_extent_daily_v3.0.csv")
        })
}

pub fn archived() -> Result<DailySeries, String> {
    let path = archived_path();
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("archived daily file {} unavailable: {e}", path.display()))?;
    load_any(&text, &ImputationPolicy::default()).map_err(|e| format!("{}: {e}", path.display()))
}

/// Solve `(X'X) b = X'y` by Gauss-Jordan elimination with partial pivoting.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = rows[0].len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * yi;
        }
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    a.iter().map(|r| r[k]).collect()
}

/// A well-conditioned random regression problem with an intercept column.
pub fn random_problem(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = rng.random_range(1..=6);
    let n = rng.random_range(k + 2..=k + 40);
    let beta: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            std::iter::once(1.0)
                .chain((1..k).map(|_| rng.random_range(-3.0..3.0)))
                .collect()
        })
        .collect();
    let y = rows
        .iter()
        .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-1.0..1.0))
        .collect();
    (rows, y)
}

pub fn design(rows: &[Vec<f64>]) -> DesignMatrix {
    DesignMatrix::from_rows(rows).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest absolute difference divided by the largest absolute reference value.
pub fn relative_error(got: &[f64], want: &[f64]) -> f64 {
    let diff = got
        .iter()
        .zip(want)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = want
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    diff / scale
}
