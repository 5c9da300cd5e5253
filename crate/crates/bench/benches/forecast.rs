use std::hint::black_box;

use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, Criterion};
use seaice_bench::fixture_series;
use seaice_core::bootstrap::bootstrap_model;
use seaice_core::{
    fit_model, forecast, ols_fit, sweep, BootstrapConfig, BootstrapMode, DesignMatrix,
    ForecastSpec, SweepConfig,
};

fn june_10() -> ForecastSpec {
    ForecastSpec::new(2020, 9, NaiveDate::from_ymd_opt(2020, 6, 10).unwrap())
}

fn benches(c: &mut Criterion) {
    let series = fixture_series();

    let model = fit_model(&series, &june_10()).unwrap();
    let rows: Vec<Vec<f64>> = (0..model.fit.n)
        .map(|i| model.fit.design().row(i).to_vec())
        .collect();
    let design = DesignMatrix::from_rows(&rows).unwrap();
    let y: Vec<f64> = model
        .fit
        .fitted()
        .iter()
        .zip(&model.fit.residuals)
        .map(|(f, e)| f + e)
        .collect();
    c.bench_function("ols_fit_41x5", |b| {
        b.iter(|| ols_fit(black_box(&design), black_box(&y)))
    });

    c.bench_function("forecast_jun10", |b| {
        b.iter(|| forecast(black_box(&series), &june_10()))
    });

    let cfg = SweepConfig::default();
    c.bench_function("sweep_121_offsets", |b| {
        b.iter(|| sweep(black_box(&series), 2020, 9, &cfg))
    });

    let mut group = c.benchmark_group("bootstrap_10000");
    for (name, mode) in [
        ("shift", BootstrapMode::ShiftOnly),
        ("refit", BootstrapMode::Refit),
    ] {
        let cfg = BootstrapConfig {
            draws: 10_000,
            seed: 1,
            mode,
        };
        group.bench_function(name, |b| {
            b.iter(|| bootstrap_model(black_box(&model), &cfg))
        });
    }
    group.finish();
}

criterion_group!(forecast_benches, benches);
criterion_main!(forecast_benches);
