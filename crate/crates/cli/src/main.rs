use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use seaice_core::evaluation::{backtest_with, Forecaster};
use seaice_core::report::{
    density_grid, density_overlay_svg, fan_chart_svg, sweep_rows, write_backtest_csv,
    write_density_grid_csv, write_fit_csv, write_forecast_csv, write_skill_csv, ForecastCsvRow,
};
use seaice_core::{
    fit_model, forecast, load_any, month_average, skill_score, sweep, validate_series,
    BacktestTemplate, BenchmarkKind, BootstrapConfig, BootstrapMode, DailySeries, ForecastSpec,
    ImputationPolicy, OffsetBasis, SweepConfig, Variant,
};

/// Marks errors that should exit with the usage status.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(
    name = "seaice",
    version,
    about = "Fixed-target forecasts of monthly Arctic sea ice extent"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Daily extent file (Sea Ice Index layout) or a canonical series CSV.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Data availability lag in days.
    #[arg(long, global = true, default_value_t = ForecastSpec::DEFAULT_LAG_DAYS)]
    lag: u32,
    /// Recent-window covariate (defaults: month-to-date for forecast and
    /// backtest, trailing30 for sweep).
    #[arg(long, global = true)]
    variant: Option<VariantArg>,
    /// Bootstrap seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of bootstrap draws; 0 disables the bootstrap.
    #[arg(long, global = true, default_value_t = 0)]
    bootstrap_draws: usize,
    /// Longest run of missing days that may be interpolated.
    #[arg(long, global = true, default_value_t = 45)]
    max_gap_days: i64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum VariantArg {
    MonthToDate,
    Trailing30,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::MonthToDate => Variant::MonthToDate,
            VariantArg::Trailing30 => Variant::Trailing30,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Shift,
    Refit,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BasisArg {
    Forecast,
    Effective,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, impute and validate the daily file; write the canonical series.
    Ingest {
        /// Output path (default: <out-dir>/series.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forecast one target month from one or more dates.
    Forecast {
        #[arg(long)]
        year: i32,
        #[arg(long, default_value_t = 9)]
        month: u32,
        /// Single forecast date, MM-DD.
        #[arg(long, conflicts_with = "dates")]
        date: Option<String>,
        /// Comma separated forecast dates, MM-DD.
        #[arg(long, value_delimiter = ',')]
        dates: Vec<String>,
        #[arg(long, default_value_t = ForecastSpec::DEFAULT_FIRST_TRAINING_YEAR)]
        first_training_year: i32,
        #[arg(long, value_enum, default_value_t = ModeArg::Shift)]
        bootstrap_mode: ModeArg,
    },
    /// Re-estimate the model for every day before the end of the target month.
    Sweep {
        #[arg(long)]
        year: i32,
        #[arg(long, default_value_t = 9)]
        month: u32,
        #[arg(long, default_value_t = -120, allow_hyphen_values = true)]
        from: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        to: i64,
        #[arg(long, value_enum, default_value_t = BasisArg::Forecast)]
        offset_basis: BasisArg,
        #[arg(long, default_value_t = ForecastSpec::DEFAULT_FIRST_TRAINING_YEAR)]
        first_training_year: i32,
    },
    /// Forecast past years from a fixed calendar date and score against benchmarks.
    Backtest {
        #[arg(long)]
        from_year: i32,
        #[arg(long)]
        to_year: i32,
        /// Forecast date, MM-DD.
        #[arg(long)]
        date: String,
        #[arg(long, default_value_t = 9)]
        month: u32,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "climatology,trend-only,persistence"
        )]
        benchmarks: Vec<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    let input = g
        .input
        .as_ref()
        .ok_or_else(|| usage("--input <PATH> is required"))?;
    let policy = ImputationPolicy {
        max_gap_days: g.max_gap_days,
        ..ImputationPolicy::default()
    };
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let series = load_any(&text, &policy)?;

    match &cli.command {
        Command::Ingest { out } => cmd_ingest(g, &series, out.as_deref()),
        Command::Forecast {
            year,
            month,
            date,
            dates,
            first_training_year,
            bootstrap_mode,
        } => {
            let mut all: Vec<String> = date.iter().cloned().collect();
            all.extend(dates.iter().cloned());
            if all.is_empty() {
                return Err(usage("one of --date or --dates is required"));
            }
            let specs = all
                .iter()
                .map(|s| {
                    let date = month_day(s, *year, *month)?;
                    Ok(ForecastSpec::new(*year, *month, date)
                        .with_variant(g.variant.map_or(Variant::MonthToDate, Variant::from))
                        .with_lag(g.lag)
                        .with_first_training_year(*first_training_year))
                })
                .collect::<Result<Vec<_>>>()?;
            for spec in &specs {
                spec.validate().map_err(|e| usage(e.to_string()))?;
            }
            cmd_forecast(g, &series, &specs, *bootstrap_mode)
        }
        Command::Sweep {
            year,
            month,
            from,
            to,
            offset_basis,
            first_training_year,
        } => {
            if from > to {
                return Err(usage(format!("empty offset range {from}..={to}")));
            }
            if *to > 0 {
                return Err(usage("offsets must be <= 0"));
            }
            let cfg = SweepConfig {
                offsets: *from..=*to,
                variant: g.variant.map_or(Variant::Trailing30, Variant::from),
                lag_days: g.lag,
                first_training_year: *first_training_year,
                basis: match offset_basis {
                    BasisArg::Forecast => OffsetBasis::ForecastDate,
                    BasisArg::Effective => OffsetBasis::EffectiveDate,
                },
            };
            cmd_sweep(g, &series, *year, *month, &cfg)
        }
        Command::Backtest {
            from_year,
            to_year,
            date,
            month,
            benchmarks,
        } => {
            let (m, d) = parse_month_day(date)?;
            let template = BacktestTemplate::new(m, d)
                .with_target_month(*month)
                .with_variant(g.variant.map_or(Variant::MonthToDate, Variant::from))
                .with_lag(g.lag);
            let kinds = benchmarks
                .iter()
                .map(|b| b.parse::<BenchmarkKind>().map_err(|e| usage(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            cmd_backtest(g, &series, *from_year..=*to_year, &template, &kinds)
        }
    }
}

fn parse_month_day(s: &str) -> Result<(u32, u32)> {
    let bad = || usage(format!("invalid date {s:?}; expected MM-DD"));
    let (m, d) = s.trim().split_once('-').ok_or_else(bad)?;
    let m: u32 = m.parse().map_err(|_| bad())?;
    let d: u32 = d.parse().map_err(|_| bad())?;
    // 2000 is a leap year, so Feb 29 passes here and is checked per target year.
    NaiveDate::from_ymd_opt(2000, m, d).ok_or_else(bad)?;
    Ok((m, d))
}

/// `MM-DD` in the target year, or the year before when the month follows the target month.
fn month_day(s: &str, target_year: i32, target_month: u32) -> Result<NaiveDate> {
    let (m, d) = parse_month_day(s)?;
    let year = if m > target_month {
        target_year - 1
    } else {
        target_year
    };
    NaiveDate::from_ymd_opt(year, m, d)
        .ok_or_else(|| usage(format!("invalid date {s:?} in {year}")))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn cmd_ingest(g: &Global, series: &DailySeries, out: Option<&Path>) -> Result<ExitCode> {
    let report = validate_series(series);
    print!("{report}");
    let path = match out {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, series.to_canonical_csv())
                .with_context(|| format!("writing {}", p.display()))?;
            p.to_path_buf()
        }
        None => write(&g.out_dir, "series.csv", &series.to_canonical_csv())?,
    };
    println!("wrote {}", path.display());
    if !report.is_valid() {
        bail!("series failed validation");
    }
    Ok(ExitCode::SUCCESS)
}

fn realized(series: &DailySeries, spec: &ForecastSpec) -> Option<f64> {
    month_average(series, spec.target_year, spec.target_month).ok()
}

fn cmd_forecast(
    g: &Global,
    series: &DailySeries,
    specs: &[ForecastSpec],
    mode: ModeArg,
) -> Result<ExitCode> {
    let mut rows = Vec::new();
    let mut dists = Vec::new();
    println!("forecast_date  mu        sigma     lo        hi        r2_adj");
    for spec in specs {
        let model = fit_model(series, spec)
            .with_context(|| format!("forecast from {}", spec.forecast_date))?;
        let dist = model.distribution();
        println!(
            "{}     {:.6}  {:.6}  {:.6}  {:.6}  {:.4}",
            spec.forecast_date,
            dist.mu,
            dist.sigma,
            dist.interval_lo,
            dist.interval_hi,
            dist.fit.r2_adj
        );
        rows.push(ForecastCsvRow::from_distribution(
            &dist,
            realized(series, spec),
        ));
        if g.bootstrap_draws > 0 {
            let cfg = BootstrapConfig {
                draws: g.bootstrap_draws,
                seed: g.seed,
                mode: match mode {
                    ModeArg::Shift => BootstrapMode::ShiftOnly,
                    ModeArg::Refit => BootstrapMode::Refit,
                },
            };
            let boot = seaice_core::bootstrap::bootstrap_model(&model, &cfg)?;
            let (lo, hi) = seaice_core::quantile_interval(&boot, 0.95)?;
            println!("  bootstrap 95% interval: [{lo:.6}, {hi:.6}]");
            let name = if specs.len() == 1 {
                "bootstrap_draws.csv".to_string()
            } else {
                format!("bootstrap_draws_{}.csv", spec.forecast_date.format("%m-%d"))
            };
            write(&g.out_dir, &name, &boot.to_csv())?;
        }
        dists.push(dist);
    }
    write(&g.out_dir, "forecast.csv", &write_forecast_csv(&rows))?;
    write(&g.out_dir, "forecast_fit.csv", &write_fit_csv(&dists))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    g: &Global,
    series: &DailySeries,
    year: i32,
    month: u32,
    cfg: &SweepConfig,
) -> Result<ExitCode> {
    let result = sweep(series, year, month, cfg)?;
    write(
        &g.out_dir,
        "sweep.csv",
        &write_forecast_csv(&sweep_rows(&result)),
    )?;
    write(
        &g.out_dir,
        "density_grid.csv",
        &write_density_grid_csv(&density_grid(&result, 201, 4.0)),
    )?;
    write(&g.out_dir, "fan_chart.svg", &fan_chart_svg(&result))?;

    // Monthly models on the 10th of the target month and the three before it.
    let monthly: Vec<_> = (0..4)
        .rev()
        .filter_map(|back| {
            let (mut y, mut m) = (year, month as i32 - back);
            if m < 1 {
                m += 12;
                y -= 1;
            }
            let date = NaiveDate::from_ymd_opt(y, m as u32, 10)?;
            let spec = ForecastSpec::new(year, month, date)
                .with_lag(cfg.lag_days)
                .with_first_training_year(cfg.first_training_year);
            forecast(series, &spec).ok()
        })
        .collect();
    write(
        &g.out_dir,
        "densities_monthly.svg",
        &density_overlay_svg(
            &monthly,
            result.realized,
            &format!("Monthly predictive densities for {year}-{month:02}"),
        ),
    )?;

    let failures: Vec<String> = result
        .entries
        .iter()
        .filter_map(|e| {
            e.outcome
                .as_ref()
                .err()
                .map(|err| format!("offset {}: {err}", e.offset))
        })
        .collect();
    if !failures.is_empty() {
        write(
            &g.out_dir,
            "sweep_failures.txt",
            &(failures.join("\n") + "\n"),
        )?;
    }
    let ok = result.successes().count();
    println!(
        "sweep {year}-{month:02}: {ok}/{} offsets estimated, realized {}",
        result.entries.len(),
        result
            .realized
            .map_or("unknown".into(), |r| format!("{r:.6}"))
    );
    if result.success_fraction() >= 0.9 {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: fewer than 90% of offsets succeeded; see sweep_failures.txt");
        Ok(ExitCode::from(1))
    }
}

fn cmd_backtest(
    g: &Global,
    series: &DailySeries,
    years: std::ops::RangeInclusive<i32>,
    template: &BacktestTemplate,
    kinds: &[BenchmarkKind],
) -> Result<ExitCode> {
    let model_rows = backtest_with(series, years.clone(), template, Forecaster::Regression);
    if model_rows.is_empty() {
        bail!(
            "no backtestable years in {}..={}",
            years.start(),
            years.end()
        );
    }
    write(&g.out_dir, "backtest.csv", &write_backtest_csv(&model_rows))?;
    let hits = model_rows.iter().filter(|r| r.interval_hit).count();
    println!("{} years, {hits} inside mu ± 2 sigma", model_rows.len());

    let mut reports = Vec::new();
    for kind in kinds {
        let bench_rows = backtest_with(
            series,
            years.clone(),
            template,
            Forecaster::Benchmark(*kind),
        );
        write(
            &g.out_dir,
            &format!("backtest_{}.csv", kind.name()),
            &write_backtest_csv(&bench_rows),
        )?;
        // Compare on the years both could forecast.
        let common: Vec<_> = model_rows
            .iter()
            .filter(|r| bench_rows.iter().any(|b| b.target_year == r.target_year))
            .cloned()
            .collect();
        let report = skill_score(&common, &bench_rows, kind.name())?;
        println!(
            "skill vs {}: {:.4} (MSE {:.6} vs {:.6})",
            report.benchmark_name, report.skill, report.model_mse, report.benchmark_mse
        );
        reports.push(report);
    }
    write(&g.out_dir, "skill.csv", &write_skill_csv(&reports))?;
    Ok(ExitCode::SUCCESS)
}
