//! CSV and SVG outputs: forecast tables, density grids, fan charts.
//!
//! All numbers are written with six decimals. SVGs are assembled from
//! primitive shapes and contain nothing run-dependent, so identical inputs
//! give identical files.

use std::fmt::Write as _;

use chrono::NaiveDate;

use crate::error::{Result, SieError};
use crate::evaluation::{BacktestRow, SkillReport};
use crate::forecast::{density_at, ForecastDistribution, SweepResult};

pub const FORECAST_HEADER: &str = "offset,effective_date,mu,sigma,lo,hi,realized";
pub const BACKTEST_HEADER: &str =
    "target_year,forecast_date,mu,sigma,lo,hi,realized,error,interval_hit";
pub const DENSITY_GRID_HEADER: &str = "offset,extent,density";

/// One line of a forecast or sweep CSV. Numeric fields are blank for failed offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastCsvRow {
    pub offset: i64,
    pub effective_date: Option<NaiveDate>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub realized: Option<f64>,
}

impl ForecastCsvRow {
    pub fn from_distribution(dist: &ForecastDistribution, realized: Option<f64>) -> Self {
        Self {
            offset: dist.spec.offset().unwrap_or_default(),
            effective_date: Some(dist.effective_date),
            mu: Some(dist.mu),
            sigma: Some(dist.sigma),
            lo: Some(dist.interval_lo),
            hi: Some(dist.interval_hi),
            realized,
        }
    }
}

fn opt6(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn sweep_rows(sweep: &SweepResult) -> Vec<ForecastCsvRow> {
    sweep
        .entries
        .iter()
        .map(|e| match &e.outcome {
            Ok(d) => ForecastCsvRow {
                offset: e.offset,
                ..ForecastCsvRow::from_distribution(d, sweep.realized)
            },
            Err(_) => ForecastCsvRow {
                offset: e.offset,
                effective_date: e.effective_date(),
                mu: None,
                sigma: None,
                lo: None,
                hi: None,
                realized: sweep.realized,
            },
        })
        .collect()
}

pub fn write_forecast_csv(rows: &[ForecastCsvRow]) -> String {
    let mut out = String::from(FORECAST_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.offset,
            r.effective_date.map(|d| d.to_string()).unwrap_or_default(),
            opt6(r.mu),
            opt6(r.sigma),
            opt6(r.lo),
            opt6(r.hi),
            opt6(r.realized)
        );
    }
    out
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| SieError::Parse {
        line,
        message: format!("malformed number {s:?}"),
    })
}

pub fn read_forecast_csv(text: &str) -> Result<Vec<ForecastCsvRow>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 7 {
            return Err(SieError::Parse {
                line: line_no,
                message: format!("expected 7 fields, found {}", f.len()),
            });
        }
        let offset = f[0].parse().map_err(|_| SieError::Parse {
            line: line_no,
            message: format!("malformed offset {:?}", f[0]),
        })?;
        let effective_date = if f[1].is_empty() {
            None
        } else {
            Some(
                NaiveDate::parse_from_str(f[1], "%Y-%m-%d").map_err(|_| SieError::Parse {
                    line: line_no,
                    message: format!("malformed date {:?}", f[1]),
                })?,
            )
        };
        rows.push(ForecastCsvRow {
            offset,
            effective_date,
            mu: parse_opt(f[2], line_no)?,
            sigma: parse_opt(f[3], line_no)?,
            lo: parse_opt(f[4], line_no)?,
            hi: parse_opt(f[5], line_no)?,
            realized: parse_opt(f[6], line_no)?,
        });
    }
    Ok(rows)
}

/// Coefficients and fit statistics, one row per forecast.
pub fn write_fit_csv(dists: &[ForecastDistribution]) -> String {
    let mut out = String::new();
    let names = dists
        .first()
        .map(|d| d.fit.names.clone())
        .unwrap_or_default();
    let _ = writeln!(
        out,
        "forecast_date,{}sigma,r2_adj,n,k",
        names.iter().map(|n| format!("{n},")).collect::<String>()
    );
    for d in dists {
        let _ = writeln!(
            out,
            "{},{}{:.6},{:.6},{},{}",
            d.spec.forecast_date,
            d.fit
                .beta
                .iter()
                .map(|b| format!("{b:.6},"))
                .collect::<String>(),
            d.sigma,
            d.fit.r2_adj,
            d.fit.n,
            d.fit.k
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityGridRow {
    pub offset: i64,
    pub extent: f64,
    pub density: f64,
}

/// Gaussian densities on `mu ± half_width·sigma` at `points` evenly spaced
/// extents for every successful entry with positive sigma.
pub fn density_grid(sweep: &SweepResult, points: usize, half_width: f64) -> Vec<DensityGridRow> {
    let mut rows = Vec::new();
    for (offset, dist) in sweep.successes() {
        if dist.sigma <= 0.0 || points < 2 {
            continue;
        }
        let lo = dist.mu - half_width * dist.sigma;
        let step = 2.0 * half_width * dist.sigma / (points - 1) as f64;
        for i in 0..points {
            let x = lo + step * i as f64;
            if let Ok(density) = density_at(dist, x) {
                rows.push(DensityGridRow {
                    offset,
                    extent: x,
                    density,
                });
            }
        }
    }
    rows
}

pub fn write_density_grid_csv(rows: &[DensityGridRow]) -> String {
    let mut out = String::from(DENSITY_GRID_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{:.6},{:.6}", r.offset, r.extent, r.density);
    }
    out
}

pub fn read_density_grid_csv(text: &str) -> Result<Vec<DensityGridRow>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || SieError::Parse {
            line: idx + 1,
            message: format!("malformed density grid row {line:?}"),
        };
        if f.len() != 3 {
            return Err(bad());
        }
        rows.push(DensityGridRow {
            offset: f[0].parse().map_err(|_| bad())?,
            extent: f[1].parse().map_err(|_| bad())?,
            density: f[2].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

/// Trapezoid rule over paired abscissae and ordinates.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

pub fn write_backtest_csv(rows: &[BacktestRow]) -> String {
    let mut out = String::from(BACKTEST_HEADER);
    out.push('\n');
    for r in rows {
        let (lo, hi) = r.interval();
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.target_year,
            r.forecast_date,
            r.mu,
            r.sigma,
            lo,
            hi,
            r.realized,
            r.error,
            u8::from(r.interval_hit)
        );
    }
    out
}

pub fn write_skill_csv(reports: &[SkillReport]) -> String {
    let mut out = String::from("benchmark,n_years,model_mse,benchmark_mse,skill\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            r.benchmark_name, r.n_years, r.model_mse, r.benchmark_mse, r.skill
        );
    }
    out
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;

/// Linear map from data ranges onto the plotting area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, b + 0.5) };
        Self {
            x: pad(x),
            y: pad(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (x0, x1) = (MARGIN, WIDTH - MARGIN);
        let (y0, y1) = (HEIGHT - MARGIN, MARGIN);
        let _ = writeln!(
            out,
            r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="black"/>"#
        );
        for i in 0..=5 {
            let t = i as f64 / 5.0;
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                out,
                r#"<text x="{px:.1}" y="{:.1}" font-size="11" text-anchor="middle">{xv:.1}</text>"#,
                y0 + 16.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{yv:.2}</text>"#,
                x0 - 6.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{x_label}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 15.0
        );
        let _ = writeln!(
            out,
            r#"<text x="15" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 15 {:.1})">{y_label}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0
        );
    }
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, "<!-- seaice {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="30" font-size="15" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    );
}

fn polyline(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Point forecast, ±2σ band and realized value by days to the end of the target month.
pub fn fan_chart_svg(sweep: &SweepResult) -> String {
    let ok: Vec<(i64, &ForecastDistribution)> = sweep.successes().collect();
    let mut out = String::new();
    svg_open(
        &mut out,
        &format!(
            "Predictive intervals for {}-{:02} ({})",
            sweep.target_year, sweep.target_month, sweep.variant
        ),
    );
    if ok.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let xr = (ok[0].0 as f64, ok[ok.len() - 1].0 as f64);
    let mut ylo = ok
        .iter()
        .map(|(_, d)| d.interval_lo)
        .fold(f64::INFINITY, f64::min);
    let mut yhi = ok
        .iter()
        .map(|(_, d)| d.interval_hi)
        .fold(f64::NEG_INFINITY, f64::max);
    if let Some(r) = sweep.realized {
        ylo = ylo.min(r);
        yhi = yhi.max(r);
    }
    let frame = Frame::new(xr, (ylo, yhi));
    frame.axes(
        &mut out,
        "days until end of target month",
        "extent (million km²)",
    );

    let upper: Vec<(f64, f64)> = ok
        .iter()
        .map(|(o, d)| (frame.px(*o as f64), frame.py(d.interval_hi)))
        .collect();
    let lower: Vec<(f64, f64)> = ok
        .iter()
        .rev()
        .map(|(o, d)| (frame.px(*o as f64), frame.py(d.interval_lo)))
        .collect();
    let band: Vec<(f64, f64)> = upper.into_iter().chain(lower).collect();
    let _ = writeln!(
        out,
        r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.6" stroke="none"/>"##,
        polyline(&band)
    );
    let mu: Vec<(f64, f64)> = ok
        .iter()
        .map(|(o, d)| (frame.px(*o as f64), frame.py(d.mu)))
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#2ca02c" stroke-width="2"/>"##,
        polyline(&mu)
    );
    if let Some(r) = sweep.realized {
        let y = frame.py(r);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-width="1.5"/>"#,
            frame.px(xr.0),
            frame.px(xr.1)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Overlay of Gaussian predictive densities, e.g. the four monthly forecasts.
pub fn density_overlay_svg(
    dists: &[ForecastDistribution],
    realized: Option<f64>,
    title: &str,
) -> String {
    const COLORS: [&str; 6] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    ];
    const POINTS: usize = 201;
    let usable: Vec<&ForecastDistribution> = dists.iter().filter(|d| d.sigma > 0.0).collect();
    let mut out = String::new();
    svg_open(&mut out, title);
    if usable.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let mut xlo = usable
        .iter()
        .map(|d| d.mu - 4.0 * d.sigma)
        .fold(f64::INFINITY, f64::min);
    let mut xhi = usable
        .iter()
        .map(|d| d.mu + 4.0 * d.sigma)
        .fold(f64::NEG_INFINITY, f64::max);
    if let Some(r) = realized {
        xlo = xlo.min(r);
        xhi = xhi.max(r);
    }
    let peak = usable
        .iter()
        .filter_map(|d| density_at(d, d.mu).ok())
        .fold(0.0, f64::max);
    let frame = Frame::new((xlo, xhi), (0.0, peak * 1.05));
    frame.axes(&mut out, "extent (million km²)", "density");

    for (i, d) in usable.iter().enumerate() {
        let step = (xhi - xlo) / (POINTS - 1) as f64;
        let pts: Vec<(f64, f64)> = (0..POINTS)
            .map(|j| {
                let x = xlo + step * j as f64;
                (frame.px(x), frame.py(density_at(d, x).unwrap_or(0.0)))
            })
            .collect();
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            polyline(&pts)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 16.0 * i as f64,
            d.spec.forecast_date.format("%b %d")
        );
    }
    if let Some(r) = realized {
        let x = frame.px(r);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
            frame.py(0.0),
            frame.py(peak * 1.05)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_of_line() {
        let xs = [0.0, 0.5, 1.0];
        let ys = [0.0, 1.0, 2.0];
        assert_eq!(trapezoid(&xs, &ys), 1.0);
    }

    #[test]
    fn forecast_csv_round_trip_with_blanks() {
        let rows = vec![
            ForecastCsvRow {
                offset: -3,
                effective_date: NaiveDate::from_ymd_opt(2020, 9, 26),
                mu: Some(3.912345),
                sigma: Some(0.1),
                lo: Some(3.712345),
                hi: Some(4.112345),
                realized: None,
            },
            ForecastCsvRow {
                offset: -2,
                effective_date: None,
                mu: None,
                sigma: None,
                lo: None,
                hi: None,
                realized: Some(3.92),
            },
        ];
        let text = write_forecast_csv(&rows);
        assert!(text.starts_with(FORECAST_HEADER));
        assert_eq!(read_forecast_csv(&text).unwrap(), rows);
    }
}
