//! Reading the Sea Ice Index daily extent file and turning it into a
//! gap-free [`DailySeries`].
//!
//! The public daily file is a comma separated table with a header row
//! (`Year, Month, Day, Extent, Missing, Source Data`), usually followed by a
//! units row, and whitespace-padded fields. Until August 1986 only every other
//! day is reported; a multi-week outage spans December 1987 to January 1988.
//! Single missing days are filled with the mean of the two neighbours and
//! longer holes by linear interpolation, up to [`ImputationPolicy::max_gap_days`].

use std::fmt::Write as _;

use chrono::{Datelike, Days, NaiveDate};
use sha2::{Digest, Sha256};

use crate::error::{Result, SieError};

/// Plausible bounds for Northern Hemisphere extent, million km².
pub const EXTENT_MIN: f64 = 0.0;
pub const EXTENT_MAX: f64 = 20.0;

/// `source_tag` carried by records that were produced by imputation.
pub const IMPUTED_TAG: &str = "imputed";

/// Canonical storage resolution: six decimal places.
const CANONICAL_SCALE: f64 = 1e6;

pub(crate) fn quantize(v: f64) -> f64 {
    (v * CANONICAL_SCALE).round() / CANONICAL_SCALE
}

/// One data row of the daily extent file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub date: NaiveDate,
    /// Million km²; `None` for blank or negative sentinel values.
    pub extent: Option<f64>,
    /// Million km² of missing coverage as reported by the file.
    pub missing: f64,
    pub source_tag: String,
}

/// Parse the daily extent CSV.
///
/// Leading header rows (`Year, ...` and the `YYYY, ...` units row) and blank
/// lines are skipped. Everything after the fifth comma is the free-text source
/// column, which may itself contain commas.
pub fn parse_sea_ice_index(text: &str) -> Result<Vec<RawRecord>> {
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut in_header = true;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if in_header {
            let first = trimmed.split(',').next().unwrap_or("").trim();
            if first.eq_ignore_ascii_case("year") || first.eq_ignore_ascii_case("yyyy") {
                continue;
            }
            in_header = false;
        }

        let fields: Vec<&str> = trimmed.splitn(6, ',').map(str::trim).collect();
        if fields.len() < 4 {
            return Err(SieError::Parse {
                line: line_no,
                message: format!("expected at least 4 fields, found {}", fields.len()),
            });
        }
        let year: i32 = parse_field(fields[0], "Year", line_no)?;
        let month: u32 = parse_field(fields[1], "Month", line_no)?;
        let day: u32 = parse_field(fields[2], "Day", line_no)?;
        let date = NaiveDate::from_ymd_opt(year, month, day).ok_or(SieError::InvalidDate {
            line: line_no,
            year,
            month,
            day,
        })?;

        let extent = match fields[3] {
            "" => None,
            s => {
                let v: f64 = parse_field(s, "Extent", line_no)?;
                if v < 0.0 {
                    None
                } else if !v.is_finite() || v > EXTENT_MAX {
                    return Err(SieError::Parse {
                        line: line_no,
                        message: format!("extent {v} outside [{EXTENT_MIN}, {EXTENT_MAX}]"),
                    });
                } else {
                    Some(v)
                }
            }
        };
        let missing = match fields.get(4).copied() {
            None | Some("") => 0.0,
            Some(s) => parse_field(s, "Missing", line_no)?,
        };
        let source_tag = fields.get(5).map(|s| s.to_string()).unwrap_or_default();

        if !seen.insert(date) {
            return Err(SieError::DuplicateDate {
                line: line_no,
                date,
            });
        }
        records.push(RawRecord {
            date,
            extent,
            missing,
            source_tag,
        });
    }
    Ok(records)
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| SieError::Parse {
        line,
        message: format!("malformed {name} field {s:?}"),
    })
}

/// How holes in the observed record are filled.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationPolicy {
    /// Longest run of consecutive missing days that may be interpolated.
    pub max_gap_days: i64,
    /// Records dated before this are dropped. `None` keeps everything.
    pub first_date: Option<NaiveDate>,
}

impl Default for ImputationPolicy {
    fn default() -> Self {
        Self {
            max_gap_days: 45,
            first_date: NaiveDate::from_ymd_opt(1979, 1, 1),
        }
    }
}

impl ImputationPolicy {
    pub fn id(&self) -> String {
        match self.first_date {
            Some(d) => format!(
                "adjacent-mean+linear;max_gap={};from={d}",
                self.max_gap_days
            ),
            None => format!("adjacent-mean+linear;max_gap={}", self.max_gap_days),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    /// SHA-256 of the source text, hex encoded.
    pub source_sha256: String,
    pub policy_id: String,
}

impl Provenance {
    pub fn for_text(text: &str, policy: &ImputationPolicy) -> Self {
        Self {
            source_sha256: hex::encode(Sha256::digest(text.as_bytes())),
            policy_id: policy.id(),
        }
    }
}

/// Gap-free daily extent series, one value per calendar day.
///
/// Values are held at six decimal places, the resolution of the canonical
/// CSV, so that writing and re-reading a series is lossless.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    start_date: NaiveDate,
    values: Vec<f64>,
    imputed: Vec<bool>,
    provenance: Provenance,
}

impl DailySeries {
    /// Assemble a series from parts. Values are quantized to the canonical
    /// resolution; they are not range checked (see [`validate_series`]).
    pub fn new(
        start_date: NaiveDate,
        values: Vec<f64>,
        imputed: Vec<bool>,
        provenance: Provenance,
    ) -> Result<Self> {
        if values.len() != imputed.len() {
            return Err(SieError::Argument(format!(
                "{} values but {} imputed flags",
                values.len(),
                imputed.len()
            )));
        }
        Ok(Self {
            start_date,
            values: values.into_iter().map(quantize).collect(),
            imputed,
            provenance,
        })
    }

    /// Series with every day observed; handy for synthetic inputs.
    pub fn from_values(start_date: NaiveDate, values: Vec<f64>) -> Self {
        let n = values.len();
        Self::new(start_date, values, vec![false; n], Provenance::default()).expect("lengths match")
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    /// Last covered day. For an empty series this is the day before `start_date`.
    pub fn end_date(&self) -> NaiveDate {
        if self.values.is_empty() {
            self.start_date.pred_opt().unwrap_or(self.start_date)
        } else {
            self.start_date + Days::new(self.values.len() as u64 - 1)
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn imputed_mask(&self) -> &[bool] {
        &self.imputed
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        !self.values.is_empty() && date >= self.start_date && date <= self.end_date()
    }

    fn index_of(&self, date: NaiveDate) -> Option<usize> {
        if self.contains(date) {
            Some((date - self.start_date).num_days() as usize)
        } else {
            None
        }
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.index_of(date).map(|i| self.values[i])
    }

    pub fn is_imputed(&self, date: NaiveDate) -> Option<bool> {
        self.index_of(date).map(|i| self.imputed[i])
    }

    /// Values for `first..=last`, or `None` if any day is outside the series.
    pub fn slice(&self, first: NaiveDate, last: NaiveDate) -> Option<&[f64]> {
        if first > last {
            return None;
        }
        let a = self.index_of(first)?;
        let b = self.index_of(last)?;
        Some(&self.values[a..=b])
    }

    /// Copy of the series ending at `last` (inclusive). Later days are dropped.
    pub fn truncated(&self, last: NaiveDate) -> DailySeries {
        let keep = if last < self.start_date {
            0
        } else {
            ((last - self.start_date).num_days() as usize + 1).min(self.values.len())
        };
        DailySeries {
            start_date: self.start_date,
            values: self.values[..keep].to_vec(),
            imputed: self.imputed[..keep].to_vec(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64, bool)> + '_ {
        self.values
            .iter()
            .zip(&self.imputed)
            .enumerate()
            .map(move |(i, (&v, &m))| (self.start_date + Days::new(i as u64), v, m))
    }

    /// Records view of the series; imputed days carry [`IMPUTED_TAG`].
    pub fn to_records(&self) -> Vec<RawRecord> {
        self.iter()
            .map(|(date, v, imputed)| RawRecord {
                date,
                extent: Some(v),
                missing: 0.0,
                source_tag: if imputed {
                    IMPUTED_TAG.to_string()
                } else {
                    String::new()
                },
            })
            .collect()
    }

    /// Canonical CSV: `date,extent,imputed`, preceded by `#` provenance lines.
    pub fn to_canonical_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24 + 128);
        let _ = writeln!(out, "# source_sha256={}", self.provenance.source_sha256);
        let _ = writeln!(out, "# policy={}", self.provenance.policy_id);
        out.push_str("date,extent,imputed\n");
        for (date, v, imputed) in self.iter() {
            let _ = writeln!(
                out,
                "{},{:.6},{}",
                date.format("%Y-%m-%d"),
                v,
                u8::from(imputed)
            );
        }
        out
    }

    /// Inverse of [`DailySeries::to_canonical_csv`].
    pub fn from_canonical_csv(text: &str) -> Result<DailySeries> {
        let mut provenance = Provenance::default();
        let mut start = None;
        let mut values = Vec::new();
        let mut imputed = Vec::new();
        let mut expected: Option<NaiveDate> = None;

        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(h) = comment.strip_prefix("source_sha256=") {
                    provenance.source_sha256 = h.to_string();
                } else if let Some(p) = comment.strip_prefix("policy=") {
                    provenance.policy_id = p.to_string();
                }
                continue;
            }
            if line.starts_with("date") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(SieError::Parse {
                    line: line_no,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let date =
                NaiveDate::parse_from_str(fields[0], "%Y-%m-%d").map_err(|_| SieError::Parse {
                    line: line_no,
                    message: format!("malformed date {:?}", fields[0]),
                })?;
            if let Some(exp) = expected {
                if date != exp {
                    return Err(SieError::Parse {
                        line: line_no,
                        message: format!("expected {exp}, found {date}"),
                    });
                }
            } else {
                start = Some(date);
            }
            values.push(parse_field::<f64>(fields[1], "extent", line_no)?);
            imputed.push(match fields[2] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(SieError::Parse {
                        line: line_no,
                        message: format!("imputed flag must be 0 or 1, found {other:?}"),
                    })
                }
            });
            expected = date.succ_opt();
        }
        let start = start.ok_or_else(|| SieError::InsufficientData("no rows".into()))?;
        DailySeries::new(start, values, imputed, provenance)
    }
}

/// Fill gaps between observed days.
///
/// The series runs from the first to the last observed day on or after
/// `policy.first_date`. A hole of `g` days between observations `a` and `b`
/// is filled with `a + (b - a) * i / (g + 1)`; for `g = 1` that is the mean
/// of the two adjacent days.
pub fn impute_missing(records: &[RawRecord], policy: &ImputationPolicy) -> Result<DailySeries> {
    impute_with_provenance(
        records,
        policy,
        Provenance {
            source_sha256: String::new(),
            policy_id: policy.id(),
        },
    )
}

pub(crate) fn impute_with_provenance(
    records: &[RawRecord],
    policy: &ImputationPolicy,
    provenance: Provenance,
) -> Result<DailySeries> {
    if policy.max_gap_days < 0 {
        return Err(SieError::Argument("max_gap_days must be >= 0".into()));
    }
    for pair in records.windows(2) {
        if pair[1].date <= pair[0].date {
            return Err(SieError::Unsorted { date: pair[1].date });
        }
    }

    let mut observed: Vec<(NaiveDate, f64, bool)> = records
        .iter()
        .filter_map(|r| r.extent.map(|v| (r.date, v, r.source_tag == IMPUTED_TAG)))
        .collect();
    // Keep one observation before the cutoff so the first days after it can
    // be interpolated; it is trimmed again below.
    if let Some(cutoff) = policy.first_date {
        let first_kept = observed.partition_point(|o| o.0 < cutoff);
        observed.drain(..first_kept.saturating_sub(1));
        if observed.len() == 1 && observed[0].0 < cutoff {
            observed.clear();
        }
    }
    if observed.len() < 2 {
        return Err(SieError::InsufficientData(format!(
            "{} observed day(s); at least two are required",
            observed.len()
        )));
    }

    let start = observed[0].0;
    let mut values = vec![observed[0].1];
    let mut mask = vec![observed[0].2];
    for pair in observed.windows(2) {
        let (a_date, a, _) = pair[0];
        let (b_date, b, b_imputed) = pair[1];
        let gap = (b_date - a_date).num_days() - 1;
        if gap > policy.max_gap_days {
            return Err(SieError::UnfillableGap {
                from: a_date.succ_opt().unwrap_or(a_date),
                to: b_date.pred_opt().unwrap_or(b_date),
                days: gap,
                max_gap_days: policy.max_gap_days,
            });
        }
        let span = (gap + 1) as f64;
        for i in 1..=gap {
            values.push(quantize(a + (b - a) * i as f64 / span));
            mask.push(true);
        }
        values.push(b);
        mask.push(b_imputed);
    }
    let mut series = DailySeries::new(start, values, mask, provenance)?;
    if let Some(cutoff) = policy.first_date.filter(|c| *c > start) {
        let skip = ((cutoff - start).num_days() as usize).min(series.values.len());
        series.values.drain(..skip);
        series.imputed.drain(..skip);
        series.start_date = cutoff;
        if series.values.len() < 2 {
            return Err(SieError::InsufficientData(format!(
                "fewer than two days on or after {cutoff}"
            )));
        }
    }
    Ok(series)
}

/// Parse a daily extent file and impute it in one step, recording the file hash.
pub fn load_sea_ice_index(text: &str, policy: &ImputationPolicy) -> Result<DailySeries> {
    let records = parse_sea_ice_index(text)?;
    impute_with_provenance(&records, policy, Provenance::for_text(text, policy))
}

/// Read either a raw daily extent file or a canonical series file.
pub fn load_any(text: &str, policy: &ImputationPolicy) -> Result<DailySeries> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    match first {
        Some(l) if l.starts_with("date") => DailySeries::from_canonical_csv(text),
        _ => load_sea_ice_index(text, policy),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

/// Summary of a series' coverage and any values outside the plausible range.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub days: usize,
    pub imputed_days: usize,
    pub longest_imputed_run: usize,
    pub min_extent: Option<f64>,
    pub max_extent: Option<f64>,
    pub range_violations: Vec<(NaiveDate, f64)>,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        !self.findings.iter().any(|f| f.severity == Severity::Error)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.first_date, self.last_date) {
            (Some(a), Some(b)) => writeln!(f, "coverage: {a} .. {b} ({} days)", self.days)?,
            _ => writeln!(f, "coverage: none")?,
        }
        writeln!(
            f,
            "imputed days: {} (longest run {})",
            self.imputed_days, self.longest_imputed_run
        )?;
        if let (Some(lo), Some(hi)) = (self.min_extent, self.max_extent) {
            writeln!(f, "extent range: {lo:.3} .. {hi:.3}")?;
        }
        writeln!(f, "range violations: {}", self.range_violations.len())?;
        for finding in &self.findings {
            let level = match finding.severity {
                Severity::Warning => "warning",
                Severity::Error => "error",
            };
            writeln!(f, "{level}: {}", finding.message)?;
        }
        Ok(())
    }
}

pub fn validate_series(series: &DailySeries) -> ValidationReport {
    let mut report = ValidationReport {
        first_date: None,
        last_date: None,
        days: series.len(),
        imputed_days: 0,
        longest_imputed_run: 0,
        min_extent: None,
        max_extent: None,
        range_violations: Vec::new(),
        findings: Vec::new(),
    };
    if series.is_empty() {
        report.findings.push(Finding {
            severity: Severity::Error,
            message: "no observations".into(),
        });
        return report;
    }
    report.first_date = Some(series.start_date());
    report.last_date = Some(series.end_date());

    let mut run = 0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (date, v, imputed) in series.iter() {
        if imputed {
            report.imputed_days += 1;
            run += 1;
            report.longest_imputed_run = report.longest_imputed_run.max(run);
        } else {
            run = 0;
        }
        if !(EXTENT_MIN..=EXTENT_MAX).contains(&v) {
            report.range_violations.push((date, v));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    report.min_extent = Some(lo);
    report.max_extent = Some(hi);

    if !report.range_violations.is_empty() {
        report.findings.push(Finding {
            severity: Severity::Error,
            message: format!(
                "{} value(s) outside [{EXTENT_MIN}, {EXTENT_MAX}], first at {}",
                report.range_violations.len(),
                report.range_violations[0].0
            ),
        });
    }
    let first = series.start_date();
    if first.month() != 1 || first.day() != 1 {
        report.findings.push(Finding {
            severity: Severity::Warning,
            message: format!("series starts mid-year on {first}"),
        });
    }
    report
}
