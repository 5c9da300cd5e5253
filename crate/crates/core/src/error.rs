use chrono::NaiveDate;
use thiserror::Error;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SieError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate date {date}")]
    DuplicateDate { line: usize, date: NaiveDate },

    #[error("line {line}: invalid calendar date {year}-{month}-{day}")]
    InvalidDate {
        line: usize,
        year: i32,
        month: u32,
        day: u32,
    },

    #[error("records are not sorted by date at {date}")]
    Unsorted { date: NaiveDate },

    #[error("gap of {days} days from {from} to {to} exceeds max_gap_days={max_gap_days}")]
    UnfillableGap {
        from: NaiveDate,
        to: NaiveDate,
        days: i64,
        max_gap_days: i64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{what} is not covered by the series ({first}..={last})")]
    Coverage {
        what: String,
        first: NaiveDate,
        last: NaiveDate,
    },

    #[error("incomplete month {year}-{month:02} (series covers {first}..={last})")]
    IncompleteMonth {
        year: i32,
        month: u32,
        first: NaiveDate,
        last: NaiveDate,
    },

    #[error("training year {year}: {source}")]
    Year {
        year: i32,
        #[source]
        source: Box<SieError>,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("collinear design: dependent column(s) {}", .columns.join(", "))]
    Collinear { columns: Vec<String> },

    #[error("degenerate predictive density: sigma is zero, use the point forecast mu={mu}")]
    DegenerateDensity { mu: f64 },

    #[error("skill score undefined: benchmark MSE is zero")]
    UndefinedSkill,

    #[error("io error: {0}")]
    Io(String),
}

impl SieError {
    pub(crate) fn in_year(self, year: i32) -> Self {
        match self {
            e @ SieError::Year { .. } => e,
            e => SieError::Year {
                year,
                source: Box::new(e),
            },
        }
    }
}

impl From<std::io::Error> for SieError {
    fn from(e: std::io::Error) -> Self {
        SieError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SieError>;
