//! Shared inputs for the criterion benchmarks.

use seaice_core::synthetic::{synthetic_series, SyntheticConfig};
use seaice_core::DailySeries;

/// The default synthetic 1979–2020 record.
pub fn fixture_series() -> DailySeries {
    synthetic_series(&SyntheticConfig::default()).expect("synthetic record imputes cleanly")
}
