//! Writes a synthetic daily extent file in the Sea Ice Index layout.
//!
//! cargo run -p seaice-core --example write_synthetic -- synthetic_daily.csv

use seaice_core::synthetic::{synthetic_index_csv, SyntheticConfig};

fn main() -> std::io::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "synthetic_daily.csv".into());
    std::fs::write(&path, synthetic_index_csv(&SyntheticConfig::default()))?;
    println!("wrote {path}");
    Ok(())
}
