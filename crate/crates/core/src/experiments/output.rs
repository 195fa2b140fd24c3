//! CSV helpers shared by the subcommands.

use crate::error::{Error, Result};
use std::io::Write;

/// Significant digits written for every real-valued CSV field.
pub const SIGNIFICANT_DIGITS: usize = 10;

/// Formats `x` with [`SIGNIFICANT_DIGITS`] significant digits: positional
/// notation for moderate magnitudes, scientific otherwise.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..10).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
    }
}

/// Writes a header and rows of string fields as CSV.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Config(format!("writing CSV: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Config(format!("writing CSV: {e}")))
}
