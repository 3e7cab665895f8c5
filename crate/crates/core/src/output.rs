//! CSV and JSON-lines emitters for result tables.

use std::io::Write;

use serde::Serialize;

use crate::dynamics::G2Point;
use crate::eigenstructure::LadderRow;
use crate::error::Result;
use crate::sweep::SweepRecord;

/// Significant digits written for floating-point cells.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// A row type with a fixed CSV column layout.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

/// `x` with [`SIGNIFICANT_DIGITS`] significant digits; empty for NaN.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

impl CsvRow for SweepRecord {
    const HEADER: &'static [&'static str] = &[
        "delta_p",
        "omega_L",
        "delta_L",
        "n_cav",
        "g2_zero",
        "log10_g2_zero",
        "pop_g",
        "pop_e",
        "pop_m",
        "converged",
    ];

    fn cells(&self) -> Vec<String> {
        vec![
            format_float(self.delta_p),
            format_float(self.omega_l),
            format_float(self.delta_l),
            format_float(self.n_cav),
            opt(self.g2_zero),
            opt(self.log10_g2_zero),
            format_float(self.pop_g),
            format_float(self.pop_e),
            format_float(self.pop_m),
            self.converged.to_string(),
        ]
    }
}

impl CsvRow for LadderRow {
    const HEADER: &'static [&'static str] =
        &["omega_L", "n", "lambda_minus", "lambda_zero", "lambda_plus"];

    fn cells(&self) -> Vec<String> {
        vec![
            format_float(self.omega_l),
            self.n.to_string(),
            format_float(self.lambda_minus),
            format_float(self.lambda_zero),
            format_float(self.lambda_plus),
        ]
    }
}

impl CsvRow for G2Point {
    const HEADER: &'static [&'static str] = &["tau", "g2_tau"];

    fn cells(&self) -> Vec<String> {
        vec![format_float(self.tau), format_float(self.g2_tau)]
    }
}

pub fn write_csv<T: CsvRow, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(T::HEADER)?;
    for row in rows {
        w.write_record(row.cells())?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line; NaN becomes `null`.
pub fn write_jsonl<T: Serialize, W: Write>(rows: &[T], mut out: W) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
