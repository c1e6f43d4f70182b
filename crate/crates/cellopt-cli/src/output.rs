//! CSV and CDF emission. Everything here is deliberately plain: no quoting
//! (no cell ever contains a comma), shortest-round-trip float formatting,
//! and `\n` line endings, so that two runs with the same seed produce
//! byte-identical files.

use std::fs;
use std::io;
use std::path::Path;

use cellopt::multicell::McStatus;
use cellopt::singlecell::ScStatus;

use crate::CliError;

/// Stable status labels shared by the CSV records and the JSON output.
pub fn sc_status_label(status: ScStatus) -> &'static str {
    match status {
        ScStatus::Feasible => "feasible",
        ScStatus::InfeasibleSinr => "infeasible_sinr",
        ScStatus::InfeasiblePower => "infeasible_power",
    }
}

pub fn mc_status_label(status: McStatus) -> &'static str {
    match status {
        McStatus::Feasible => "feasible",
        McStatus::InfeasibleCoherent => "infeasible_coherent",
        McStatus::InfeasibleSinr => "infeasible_sinr",
        McStatus::InfeasiblePower => "infeasible_power",
    }
}

/// Shortest decimal string that parses back to exactly `v`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Empty cell for a missing value, e.g. power on an infeasible trial.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Per-cell integer vectors are packed into one cell, `;`-separated, so the
/// column count stays fixed no matter how many cells the scenario has.
pub fn fmt_u32s(values: &[u32]) -> String {
    let strs: Vec<String> = values.iter().map(u32::to_string).collect();
    strs.join(";")
}

pub fn fmt_f64s(values: &[f64]) -> String {
    let strs: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
    strs.join(";")
}

/// Write one CSV file with a fixed header. Every row must match the header
/// width; that is a programming error, not a data error, hence the assert.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        assert_eq!(
            row.len(),
            header.len(),
            "CSV row width must match the header"
        );
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text)
}

/// Empirical CDF of a sample set: sorted ascending, the k-th value (1-based)
/// paired with fraction k/n. Duplicates keep one row per sample so the
/// second column always ends at exactly 1.
pub fn emit_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>, CliError> {
    if samples.is_empty() {
        return Err(CliError::Usage(
            "cannot build a CDF from an empty sample set".into(),
        ));
    }
    if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!(
            "CDF samples must be finite, got {bad}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / n))
        .collect())
}
