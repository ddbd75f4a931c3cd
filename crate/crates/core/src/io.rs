//! CSV emission and the phase-series reader.
//!
//! Every file starts with `# key: value` header lines (schema, command,
//! config hash, seed), followed by one column-name row and data rows.
//! Floats use 17 significant digits so values round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::experiment::{BounceRecord, RunSeries};
use crate::phaseshift::PhaseMeasurement;

/// Version of the column schemas documented in `docs/csv.md`.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("malformed CSV at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Header block written ahead of every table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvHeader {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// Extra `key: value` lines.
    pub extra: Vec<(String, String)>,
}

impl CsvHeader {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        Self { command: command.into(), config_hash: config_hash.into(), seed, extra: Vec::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.into(), value.to_string()));
        self
    }

    fn render(&self, out: &mut String) {
        let _ = writeln!(out, "# schema: wellmirror-csv/{CSV_SCHEMA_VERSION}");
        let _ = writeln!(out, "# command: {}", self.command);
        let _ = writeln!(out, "# config_sha256: {}", self.config_hash);
        let _ = writeln!(out, "# seed: {}", self.seed);
        for (k, v) in &self.extra {
            let _ = writeln!(out, "# {k}: {v}");
        }
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A table of floats.
pub fn float_table<'a>(header: &CsvHeader, columns: &[&str], rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    header.render(&mut out);
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// A table whose first column is text.
pub fn labeled_table(header: &CsvHeader, columns: &[&str], rows: &[(String, Vec<f64>)]) -> String {
    let mut out = String::new();
    header.render(&mut out);
    out.push_str(&columns.join(","));
    out.push('\n');
    for (label, values) in rows {
        out.push_str(label);
        for &v in values {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

const SERIES_COLUMNS: [&str; 5] = ["bounce", "momentum", "phi_true", "phi_observed", "lost"];

fn opt(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map(fmt_f64).unwrap_or_default()
}

/// Phase series: one row per bounce, empty cells for unknown values.
pub fn series_csv(header: &CsvHeader, series: &RunSeries, noise_sigma: f64) -> String {
    let mut out = String::new();
    header.clone().with("noise_sigma", fmt_f64(noise_sigma)).render(&mut out);
    out.push_str(&SERIES_COLUMNS.join(","));
    out.push('\n');
    for (i, r) in series.records.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            i,
            opt(r.momentum),
            opt(r.measurement.map(|m| m.phi_true)),
            opt(r.measurement.map(|m| m.phi_observed)),
            u8::from(r.is_lost())
        );
    }
    out
}

fn parse_float(cell: &str, line: usize, column: &str) -> Result<Option<f64>, IoError> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    let v: f64 = cell
        .parse()
        .map_err(|_| IoError::Parse { line, message: format!("column `{column}`: `{cell}` is not a number") })?;
    if !v.is_finite() {
        return Err(IoError::Parse { line, message: format!("column `{column}`: value must be finite") });
    }
    Ok(Some(v))
}

/// Reads a phase series. Only the `phi_observed` column is required;
/// `momentum`, `phi_true`, `lost` and `bounce` are optional. Header lines
/// may supply `seed` and `noise_sigma`.
pub fn parse_series_csv(text: &str) -> Result<RunSeries, IoError> {
    let mut seed = 0u64;
    let mut noise_sigma = 0.0;
    let mut columns: Option<Vec<String>> = None;
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once(':') {
                match k.trim() {
                    "seed" => {
                        seed = v.trim().parse().map_err(|_| IoError::Parse { line, message: "bad seed".into() })?
                    }
                    "noise_sigma" => {
                        noise_sigma = parse_float(v, line, "noise_sigma")?.unwrap_or(0.0);
                        if noise_sigma < 0.0 {
                            return Err(IoError::Parse { line, message: "noise_sigma must be non-negative".into() });
                        }
                    }
                    _ => {}
                }
            }
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').collect();
        let Some(cols) = &columns else {
            let names: Vec<String> = cells.iter().map(|c| c.trim().to_string()).collect();
            if !names.iter().any(|c| c == "phi_observed") {
                return Err(IoError::Parse { line, message: "missing `phi_observed` column".into() });
            }
            for (i, n) in names.iter().enumerate() {
                if names[..i].contains(n) {
                    return Err(IoError::Parse { line, message: format!("duplicate column `{n}`") });
                }
            }
            columns = Some(names);
            continue;
        };
        if cells.len() != cols.len() {
            return Err(IoError::Parse {
                line,
                message: format!("expected {} fields, found {}", cols.len(), cells.len()),
            });
        }
        let mut momentum = None;
        let mut phi_true = None;
        let mut phi_observed = None;
        let mut lost = false;
        for (name, cell) in cols.iter().zip(&cells) {
            match name.as_str() {
                "momentum" => momentum = parse_float(cell, line, name)?,
                "phi_true" => phi_true = parse_float(cell, line, name)?,
                "phi_observed" => phi_observed = parse_float(cell, line, name)?,
                "lost" => {
                    lost = match cell.trim() {
                        "" | "0" | "false" => false,
                        "1" | "true" => true,
                        other => return Err(IoError::Parse { line, message: format!("bad lost flag `{other}`") }),
                    }
                }
                _ => {}
            }
        }
        if momentum.is_some_and(|p| p < 0.0) {
            return Err(IoError::Parse { line, message: "momentum must be non-negative".into() });
        }
        let measurement = match (lost, phi_observed) {
            (true, _) => None,
            (false, Some(obs)) => Some(PhaseMeasurement {
                phi_true: phi_true.unwrap_or(f64::NAN),
                phi_observed: obs,
                noise_sigma,
                seed,
            }),
            (false, None) => return Err(IoError::Parse { line, message: "empty phi_observed on a measured bounce".into() }),
        };
        records.push(BounceRecord { momentum, measurement });
    }
    if columns.is_none() {
        return Err(IoError::Parse { line: 0, message: "no column header".into() });
    }
    Ok(RunSeries { records })
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    let err = |e: std::io::Error| IoError::Write { path: path.display().to_string(), message: e.to_string() };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(err)?;
    }
    std::fs::write(path, contents).map_err(err)
}

pub fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::Read { path: path.display().to_string(), message: e.to_string() })
}
