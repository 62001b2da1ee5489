//! Output formatting shared by the command-line tools: a stable float
//! format for CSV cells and thin CSV/JSON writer helpers.

use crate::{Error, Result};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Render a float for CSV output.
///
/// Exact zero prints as "0"; magnitudes in [1e-3, 1e6) print in plain
/// decimal; everything else uses scientific notation. Both forms use Rust's
/// shortest round-trip representation, so parsing the string back yields the
/// identical bit pattern.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs();
    if (1.0e-3..1.0e6).contains(&mag) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Selected serialization format for tabular command output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!(
                "unknown output format {other:?}; expected \"csv\" or \"json\""
            ))),
        }
    }
}

impl OutputFormat {
    /// File extension without the dot.
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Write one CSV table: a header row then data rows. Cells containing
/// commas or quotes are quoted by the writer.
pub fn write_csv<W: Write>(sink: W, headers: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer
        .write_record(headers)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for row in rows {
        if row.len() != headers.len() {
            return Err(Error::Domain(format!(
                "CSV row has {} cells but the header has {}",
                row.len(),
                headers.len()
            )));
        }
        writer
            .write_record(row)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(())
}

/// Write a CSV table to a file path.
pub fn write_csv_file(path: &Path, headers: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(std::io::BufWriter::new(file), headers, rows)
}

/// Serialize a value as pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    text.push('\n');
    Ok(text)
}

/// Write a value as pretty JSON to a file path.
pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}
