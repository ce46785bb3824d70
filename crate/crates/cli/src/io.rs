//! CSV reading and writing with `\n` terminators and a mandatory header.

use std::fs;
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use crate::CliError;

fn invalid(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

/// The selected `columns` of a CSV file, as raw strings in column order.
pub struct Table {
    pub rows: Vec<Vec<String>>,
    path: PathBuf,
}

impl Table {
    pub fn read(path: &Path, columns: &[&str]) -> Result<Self, CliError> {
        let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| invalid(path, e))?;
        let header = rdr.headers().map_err(|e| invalid(path, e))?.clone();
        let idx: Vec<usize> = columns
            .iter()
            .map(|c| header.iter().position(|h| h == *c).ok_or_else(|| invalid(path, format!("missing column `{c}`"))))
            .collect::<Result<_, _>>()?;
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| invalid(path, e))?;
            rows.push(idx.iter().map(|&i| rec.get(i).unwrap_or("").to_owned()).collect());
        }
        Ok(Self { rows, path: path.to_owned() })
    }

    /// Field `col` of data row `row` (0-based, header excluded).
    pub fn num(&self, row: usize, col: usize) -> Result<f64, CliError> {
        let s = &self.rows[row][col];
        s.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| invalid(&self.path, format!("line {}: `{s}` is not a finite number", row + 2)))
    }

    pub fn index(&self, row: usize, col: usize) -> Result<usize, CliError> {
        let s = &self.rows[row][col];
        match s.parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i - 1),
            _ => Err(invalid(&self.path, format!("line {}: `{s}` is not a 1-based index", row + 2))),
        }
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_path(path).map_err(|e| invalid(path, e))?;
    w.write_record(header).map_err(|e| invalid(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| invalid(path, e))?;
    }
    w.flush().map_err(|e| invalid(path, e))
}

/// Writes the sidecar log when there is anything to report.
pub fn write_warnings(dir: &Path, command: &str, warnings: &[String]) -> Result<(), CliError> {
    if warnings.is_empty() {
        return Ok(());
    }
    let path = dir.join(format!("{command}.warnings.log"));
    let mut text = String::new();
    for w in warnings {
        text.push_str("warning: ");
        text.push_str(w);
        text.push('\n');
    }
    fs::write(&path, text).map_err(|e| invalid(&path, e))?;
    eprintln!("{} warning(s) written to {}", warnings.len(), path.display());
    Ok(())
}

pub fn f(x: f64) -> String {
    format!("{x}")
}
