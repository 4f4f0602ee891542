//! CSV in and out.
//!
//! Input: rectangular numeric CSV, optionally with a header row. Every cell
//! must parse as a finite `f64`; `NaN`, `inf` and empty cells are rejected
//! with the offending 1-based row (counting the header) and column.
//!
//! Output: headerless, comma separated, every value in scientific notation
//! with 17 significant digits, which round-trips exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ppics_core::scatter::DataSet;
use ppics_core::Matrix;

use crate::error::{AppError, AppResult};

#[derive(Clone, Copy, Debug, Default)]
pub struct CsvOptions {
    pub header: bool,
}

#[derive(Clone, Debug)]
pub struct Table {
    pub data: DataSet,
    pub column_names: Option<Vec<String>>,
    /// SHA-256 of the raw file bytes, lowercase hex.
    pub sha256: String,
}

pub fn ingest_csv(path: &Path, opts: &CsvOptions) -> AppResult<Table> {
    parse_csv(&read_bytes(path)?, opts)
}

pub fn parse_csv(bytes: &[u8], opts: &CsvOptions) -> AppResult<Table> {
    use sha2::{Digest, Sha256};
    let sha256 = Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let (column_names, m) = parse_rows(bytes, opts.header)?;
    let (n, p) = (m.nrows(), m.ncols());
    if n <= p || p == 0 {
        return Err(AppError::TooFewRows { n, p });
    }
    Ok(Table {
        data: DataSet::new(m)?,
        column_names,
        sha256,
    })
}

/// Headerless numeric CSV of any shape, e.g. a written transform.
pub fn read_matrix_csv(path: &Path) -> AppResult<Matrix> {
    let (_, m) = parse_rows(&read_bytes(path)?, false)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(AppError::Argument(format!(
            "{} holds no values",
            path.display()
        )));
    }
    Ok(m)
}

fn read_bytes(path: &Path) -> AppResult<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| AppError::Read {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(bytes)
}

fn parse_rows(bytes: &[u8], header: bool) -> AppResult<(Option<Vec<String>>, Matrix)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut records = reader.records();
    let mut column_names = None;
    let mut line = 0;
    if header {
        if let Some(rec) = records.next() {
            line += 1;
            column_names = Some(rec?.iter().map(str::to_owned).collect::<Vec<_>>());
        }
    }

    let mut width = column_names.as_ref().map(Vec::len);
    let mut values = Vec::new();
    let mut n = 0;
    for rec in records {
        let rec = rec?;
        line += 1;
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(AppError::Ragged {
                row: line,
                expected,
                found: rec.len(),
            });
        }
        for (k, cell) in rec.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(AppError::Parse {
                        row: line,
                        col: k + 1,
                        value: cell.to_owned(),
                    })
                }
            }
        }
        n += 1;
    }
    let p = width.unwrap_or(0);
    Ok((column_names, Matrix::from_row_major(n, p, values)))
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_csv(path: &Path, m: &Matrix) -> AppResult<()> {
    let io_err = |source| AppError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for row in m.rows_iter() {
        let line: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        writeln!(out, "{}", line.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_text(path: &Path, text: &str) -> AppResult<()> {
    std::fs::write(path, text).map_err(|source| AppError::Write {
        path: path.to_path_buf(),
        source,
    })
}
