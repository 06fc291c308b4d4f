//! Matrix files and number formatting.
//!
//! A matrix file is either CSV, `n` lines of `n` comma-separated numbers, or
//! a JSON object `{"n": 3, "rows": [[...], ...]}`. Files ending in `.json`
//! are read as JSON, `.csv` as CSV, and anything else by sniffing for a
//! leading `{`. Blank lines and lines starting with `#` are skipped in CSV.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use corrfit_core::{CorrelationModel, SymMatrix};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Json,
}

impl MatrixFormat {
    pub fn name(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::Json => "json",
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatrixFile {
    pub path: PathBuf,
    pub format: MatrixFormat,
    pub matrix: SymMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonMatrix {
    n: usize,
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonBasis {
    n: usize,
    basis: Vec<Vec<Vec<f64>>>,
}

/// Scientific notation with 17 significant digits, which reads back to the
/// same `f64`. Non-finite values become `nan`, `inf` or `-inf`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn detect(path: &Path, text: &str) -> MatrixFormat {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("json") => MatrixFormat::Json,
        Some("csv") => MatrixFormat::Csv,
        _ if text.trim_start().starts_with('{') => MatrixFormat::Json,
        _ => MatrixFormat::Csv,
    }
}

fn square_rows(rows: Vec<Vec<f64>>) -> CliResult<SymMatrix> {
    if rows.is_empty() {
        return Err(CliError::BadInput("matrix has no rows".into()));
    }
    let n = rows.len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(CliError::BadInput(format!("row {} has {} entries, expected {n}", i + 1, r.len())));
    }
    SymMatrix::from_rows(&rows).map_err(|e| CliError::BadInput(e.to_string()))
}

pub fn parse_csv(text: &str) -> CliResult<SymMatrix> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::BadInput(format!("line {}: cannot parse {:?} as a number", lineno + 1, f.trim())))
            })
            .collect::<CliResult<Vec<_>>>()?;
        rows.push(row);
    }
    square_rows(rows)
}

pub fn parse_json(text: &str) -> CliResult<SymMatrix> {
    let m: JsonMatrix = serde_json::from_str(text).map_err(|e| CliError::BadInput(format!("malformed matrix JSON: {e}")))?;
    if m.rows.len() != m.n {
        return Err(CliError::BadInput(format!("\"n\" is {} but there are {} rows", m.n, m.rows.len())));
    }
    square_rows(m.rows)
}

pub fn read_matrix(path: &Path) -> CliResult<MatrixFile> {
    let text = read_text(path)?;
    let format = detect(path, &text);
    let matrix = match format {
        MatrixFormat::Csv => parse_csv(&text),
        MatrixFormat::Json => parse_json(&text),
    }
    .map_err(|e| match e {
        CliError::BadInput(msg) => CliError::BadInput(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok(MatrixFile {
        path: path.to_path_buf(),
        format,
        matrix,
    })
}

pub fn matrix_csv(m: &SymMatrix) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_json(m: &SymMatrix) -> String {
    let rows: Vec<String> = m
        .rows()
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|&v| fmt_float(v)).collect::<Vec<_>>().join(",")))
        .collect();
    format!("{{\"n\":{},\"rows\":[{}]}}\n", m.n(), rows.join(","))
}

/// Reads a custom model: `{"n": 4, "basis": [[[0, 1, ...], ...], ...]}`,
/// each basis element a symmetric matrix with zero diagonal.
pub fn read_model(path: &Path, n: usize) -> CliResult<CorrelationModel> {
    let text = read_text(path)?;
    let parsed: JsonBasis = serde_json::from_str(&text)
        .map_err(|e| CliError::BadInput(format!("{}: malformed model JSON: {e}", path.display())))?;
    if parsed.n != n {
        return Err(CliError::BadInput(format!(
            "model {} is for n = {} but the data matrix is {n} x {n}",
            path.display(),
            parsed.n
        )));
    }
    let basis = parsed.basis.into_iter().map(square_rows).collect::<CliResult<Vec<_>>>()?;
    if let Some(b) = basis.iter().find(|b| b.n() != n) {
        return Err(CliError::BadInput(format!("basis element is {0} x {0}, expected {n} x {n}", b.n())));
    }
    CorrelationModel::custom(n, &basis).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}

/// Writes `text` to `path`, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}
