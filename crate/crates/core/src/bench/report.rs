use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::grid::GridResult;
use super::run::RunTrace;
use super::svd_bench::SvdBenchRow;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::parse(format!("unknown report format `{other}`"))),
        }
    }
}

/// Data that can be written as a CSV table or as JSON.
pub trait Report: Serialize {
    fn csv_header(&self) -> Vec<&'static str>;
    fn csv_records(&self) -> Vec<Vec<String>>;
}

/// Shortest representation that parses back to the same `f64`.
fn real(x: f64) -> String {
    format!("{x:?}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl Report for RunTrace {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["iteration", "loss", "grad_frobenius", "grad_spectral", "grad_nuclear"]
    }

    fn csv_records(&self) -> Vec<Vec<String>> {
        let at = |v: &[f64], i: usize| v.get(i).map(|&x| real(x)).unwrap_or_default();
        self.losses
            .iter()
            .enumerate()
            .map(|(i, &loss)| {
                vec![
                    i.to_string(),
                    real(loss),
                    at(&self.grad_frobenius, i),
                    at(&self.grad_spectral, i),
                    at(&self.grad_nuclear, i),
                ]
            })
            .collect()
    }
}

impl Report for GridResult {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["lr", "beta", "iters_to_threshold", "final_loss", "diverged", "best"]
    }

    fn csv_records(&self) -> Vec<Vec<String>> {
        self.cells
            .iter()
            .map(|c| {
                vec![
                    real(c.lr),
                    real(c.beta),
                    opt(c.iters_to_threshold),
                    real(c.final_loss),
                    c.diverged.to_string(),
                    (*c == self.best).to_string(),
                ]
            })
            .collect()
    }
}

impl Report for [SvdBenchRow] {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "rows",
            "cols",
            "k",
            "engine",
            "trials",
            "mean_matvecs",
            "mean_iterations",
            "mean_err1",
            "mean_err2",
            "mean_seconds",
            "converged_trials",
        ]
    }

    fn csv_records(&self) -> Vec<Vec<String>> {
        self.iter()
            .map(|r| {
                vec![
                    r.rows.to_string(),
                    r.cols.to_string(),
                    r.k.to_string(),
                    r.engine.clone(),
                    r.trials.to_string(),
                    real(r.mean_matvecs),
                    real(r.mean_iterations),
                    real(r.mean_err1),
                    r.mean_err2.map(real).unwrap_or_default(),
                    real(r.mean_seconds),
                    r.converged_trials.to_string(),
                ]
            })
            .collect()
    }
}

impl Report for Vec<SvdBenchRow> {
    fn csv_header(&self) -> Vec<&'static str> {
        self.as_slice().csv_header()
    }

    fn csv_records(&self) -> Vec<Vec<String>> {
        self.as_slice().csv_records()
    }
}

/// Serializes `data` in memory.
pub fn render_report<R: Report + ?Sized>(data: &R, format: ReportFormat) -> Result<Vec<u8>> {
    let here = || PathBuf::from("<memory>");
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(data).map_err(|source| Error::Json { path: here(), source })?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(data.csv_header())
                .map_err(|source| Error::Csv { path: here(), source })?;
            for rec in data.csv_records() {
                w.write_record(&rec).map_err(|source| Error::Csv { path: here(), source })?;
            }
            w.into_inner().map_err(|e| Error::Io {
                path: here(),
                source: e.into_error(),
            })
        }
    }
}

/// Writes `data` to `path` as CSV (one header row) or pretty JSON.
pub fn emit_report<R: Report + ?Sized>(data: &R, format: ReportFormat, path: &Path) -> Result<()> {
    let bytes = render_report(data, format)?;
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Plain comma-separated reals, one row per line, no header.
pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let row = rec
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::parse(format!("{}: line {}: `{field}` is not a number", path.display(), line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(format!("{}: no rows", path.display())));
    }
    Matrix::from_rows(&rows)
}

/// Inverse of [`read_matrix_csv`].
pub fn write_matrix_csv(m: &Matrix, path: &Path) -> Result<()> {
    let mut text = String::new();
    for row in m.to_rows() {
        let line: Vec<String> = row.into_iter().map(real).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
