//! Result artifacts shared by every subcommand: a provenance header
//! block (tool version, input hashes, parameters) and the `result v1` /
//! `table v1` text formats. Inputs are recorded by content hash rather
//! than path, so reruns on identical data produce byte-identical files.

use std::fmt::Display;
use std::path::Path;

use photonlab::io::{self, IoError};
use photonlab::types::FitResult;
use sha2::{Digest, Sha256};

pub struct Provenance {
    headers: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(subcommand: &str) -> Self {
        Provenance {
            headers: vec![
                (
                    "tool".into(),
                    format!("photonlab {}", env!("CARGO_PKG_VERSION")),
                ),
                ("subcommand".into(), subcommand.into()),
            ],
        }
    }

    /// Records the sha256 of an input file under its role in this run.
    pub fn input(&mut self, role: &str, path: &Path) -> Result<(), IoError> {
        let bytes = std::fs::read(path)?;
        let mut hex = String::with_capacity(64);
        for b in Sha256::digest(&bytes) {
            hex.push_str(&format!("{b:02x}"));
        }
        self.headers.push((format!("input {role} sha256"), hex));
        Ok(())
    }

    pub fn seed(&mut self, seed: u64) {
        self.headers.push(("seed".into(), seed.to_string()));
    }

    pub fn param(&mut self, key: &str, value: impl Display) {
        self.headers.push((format!("param {key}"), value.to_string()));
    }

    pub fn headers(&self) -> &[(String, String)] {
        &self.headers
    }
}

pub struct ResultRow {
    pub name: String,
    pub value: f64,
    pub std_error: Option<f64>,
}

pub fn row(name: impl Into<String>, value: f64, std_error: f64) -> ResultRow {
    ResultRow { name: name.into(), value, std_error: Some(std_error) }
}

pub fn bare(name: impl Into<String>, value: f64) -> ResultRow {
    ResultRow { name: name.into(), value, std_error: None }
}

pub fn flag(name: impl Into<String>, value: bool) -> ResultRow {
    bare(name, if value { 1.0 } else { 0.0 })
}

/// Solver diagnostics appended to every fit's result rows.
pub fn fit_rows(prefix: &str, fit: &FitResult) -> Vec<ResultRow> {
    vec![
        bare(format!("{prefix}reduced_chi_sq"), fit.reduced_chi_sq),
        bare(format!("{prefix}iterations"), fit.iterations as f64),
        flag(format!("{prefix}converged"), fit.converged),
    ]
}

/// Writes a `result v1` file: provenance headers plus one
/// `name value std_error` row per quantity (std_error `nan` where a
/// quantity carries none).
pub fn write_result(
    path: &Path,
    prov: &Provenance,
    rows: &[ResultRow],
) -> Result<(), IoError> {
    let mut text = String::from("# format: result v1\n");
    for (key, value) in prov.headers() {
        text.push_str(&format!("# {key}: {value}\n"));
    }
    text.push_str("# columns: name value std_error\n");
    for r in rows {
        match r.std_error {
            Some(e) => text.push_str(&format!("{} {} {}\n", r.name, r.value, e)),
            None => text.push_str(&format!("{} {} nan\n", r.name, r.value)),
        }
    }
    io::write_atomic(path, text.as_bytes())
}

/// Writes a `table v1` file: plot-ready tab-separated numeric columns
/// under provenance headers. NaN cells mark rows where a column has no
/// sample (model oversampling between measured bins).
pub fn write_table(
    path: &Path,
    prov: &Provenance,
    x_unit: &str,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<(), IoError> {
    let mut text = String::from("# format: table v1\n");
    text.push_str(&format!("# x_unit: {x_unit}\n"));
    for (key, value) in prov.headers() {
        text.push_str(&format!("# {key}: {value}\n"));
    }
    text.push_str(&format!("# n_rows: {}\n", rows.len()));
    text.push_str(&format!("# columns: {}\n", columns.join(" ")));
    for r in rows {
        debug_assert_eq!(r.len(), columns.len());
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        text.push_str(&cells.join("\t"));
        text.push('\n');
    }
    io::write_atomic(path, text.as_bytes())
}
