//! Reading data tables and writing results.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mnr_core::{validate_dataset, Dataset, RawDataset};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Provenance stamped on every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub data_sha256: Option<String>,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &str, cfg: &RunConfig, data_sha256: Option<String>) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: cfg.hash(),
            data_sha256,
            seed: cfg.seed,
        }
    }

    /// `#`-prefixed header lines for CSV output.
    pub fn csv_header(&self) -> String {
        let mut s = format!(
            "# mnr {} {}\n# config_sha256={}\n# seed={}\n",
            self.command, self.version, self.config_sha256, self.seed
        );
        if let Some(h) = &self.data_sha256 {
            s.push_str(&format!("# data_sha256={h}\n"));
        }
        s
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, CliError> {
    headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
        CliError::validation(format!(
            "{}: missing column '{name}' (found: {})",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })
}

fn parse_cell(text: &str, row: usize, name: &str, path: &Path) -> Result<f64, CliError> {
    text.trim().parse::<f64>().map_err(|_| {
        CliError::validation(format!(
            "{}: row {row}, column '{name}': cannot parse '{text}'",
            path.display()
        ))
    })
}

/// Load the configured data table (and covariance, if any). Returns the
/// dataset and the SHA-256 of the raw data bytes.
pub fn read_dataset(cfg: &RunConfig) -> Result<(Dataset, String), CliError> {
    let path = cfg
        .data
        .as_deref()
        .ok_or_else(|| CliError::validation("config has no data file"))?;
    let bytes =
        std::fs::read(path).map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let mut hash_input = bytes.clone();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(&bytes[..]);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        .clone();
    let c = &cfg.columns;
    let want_errors = cfg.covariance.is_none();
    let mut idx = vec![
        (column(&headers, &c.x, path)?, &c.x),
        (column(&headers, &c.y, path)?, &c.y),
    ];
    if want_errors {
        idx.push((column(&headers, &c.sx, path)?, &c.sx));
        idx.push((column(&headers, &c.sy, path)?, &c.sy));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); idx.len()];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        for (k, (i, name)) in idx.iter().enumerate() {
            let text = rec.get(*i).unwrap_or("");
            cols[k].push(parse_cell(text, r + 1, name, path)?);
        }
    }
    let mut raw = RawDataset {
        x_obs: std::mem::take(&mut cols[0]),
        y_obs: std::mem::take(&mut cols[1]),
        ..RawDataset::default()
    };
    if want_errors {
        raw.x_err = Some(std::mem::take(&mut cols[2]));
        raw.y_err = Some(std::mem::take(&mut cols[3]));
    } else if let Some(cp) = &cfg.covariance {
        let cbytes =
            std::fs::read(cp).map_err(|e| CliError::validation(format!("cannot read {}: {e}", cp.display())))?;
        raw.full_cov = Some(read_matrix(&cbytes, cp)?);
        hash_input.extend_from_slice(&cbytes);
    }
    Ok((validate_dataset(raw)?, sha256_hex(&hash_input)))
}

/// A square matrix as headerless comma-separated rows.
fn read_matrix(bytes: &[u8], path: &Path) -> Result<DMatrix<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, t)| parse_cell(t, r + 1, &format!("{}", j + 1), path))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::validation(format!(
            "{}: covariance matrix is not square",
            path.display()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Write `header` lines, then a CSV table with the given column names.
pub fn write_csv(
    path: &Path,
    header: &str,
    columns: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    w.write_all(header.as_bytes())?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}
