//! File formats: covariance matrices (CSV and JSON), run manifests, and
//! lossless float formatting for artifacts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{FactorModelPoint, FactorParams};
use crate::linalg::Matrix;

/// Scientific notation with 17 significant digits; parses back to the same
/// f64 bit pattern.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON form of a covariance point: `{p, sigma, provenance?, min_rank?}`.
#[derive(Serialize, Deserialize)]
pub struct CovarianceFile {
    pub p: usize,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_rank: Option<usize>,
}

#[derive(Serialize, Deserialize)]
pub struct ProvenanceFile {
    pub psi: Vec<f64>,
    pub lambda: Vec<Vec<f64>>,
}

/// Reads a covariance from `.json` (structured) or anything else (header-free
/// CSV, row-major).
pub fn read_covariance(path: &Path) -> Result<FactorModelPoint> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let file: CovarianceFile =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if file.sigma.len() != file.p {
            return Err(Error::Parse(format!(
                "{}: sigma has {} rows, header says p = {}",
                path.display(),
                file.sigma.len(),
                file.p
            )));
        }
        let sigma = Matrix::from_rows(&file.sigma)?;
        match file.provenance {
            Some(prov) => {
                let lambda = Matrix::from_rows(&prov.lambda)?;
                let params = FactorParams::new(prov.psi, lambda)?;
                FactorModelPoint::from_params(params, file.min_rank)
            }
            None => FactorModelPoint::from_sigma(sigma),
        }
    } else {
        let rows = parse_csv_matrix(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        FactorModelPoint::from_sigma(Matrix::from_rows(&rows)?)
    }
}

fn parse_csv_matrix(text: &str) -> std::result::Result<Vec<Vec<f64>>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, String> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("line {}: '{}': {e}", lineno + 1, tok.trim()))
            })
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err("no rows".into());
    }
    Ok(rows)
}

/// Writes a matrix as header-free CSV, one row per line, 17-digit floats.
pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Every artifact-producing run writes one of these next to its outputs.
#[derive(Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// The exact argument vector; re-running it reproduces the outputs
    /// bit-identically (wall clock aside).
    pub argv: Vec<String>,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub wall_clock_ms: u128,
}

impl RunManifest {
    pub fn new(
        command: &str,
        argv: &[String],
        seed: Option<u64>,
        config: serde_json::Value,
        wall_clock_ms: u128,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            argv: argv.to_vec(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            wall_clock_ms,
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("manifest serialization: {e}")))?;
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(out_dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[
            0.0,
            1.0,
            -1.5e-300,
            std::f64::consts::PI,
            6.02214076e23,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_matrix_round_trip() {
        let m = Matrix::from_rows(&[vec![1.25, -0.5], vec![-0.5, 2.0]]).unwrap();
        let rows = parse_csv_matrix(&matrix_to_csv(&m)).unwrap();
        assert_eq!(Matrix::from_rows(&rows).unwrap(), m);
        assert!(parse_csv_matrix("a,b\n").is_err());
        assert!(parse_csv_matrix("").is_err());
    }

    #[test]
    fn covariance_json_with_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cov.json");
        std::fs::write(
            &path,
            r#"{"p": 2, "sigma": [[2.0, 1.0], [1.0, 2.0]],
                "provenance": {"psi": [1.0, 1.0], "lambda": [[1.0], [1.0]]},
                "min_rank": 1}"#,
        )
        .unwrap();
        let point = read_covariance(&path).unwrap();
        assert_eq!(point.p(), 2);
        assert_eq!(point.min_rank(), Some(1));
        assert!(point.provenance().is_some());
    }

    #[test]
    fn covariance_csv_rejects_asymmetry() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cov.csv");
        std::fs::write(&path, "1.0,0.5\n0.4,1.0\n").unwrap();
        assert!(read_covariance(&path).is_err());
    }
}
