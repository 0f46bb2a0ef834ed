//! CSV/JSON import and export.
//!
//! Matrices are stored row-major as RFC-4180 CSV with plain decimal fields
//! ('.' separator); vectors are one value per line. A matrix or vector file
//! may travel with a self-describing JSON header carrying (m, n, seed,
//! generator tag). Floats are written in Rust's shortest round-trip form, so
//! a write/read cycle is lossless and identical inputs produce byte-identical
//! files.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::constants::RlipTable;
use crate::error::{Error, Result};
use crate::model::{SensingMatrix, SignalVector};

/// Self-describing metadata for a matrix or vector file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayHeader {
    pub m: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub generator: String,
}

fn parse_field(path: &Path, field: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|e| Error::Parse {
        path: path.display().to_string(),
        reason: format!("bad float {field:?}: {e}"),
    })
}

pub fn write_matrix_csv(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols()).map(|j| matrix[(i, j)].to_string()).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let row: Result<Vec<f64>> = record.iter().map(|f| parse_field(path, f)).collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::Parse { path: path.display().to_string(), reason: "empty matrix".into() });
    }
    let n = rows[0].len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            reason: "ragged rows".into(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for value in v.iter() {
        w.write_record([value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path)?;
    if m.ncols() != 1 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            reason: format!("expected a single column, found {}", m.ncols()),
        });
    }
    Ok(DVector::from_column_slice(m.column(0).as_slice()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `<stem>.csv` plus `<stem>.json` (the header) for a sensing matrix.
pub fn save_sensing_matrix(
    stem: &Path,
    a: &SensingMatrix,
    seed: Option<u64>,
    generator: &str,
) -> Result<()> {
    write_matrix_csv(&stem.with_extension("csv"), a.entries())?;
    let header = ArrayHeader { m: a.m(), n: a.n(), seed, generator: generator.to_string() };
    write_json(&stem.with_extension("json"), &header)
}

/// Loads a matrix written by [`save_sensing_matrix`], checking the header
/// dimensions when the sidecar is present.
pub fn load_sensing_matrix(stem: &Path) -> Result<SensingMatrix> {
    let entries = read_matrix_csv(&stem.with_extension("csv"))?;
    let json_path = stem.with_extension("json");
    if json_path.exists() {
        let header: ArrayHeader = read_json(&json_path)?;
        if header.m != entries.nrows() || header.n != entries.ncols() {
            return Err(Error::Parse {
                path: json_path.display().to_string(),
                reason: format!(
                    "header says {}x{} but the CSV holds {}x{}",
                    header.m,
                    header.n,
                    entries.nrows(),
                    entries.ncols()
                ),
            });
        }
    }
    SensingMatrix::new(entries)
}

/// Writes `<stem>.csv` plus `<stem>.json` for a signal vector.
pub fn save_signal_vector(
    stem: &Path,
    v: &SignalVector,
    seed: Option<u64>,
    generator: &str,
) -> Result<()> {
    write_vector_csv(&stem.with_extension("csv"), v.as_vector())?;
    let header = ArrayHeader { m: v.len(), n: 1, seed, generator: generator.to_string() };
    write_json(&stem.with_extension("json"), &header)
}

pub fn load_signal_vector(stem: &Path) -> Result<SignalVector> {
    SignalVector::new(read_vector_csv(&stem.with_extension("csv"))?)
}

/// Exports a constants table as CSV: k, beta_k, delta_k, subsets_scanned.
/// δ cells are empty where δ was not computed.
pub fn write_rlip_table_csv(path: &Path, table: &RlipTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "beta_k", "delta_k", "subsets_scanned"])?;
    for (&k, &beta) in &table.betas {
        let delta = table.deltas.get(&k).map(|d| d.to_string()).unwrap_or_default();
        let count = table.subsets_scanned.get(&k).copied().unwrap_or(0);
        w.write_record([k.to_string(), beta.to_string(), delta, count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_sensing_matrix;
    use proptest::prelude::*;

    fn temp_dir(tag: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("quadenv-io-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn matrix_package_round_trips() {
        let dir = temp_dir("matrix");
        let a = generate_sensing_matrix(7, 11, 99).unwrap();
        let stem = dir.join("a");
        save_sensing_matrix(&stem, &a, Some(99), "gaussian-normalized-columns").unwrap();
        let back = load_sensing_matrix(&stem).unwrap();
        assert_eq!(back.entries(), a.entries());
        let header: ArrayHeader = read_json(&stem.with_extension("json")).unwrap();
        assert_eq!(header.m, 7);
        assert_eq!(header.n, 11);
        assert_eq!(header.seed, Some(99));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn header_dimension_mismatch_is_rejected() {
        let dir = temp_dir("mismatch");
        let a = generate_sensing_matrix(3, 4, 1).unwrap();
        let stem = dir.join("bad");
        save_sensing_matrix(&stem, &a, None, "test").unwrap();
        let header = ArrayHeader { m: 5, n: 4, seed: None, generator: "test".into() };
        write_json(&stem.with_extension("json"), &header).unwrap();
        assert!(load_sensing_matrix(&stem).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn vector_csv_round_trip_is_lossless(values in proptest::collection::vec(-1e12f64..1e12, 1..40)) {
            let dir = temp_dir("vec");
            let path = dir.join("v.csv");
            let v = DVector::from_column_slice(&values);
            write_vector_csv(&path, &v).unwrap();
            let back = read_vector_csv(&path).unwrap();
            prop_assert_eq!(back, v);
            std::fs::remove_dir_all(&dir).ok();
        }
    }
}
