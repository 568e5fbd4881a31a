//! Plain-text persistence for matrices and sample batches.
//!
//! Matrices and batches are headerless CSV, one row per line, with floats in
//! shortest round-trip form. A batch has a JSON sidecar (same stem, `.json`)
//! recording `n`, `p` and the seed that produced it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::SeedSpec;
use crate::sampler::{BatchSidecar, SampleBatch};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let mut out = create(path)?;
    for row in rows {
        let line = row
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e))?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|e| Error::parse(path, format!("line {}: {field:?}: {e}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "no rows"));
    }
    Ok(rows)
}

pub fn write_matrix_csv(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    write_rows(path.as_ref(), (0..a.rows()).map(|i| a.row(i)))
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    DenseMatrix::from_rows(&read_rows(path)?).map_err(|e| Error::parse(path, e))
}

/// Sidecar path for a batch CSV: same stem, `.json` extension.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_batch(path: impl AsRef<Path>, batch: &SampleBatch) -> Result<()> {
    let path = path.as_ref();
    write_rows(path, batch.rows())?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&batch.sidecar()).expect("plain struct");
    std::fs::write(&side, json + "\n").map_err(|e| Error::io(side, e))
}

pub fn read_batch(path: impl AsRef<Path>) -> Result<SampleBatch> {
    let path = path.as_ref();
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: BatchSidecar = serde_json::from_str(&text).map_err(|e| Error::parse(&side, e))?;
    let rows = read_rows(path)?;
    if rows.len() != meta.n || rows.iter().any(|r| r.len() != meta.p) {
        return Err(Error::parse(
            path,
            format!("sidecar declares {}x{}, file disagrees", meta.n, meta.p),
        ));
    }
    SampleBatch::new(
        meta.n,
        meta.p,
        rows.concat(),
        SeedSpec::new(meta.master_seed, meta.stream_index),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{draw_samples, GaussianModel};

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut rng = SeedSpec::new(1, 1).rng();
        let a = DenseMatrix::from_fn(4, 3, |_, _| rng.normal() * 1e3).unwrap();
        write_matrix_csv(&path, &a).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), a);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn batch_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("batch.csv");
        let b = draw_samples(&GaussianModel::ar1(3, 0.2).unwrap(), 6, SeedSpec::new(5, 8)).unwrap();
        write_batch(&path, &b).unwrap();
        let side: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("batch.json")).unwrap()).unwrap();
        assert_eq!(side["n"], 6);
        assert_eq!(side["stream_index"], 8);
        assert_eq!(read_batch(&path).unwrap(), b);
    }

    #[test]
    fn parse_errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1,2\n3,x\n").unwrap();
        let err = read_matrix_csv(&path).unwrap_err();
        assert!(err.to_string().contains("bad.csv"), "{err}");
        let missing = read_matrix_csv(dir.path().join("nope.csv")).unwrap_err();
        assert!(matches!(missing, Error::Io { .. }));
        std::fs::write(&path, "1,2\n3\n").unwrap();
        assert!(read_matrix_csv(&path).is_err());
    }
}
