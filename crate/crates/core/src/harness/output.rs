use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundKind, DEFAULT_C};
use crate::error::{Error, Result};
use crate::masks::MaskStats;
use crate::verify::STDERR_MARGIN;

use super::config::{ExperimentConfig, DEFAULT_REPLICATES};
use super::experiment::TrialResult;

/// Column order of result CSV files; JSON rows use the same keys.
pub const CSV_COLUMNS: [&str; 11] = [
    "n",
    "p",
    "m",
    "replicate",
    "error",
    "decoupled",
    "bound_refined",
    "bound_theorem_main",
    "bound_minor",
    "bound_bai_yin",
    "bound_centering",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// `.json` means JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ResultRow {
    n: usize,
    p: usize,
    m: usize,
    replicate: usize,
    error: f64,
    decoupled: Option<f64>,
    bound_refined: Option<f64>,
    bound_theorem_main: Option<f64>,
    bound_minor: Option<f64>,
    bound_bai_yin: Option<f64>,
    bound_centering: Option<f64>,
}

impl From<&TrialResult> for ResultRow {
    fn from(r: &TrialResult) -> Self {
        ResultRow {
            n: r.n,
            p: r.p,
            m: r.m,
            replicate: r.replicate,
            error: r.error,
            decoupled: r.decoupled,
            bound_refined: r.bound(BoundKind::Refined),
            bound_theorem_main: r.bound(BoundKind::TheoremMain),
            bound_minor: r.bound(BoundKind::Minor),
            bound_bai_yin: r.bound(BoundKind::BaiYin),
            bound_centering: r.bound(BoundKind::Centering),
        }
    }
}

impl From<ResultRow> for TrialResult {
    fn from(row: ResultRow) -> Self {
        let bounds: BTreeMap<BoundKind, f64> = [
            (BoundKind::Refined, row.bound_refined),
            (BoundKind::TheoremMain, row.bound_theorem_main),
            (BoundKind::Minor, row.bound_minor),
            (BoundKind::BaiYin, row.bound_bai_yin),
            (BoundKind::Centering, row.bound_centering),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect();
        TrialResult {
            n: row.n,
            p: row.p,
            m: row.m,
            replicate: row.replicate,
            error: row.error,
            decoupled: row.decoupled,
            bounds,
        }
    }
}

/// Writes results as CSV (header always present) or as a JSON array.
pub fn emit_results(results: &[TrialResult], format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let io_err = |e: std::io::Error| Error::io(path, e);
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
            let csv_err = |e: csv::Error| Error::io(path, e.into());
            w.write_record(CSV_COLUMNS).map_err(csv_err)?;
            for r in results {
                w.serialize(ResultRow::from(r)).map_err(csv_err)?;
            }
            w.flush().map_err(io_err)
        }
        OutputFormat::Json => {
            let rows: Vec<ResultRow> = results.iter().map(ResultRow::from).collect();
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, &rows).map_err(|e| Error::io(path, e.into()))?;
            writeln!(w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
    }
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<TrialResult>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers().map_err(|e| Error::parse(path, e))?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::parse(path, format!("unexpected header {header:?}")));
    }
    reader
        .deserialize::<ResultRow>()
        .map(|row| row.map(TrialResult::from).map_err(|e| Error::parse(path, e)))
        .collect()
}

/// One JSON document per line.
pub fn write_jsonl<T: Serialize>(items: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::io(path, e.into()))?;
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Finite-sample tolerances applied by the harness; not properties of the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessPolicy {
    pub minor_envelope_factor: f64,
    pub identity_band: [f64; 2],
    pub bai_yin_band: [f64; 2],
    pub stderr_margin: f64,
    pub default_c: f64,
    pub default_replicates: usize,
}

impl Default for HarnessPolicy {
    fn default() -> Self {
        Self {
            minor_envelope_factor: 1.3,
            identity_band: [0.5, 3.0],
            bai_yin_band: [1.05 / 1.25, 1.45 / 1.25],
            stderr_margin: STDERR_MARGIN,
            default_c: DEFAULT_C,
            default_replicates: DEFAULT_REPLICATES,
        }
    }
}

/// Written next to every simulate output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: ExperimentConfig,
    pub sigma_norm: f64,
    pub mask: Option<MaskStats>,
    pub policy: HarnessPolicy,
    pub trials: usize,
    pub refined_violations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpec;

    fn sample_results(count: usize) -> Vec<TrialResult> {
        let mut rng = SeedSpec::new(31, 0).rng();
        (0..count)
            .map(|i| {
                let mut bounds = BTreeMap::new();
                bounds.insert(BoundKind::Refined, rng.uniform() * 1e3);
                if i % 2 == 0 {
                    bounds.insert(BoundKind::Minor, rng.normal().abs());
                }
                if i % 3 == 0 {
                    bounds.insert(BoundKind::TheoremMain, std::f64::consts::PI * rng.uniform());
                }
                TrialResult {
                    n: 10 + i,
                    p: 50,
                    m: i % 7,
                    replicate: i,
                    error: rng.normal().abs() * 1e-7,
                    decoupled: (i % 5 == 0).then(|| rng.uniform()),
                    bounds,
                }
            })
            .collect()
    }

    #[test]
    fn empty_csv_has_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        emit_results(&[], OutputFormat::Csv, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, CSV_COLUMNS.join(",") + "\n");
        assert!(read_results_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn one_result_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        emit_results(&sample_results(1), OutputFormat::Csv, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let results = sample_results(1000);
        emit_results(&results, OutputFormat::Csv, &path).unwrap();
        assert_eq!(read_results_csv(&path).unwrap(), results);
    }

    #[test]
    fn json_rows_share_csv_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let results = sample_results(20);
        emit_results(&results, OutputFormat::from_path(&path), &path).unwrap();
        let rows: Vec<serde_json::Map<String, serde_json::Value>> =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        for (row, r) in rows.iter().zip(&results) {
            let mut keys: Vec<&str> = row.keys().map(String::as_str).collect();
            let mut want = CSV_COLUMNS.to_vec();
            keys.sort();
            want.sort();
            assert_eq!(keys, want);
            assert_eq!(row["error"].as_f64().unwrap(), r.error);
        }
    }

    #[test]
    fn rejects_foreign_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_results_csv(&path), Err(Error::Parse { .. })));
    }
}
