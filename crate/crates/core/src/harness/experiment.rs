use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    bound_bai_yin, bound_centering, bound_minor, bound_refined, bound_theorem_main, BoundKind, DEFAULT_C,
};
use crate::error::{Error, Result};
use crate::masks::{threshold_mask, Mask, MaskKind};
use crate::rng::SeedSpec;
use crate::sampler::{draw_samples, sample_covariance, GaussianModel, SampleBatch};
use crate::stats::{combined_stderr, Summary};
use crate::verify::STDERR_MARGIN;

use super::config::{ErrorMetric, ExperimentConfig};

const PRIME_STREAM_BIT: u64 = 1 << 63;

/// Stream for replicate `replicate` at sample size `n`. Keyed on the value of
/// `n`, so extending or refining a grid never reshuffles existing trials.
pub fn stream_index(n: usize, replicate: usize) -> u64 {
    ((n as u64) << 32) | replicate as u64
}

#[derive(Debug, Clone)]
pub enum MaskSource {
    Fixed(Mask),
    /// Data-dependent hard threshold at `h`.
    Threshold(f64),
}

/// A resolved configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: GaussianModel,
    pub mask: MaskSource,
}

/// One replicate of the error sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub replicate: usize,
    /// `‖M·Σ̂ₙ − M·Σ‖`, divided by `‖Σ‖` for the relative metric.
    pub error: f64,
    /// `2‖M·Σ′ₙ‖` on the same scale, for decoupled runs.
    pub decoupled: Option<f64>,
    pub bounds: BTreeMap<BoundKind, f64>,
}

impl TrialResult {
    pub fn bound(&self, kind: BoundKind) -> Option<f64> {
        self.bounds.get(&kind).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamOrder {
    Normal,
    /// Use the primed stream for `Σ̂ₙ` and the plain stream for the copy.
    Swapped,
}

impl Experiment {
    pub fn new(config: ExperimentConfig, model: GaussianModel, mask: MaskSource) -> Self {
        Self { config, model, mask }
    }

    fn scale(&self) -> f64 {
        match self.config.error_metric {
            ErrorMetric::Absolute => 1.0,
            ErrorMetric::Relative => 1.0 / self.model.sigma_norm(),
        }
    }

    /// `‖Σ‖` as it enters the bounds: 1 under the relative metric.
    fn bound_sigma_norm(&self) -> f64 {
        match self.config.error_metric {
            ErrorMetric::Absolute => self.model.sigma_norm(),
            ErrorMetric::Relative => 1.0,
        }
    }

    fn fixed_bounds(&self, mask: &Mask, n: usize) -> BTreeMap<BoundKind, f64> {
        let p = self.config.p;
        let s = self.bound_sigma_norm();
        let mut bounds = BTreeMap::new();
        bounds.insert(
            BoundKind::Refined,
            bound_refined(mask.norm_12(), mask.norm_op(), n, p, s).value,
        );
        bounds.insert(
            BoundKind::TheoremMain,
            bound_theorem_main(mask.norm_12(), mask.norm_op(), n, p, s, DEFAULT_C).value,
        );
        if mask.kind() == MaskKind::Minor {
            bounds.insert(BoundKind::Minor, bound_minor(mask.max_col_nnz(), n, s).value);
        }
        if mask.is_all_ones() {
            bounds.insert(BoundKind::BaiYin, bound_bai_yin(p, n, s).value);
        }
        if self.config.centered {
            bounds.insert(
                BoundKind::Centering,
                bound_centering(mask.norm_op(), s, p, n, DEFAULT_C).value,
            );
        }
        bounds
    }

    fn draw(&self, n: usize, replicate: usize, primed: bool) -> Result<SampleBatch> {
        let mut stream = stream_index(n, replicate);
        if primed {
            stream |= PRIME_STREAM_BIT;
        }
        draw_samples(&self.model, n, SeedSpec::new(self.config.master_seed, stream))
    }

    fn error_trial(&self, n: usize, replicate: usize) -> Result<TrialResult> {
        let batch = self.draw(n, replicate, false)?;
        let centered = self.config.centered;
        let sigma = self.model.sigma();
        let (error, m, bounds) = match &self.mask {
            MaskSource::Fixed(mask) => (
                mask.estimation_error(&batch, sigma, centered)?,
                mask.max_col_nnz(),
                self.fixed_bounds(mask, n),
            ),
            MaskSource::Threshold(h) => {
                // Data-dependent mask: reported descriptively, no bound attached.
                let mask = threshold_mask(&sample_covariance(&batch), *h)?;
                (
                    mask.estimation_error(&batch, sigma, centered)?,
                    mask.max_col_nnz(),
                    BTreeMap::new(),
                )
            }
        };
        Ok(TrialResult {
            n,
            p: self.config.p,
            m,
            replicate,
            error: error * self.scale(),
            decoupled: None,
            bounds,
        })
    }

    fn decoupled_trial(&self, mask: &Mask, n: usize, replicate: usize, order: StreamOrder) -> Result<TrialResult> {
        let plain = self.draw(n, replicate, false)?;
        let primed = self.draw(n, replicate, true)?;
        let (batch, copy) = match order {
            StreamOrder::Normal => (plain, primed),
            StreamOrder::Swapped => (primed, plain),
        };
        let error = mask.estimation_error(&batch, self.model.sigma(), false)?;
        let decoupled = 2.0 * crate::linalg::spectral_norm(&mask.apply_to_decoupled(&batch, &copy)?)?;
        let scale = self.scale();
        Ok(TrialResult {
            n,
            p: self.config.p,
            m: mask.max_col_nnz(),
            replicate,
            error: error * scale,
            decoupled: Some(decoupled * scale),
            bounds: self.fixed_bounds(mask, n),
        })
    }

    fn sweep(&self, trial: impl Fn(usize, usize) -> Result<TrialResult> + Sync) -> Result<Vec<TrialResult>> {
        let mut out = Vec::with_capacity(self.config.n_grid.len() * self.config.replicates);
        for &n in &self.config.n_grid {
            // results land in per-replicate slots, so order never depends on scheduling
            let chunk: Vec<TrialResult> = (0..self.config.replicates)
                .into_par_iter()
                .map(|r| trial(n, r))
                .collect::<Result<_>>()?;
            out.extend(chunk);
        }
        Ok(out)
    }

    pub fn run_error(&self) -> Result<Vec<TrialResult>> {
        self.sweep(|n, r| self.error_trial(n, r))
    }

    pub fn run_decoupled(&self, order: StreamOrder) -> Result<Vec<TrialResult>> {
        let mask = match &self.mask {
            MaskSource::Fixed(mask) => mask,
            MaskSource::Threshold(_) => {
                return Err(Error::invalid("decoupled experiments need a fixed mask"));
            }
        };
        if self.config.centered {
            return Err(Error::invalid("decoupled experiments compare uncentered estimators"));
        }
        self.sweep(|n, r| self.decoupled_trial(mask, n, r, order))
    }
}

/// `‖M·Σ̂ₙ − M·Σ‖` for every `(n, replicate)` in the grid.
pub fn run_error_experiment(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    config.resolve()?.run_error()
}

/// Records both `‖M·Σ̂ₙ − M·Σ‖` and `2‖M·Σ′ₙ‖` per replicate.
pub fn run_decoupled_experiment(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    run_decoupled_experiment_with(config, StreamOrder::Normal)
}

pub fn run_decoupled_experiment_with(config: &ExperimentConfig, order: StreamOrder) -> Result<Vec<TrialResult>> {
    config.resolve()?.run_decoupled(order)
}

/// Per-`n` comparison of `E‖M·Σ̂ₙ − M·Σ‖` against `2E‖M·Σ′ₙ‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecouplingSummary {
    pub n: usize,
    pub mean_error: f64,
    pub mean_decoupled: f64,
    pub stderr: f64,
    pub passed: bool,
    pub replicates: usize,
}

pub fn decoupling_summary(results: &[TrialResult]) -> Result<Vec<DecouplingSummary>> {
    let mut by_n: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in results {
        let d = r
            .decoupled
            .ok_or_else(|| Error::invalid("result row has no decoupled value"))?;
        let slot = by_n.entry(r.n).or_default();
        slot.0.push(r.error);
        slot.1.push(d);
    }
    Ok(by_n
        .into_iter()
        .map(|(n, (err, dec))| {
            let e = Summary::of(&err);
            let d = Summary::of(&dec);
            let stderr = combined_stderr(e.stderr, d.stderr);
            DecouplingSummary {
                n,
                mean_error: e.mean,
                mean_decoupled: d.mean,
                stderr,
                passed: e.mean <= d.mean + STDERR_MARGIN * stderr,
                replicates: err.len(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{MaskSpec, SigmaSpec};

    fn cfg(sigma: SigmaSpec, mask: MaskSpec, p: usize, grid: Vec<usize>, reps: usize) -> ExperimentConfig {
        ExperimentConfig::new(sigma, mask, p, grid).with_replicates(reps).with_seed(17)
    }

    #[test]
    fn zero_sigma_gives_zero_error() {
        let c = cfg(SigmaSpec::Zero, MaskSpec::Banded { k: 1 }, 6, vec![5, 10], 8);
        let rs = run_error_experiment(&c).unwrap();
        assert_eq!(rs.len(), 16);
        assert!(rs.iter().all(|r| r.error == 0.0));
    }

    #[test]
    fn zero_mask_gives_zero_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.csv");
        crate::io::write_matrix_csv(&path, &crate::linalg::DenseMatrix::zeros(5, 5)).unwrap();
        let c = cfg(SigmaSpec::Ar1 { rho: 0.3 }, MaskSpec::Custom { path }, 5, vec![4, 8], 5);
        let rs = run_error_experiment(&c).unwrap();
        assert!(rs.iter().all(|r| r.error == 0.0 && r.m == 0));
        let ds = run_decoupled_experiment(&c).unwrap();
        assert!(ds.iter().all(|r| r.error == 0.0 && r.decoupled == Some(0.0)));
    }

    #[test]
    fn deterministic_and_order_independent() {
        let c = cfg(SigmaSpec::Ar1 { rho: 0.5 }, MaskSpec::Taper { k: 4 }, 10, vec![20, 40], 12);
        let a = run_error_experiment(&c).unwrap();
        let b = run_error_experiment(&c).unwrap();
        assert_eq!(a, b);
        // grid extension keeps earlier trials bit-identical
        let mut wider = c.clone();
        wider.n_grid = vec![10, 20, 30, 40];
        let w = run_error_experiment(&wider).unwrap();
        let pick = |rs: &[TrialResult], n| rs.iter().filter(|r| r.n == n).cloned().collect::<Vec<_>>();
        assert_eq!(pick(&a, 20), pick(&w, 20));
        assert_eq!(pick(&a, 40), pick(&w, 40));
    }

    #[test]
    fn relative_metric_is_absolute_over_norm() {
        let abs = cfg(SigmaSpec::Ar1 { rho: 0.6 }, MaskSpec::Banded { k: 2 }, 8, vec![16], 6);
        let mut rel = abs.clone();
        rel.error_metric = ErrorMetric::Relative;
        let norm = abs.resolve().unwrap().model.sigma_norm();
        let a = run_error_experiment(&abs).unwrap();
        let r = run_error_experiment(&rel).unwrap();
        for (x, y) in a.iter().zip(&r) {
            assert_eq!(y.error, x.error * (1.0 / norm));
            let ratio = x.bound(BoundKind::Refined).unwrap() / y.bound(BoundKind::Refined).unwrap();
            assert!((ratio - norm).abs() < 1e-12);
        }
    }

    #[test]
    fn bounds_attached_where_applicable() {
        let minor = cfg(SigmaSpec::Identity, MaskSpec::Minor { indices: vec![0, 1, 2] }, 6, vec![10], 2);
        let r = &run_error_experiment(&minor).unwrap()[0];
        assert!(r.bound(BoundKind::Minor).is_some());
        assert!(r.bound(BoundKind::BaiYin).is_none());
        assert!(r.bound(BoundKind::Refined).unwrap() >= r.error);

        let full = cfg(SigmaSpec::Identity, MaskSpec::Banded { k: 5 }, 6, vec![10], 2);
        let r = &run_error_experiment(&full).unwrap()[0];
        assert!(r.bound(BoundKind::BaiYin).is_some());

        let mut centered = full.clone();
        centered.centered = true;
        let r = &run_error_experiment(&centered).unwrap()[0];
        assert!(r.bound(BoundKind::Centering).is_some());

        let thr = cfg(SigmaSpec::Ar1 { rho: 0.5 }, MaskSpec::Threshold { h: 0.2 }, 6, vec![50], 3);
        let rs = run_error_experiment(&thr).unwrap();
        assert!(rs.iter().all(|r| r.bounds.is_empty() && r.m >= 1));
        assert!(run_decoupled_experiment(&thr).is_err());
    }

    #[test]
    fn decoupled_streams_are_distinct() {
        let c = cfg(SigmaSpec::Identity, MaskSpec::Banded { k: 1 }, 5, vec![8], 4);
        let e = c.resolve().unwrap();
        let a = e.draw(8, 0, false).unwrap();
        let b = e.draw(8, 0, true).unwrap();
        assert_ne!(a.seed(), b.seed());
        assert_ne!(a.observations(), b.observations());
    }

    #[test]
    fn stream_index_is_injective_on_grid() {
        use std::collections::HashSet;
        let mut seen = HashSet::new();
        for n in [1usize, 2, 100, 4096, (1 << 31) - 1] {
            for r in [0usize, 1, 199, u32::MAX as usize] {
                assert!(seen.insert(stream_index(n, r)));
            }
        }
    }
}
