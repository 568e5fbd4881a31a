use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_matrix_csv;
use crate::linalg::SymmetricMatrix;
use crate::masks::{banded_mask, custom_mask, minor_mask, taper_mask};
use crate::sampler::GaussianModel;

use super::experiment::{Experiment, MaskSource};

pub const DEFAULT_REPLICATES: usize = 200;

/// Population covariance of the simulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaSpec {
    Identity,
    Zero,
    /// `Σᵢⱼ = ρ^|i−j|`.
    Ar1 { rho: f64 },
    /// Headerless CSV holding `Σ`.
    Custom { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskSpec {
    Minor {
        #[serde(rename = "S")]
        indices: Vec<usize>,
    },
    Banded { k: usize },
    Taper { k: usize },
    /// Estimated per replicate from that replicate's sample covariance.
    Threshold { h: f64 },
    Custom { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    #[default]
    Absolute,
    /// Error divided by `‖Σ‖`.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sigma_spec: SigmaSpec,
    pub mask_spec: MaskSpec,
    pub n_grid: Vec<usize>,
    pub p: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub centered: bool,
    #[serde(default)]
    pub error_metric: ErrorMetric,
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

impl ExperimentConfig {
    pub fn new(sigma_spec: SigmaSpec, mask_spec: MaskSpec, p: usize, n_grid: Vec<usize>) -> Self {
        Self {
            sigma_spec,
            mask_spec,
            n_grid,
            p,
            replicates: DEFAULT_REPLICATES,
            master_seed: 0,
            centered: false,
            error_metric: ErrorMetric::Absolute,
        }
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative `custom` paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let SigmaSpec::Custom { path } = &mut cfg.sigma_spec {
            *path = base.join(&*path);
        }
        if let MaskSpec::Custom { path } = &mut cfg.mask_spec {
            *path = base.join(&*path);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::invalid("p must be at least 1"));
        }
        if self.replicates == 0 || self.replicates > u32::MAX as usize {
            return Err(Error::invalid("replicates must be in 1..2^32"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::invalid("n_grid must be nonempty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_grid must be strictly ascending"));
        }
        if self.n_grid[0] == 0 || *self.n_grid.last().unwrap() >= 1 << 31 {
            return Err(Error::invalid("every n must be in 1..2^31"));
        }
        if self.centered && self.n_grid[0] < 2 {
            return Err(Error::invalid("centered mode needs n >= 2"));
        }
        if let SigmaSpec::Ar1 { rho } = self.sigma_spec {
            if !(rho > -1.0 && rho < 1.0) {
                return Err(Error::invalid(format!("ar1 rho must lie in (-1, 1), got {rho}")));
            }
        }
        if self.error_metric == ErrorMetric::Relative && self.sigma_spec == SigmaSpec::Zero {
            return Err(Error::invalid("relative error is undefined for a zero covariance"));
        }
        Ok(())
    }

    /// Builds the model and mask.
    pub fn resolve(&self) -> Result<Experiment> {
        self.validate()?;
        let p = self.p;
        let model = match &self.sigma_spec {
            SigmaSpec::Identity => GaussianModel::identity(p),
            SigmaSpec::Zero => GaussianModel::zero(p),
            SigmaSpec::Ar1 { rho } => GaussianModel::ar1(p, *rho)?,
            SigmaSpec::Custom { path } => {
                let m = SymmetricMatrix::from_dense(&read_matrix_csv(path)?)?;
                if m.dim() != p {
                    return Err(Error::shape(p, m.dim()));
                }
                GaussianModel::new(m)?
            }
        };
        if self.error_metric == ErrorMetric::Relative && model.sigma_norm() == 0.0 {
            return Err(Error::invalid("relative error is undefined for a zero covariance"));
        }
        let mask = match &self.mask_spec {
            MaskSpec::Minor { indices } => MaskSource::Fixed(minor_mask(p, indices)?),
            MaskSpec::Banded { k } => MaskSource::Fixed(banded_mask(p, *k)?),
            MaskSpec::Taper { k } => MaskSource::Fixed(taper_mask(p, *k)?),
            MaskSpec::Threshold { h } => {
                if !(*h > 0.0) {
                    return Err(Error::invalid(format!("threshold h must be positive, got {h}")));
                }
                MaskSource::Threshold(*h)
            }
            MaskSpec::Custom { path } => {
                let m = custom_mask(&read_matrix_csv(path)?)?;
                if m.dim() != p {
                    return Err(Error::shape(p, m.dim()));
                }
                MaskSource::Fixed(m)
            }
        };
        Ok(Experiment::new(self.clone(), model, mask))
    }
}
