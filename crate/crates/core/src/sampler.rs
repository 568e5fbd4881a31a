//! Seeded Gaussian sampling and the sample covariance constructions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_sqrt, DenseMatrix, SymmetricMatrix};
use crate::rng::SeedSpec;

/// Centered normal distribution `N(0, Σ)` with its cached square root.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    sigma: SymmetricMatrix,
    factor: SymmetricMatrix,
    sigma_norm: f64,
    diagonal_factor: bool,
}

impl GaussianModel {
    pub fn new(sigma: SymmetricMatrix) -> Result<Self> {
        let factor = sym_sqrt(&sigma)?;
        let sigma_norm = sigma.spectral_norm()?;
        let diagonal_factor = factor.is_diagonal();
        Ok(Self {
            sigma,
            factor,
            sigma_norm,
            diagonal_factor,
        })
    }

    pub fn identity(p: usize) -> Self {
        Self::new(SymmetricMatrix::identity(p)).expect("identity is PSD")
    }

    pub fn zero(p: usize) -> Self {
        Self::new(SymmetricMatrix::zeros(p)).expect("zero is PSD")
    }

    /// `Σᵢⱼ = ρ^|i−j|`, |ρ| < 1.
    pub fn ar1(p: usize, rho: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::invalid(format!("AR(1) rho must lie in (-1, 1), got {rho}")));
        }
        let sigma = SymmetricMatrix::from_fn(p, |i, j| rho.powi((i - j) as i32))?;
        Self::new(sigma)
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn sigma(&self) -> &SymmetricMatrix {
        &self.sigma
    }

    /// `Σ^{1/2}`.
    pub fn factor(&self) -> &SymmetricMatrix {
        &self.factor
    }

    pub fn sigma_norm(&self) -> f64 {
        self.sigma_norm
    }

    /// Writes `Σ^{1/2} g` into `out`.
    pub(crate) fn transform(&self, g: &[f64], out: &mut [f64]) {
        let p = self.dim();
        if self.diagonal_factor {
            for i in 0..p {
                out[i] = self.factor.get(i, i) * g[i];
            }
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.factor.row(i).iter().zip(g).map(|(a, b)| a * b).sum();
            }
        }
    }
}

/// `n` observations in `ℝᵖ`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    n: usize,
    dim: usize,
    observations: Vec<f64>,
    seed: SeedSpec,
}

/// Metadata written next to a batch CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSidecar {
    pub n: usize,
    pub p: usize,
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SampleBatch {
    pub fn new(n: usize, dim: usize, observations: Vec<f64>, seed: SeedSpec) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::invalid("batch needs n >= 1 and p >= 1"));
        }
        if observations.len() != n * dim {
            return Err(Error::shape(n * dim, observations.len()));
        }
        if observations.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("batch contains non-finite observations"));
        }
        Ok(Self {
            n,
            dim,
            observations,
            seed,
        })
    }

    /// Batch from explicit rows, tagged with `seed`.
    pub fn from_rows(rows: &[Vec<f64>], seed: SeedSpec) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("ragged observation rows"));
        }
        Self::new(rows.len(), dim, rows.concat(), seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> SeedSpec {
        self.seed
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.observations[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.observations.chunks_exact(self.dim)
    }

    pub fn sidecar(&self) -> BatchSidecar {
        BatchSidecar {
            n: self.n,
            p: self.dim,
            master_seed: self.seed.master_seed,
            stream_index: self.seed.stream_index,
        }
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<SampleBatch> {
        SampleBatch::new(
            self.n,
            self.dim,
            self.observations.iter().map(|x| c * x).collect(),
            self.seed,
        )
    }

    /// Sample mean `X̄`.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        let inv = 1.0 / self.n as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        mean
    }
}

/// Draws `n` rows `Σ^{1/2} g`; row `k` uses sub-stream `k` of `seed`.
pub fn draw_samples(model: &GaussianModel, n: usize, seed: SeedSpec) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let p = model.dim();
    let mut observations = vec![0.0; n * p];
    let mut g = vec![0.0; p];
    for (k, row) in observations.chunks_exact_mut(p).enumerate() {
        seed.substream(k as u64).fill_normal(&mut g);
        model.transform(&g, row);
    }
    SampleBatch::new(n, p, observations, seed)
}

/// `Σ̂ₙ = (1/n) Σₖ XₖXₖᵀ`.
pub fn sample_covariance(batch: &SampleBatch) -> SymmetricMatrix {
    let p = batch.dim;
    let mut acc = vec![0.0; p * p];
    for row in batch.rows() {
        for i in 0..p {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            let acc_row = &mut acc[i * p..(i + 1) * p];
            for j in i..p {
                acc_row[j] += xi * row[j];
            }
        }
    }
    let inv = 1.0 / batch.n as f64;
    SymmetricMatrix::from_fn(p, |i, j| acc[j * p + i] * inv).expect("finite batch")
}

/// `(1/n) Σₖ XₖXₖᵀ − X̄X̄ᵀ`; needs `n ≥ 2`.
pub fn sample_covariance_centered(batch: &SampleBatch) -> Result<SymmetricMatrix> {
    if batch.n < 2 {
        return Err(Error::invalid("centered covariance needs n >= 2"));
    }
    let raw = sample_covariance(batch);
    let mean = batch.mean();
    SymmetricMatrix::from_fn(batch.dim, |i, j| raw.get(i, j) - mean[i] * mean[j])
}

/// `Σ′ₙ = (1/n) Σₖ X′ₖXₖᵀ` from two independent batches.
pub fn decoupled_covariance(batch: &SampleBatch, batch_prime: &SampleBatch) -> Result<DenseMatrix> {
    check_decoupled_pair(batch, batch_prime)?;
    let p = batch.dim;
    let mut acc = vec![0.0; p * p];
    for (x, xp) in batch.rows().zip(batch_prime.rows()) {
        for i in 0..p {
            let a = xp[i];
            if a == 0.0 {
                continue;
            }
            for (o, &b) in acc[i * p..(i + 1) * p].iter_mut().zip(x) {
                *o += a * b;
            }
        }
    }
    let inv = 1.0 / batch.n as f64;
    acc.iter_mut().for_each(|v| *v *= inv);
    DenseMatrix::new(p, p, acc)
}

pub(crate) fn check_decoupled_pair(batch: &SampleBatch, batch_prime: &SampleBatch) -> Result<()> {
    if (batch.n, batch.dim) != (batch_prime.n, batch_prime.dim) {
        return Err(Error::shape(
            format!("{}x{}", batch.n, batch.dim),
            format!("{}x{}", batch_prime.n, batch_prime.dim),
        ));
    }
    if batch.seed == batch_prime.seed {
        return Err(Error::invalid(
            "decoupled covariance needs independent batches, got identical seeds",
        ));
    }
    Ok(())
}
