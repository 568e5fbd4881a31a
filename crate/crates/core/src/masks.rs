//! Hadamard masks and their cached statistics.
//!
//! A [`Mask`] stores the symmetric matrix `M` together with the three numbers
//! every error bound is expressed in: the maximum number of nonzero entries in
//! a column `m`, the column norm `‖M‖₁,₂` and the operator norm `‖M‖`. It also
//! keeps the list of nonzero positions so that `M·Σ̂ₙ` can be formed without
//! computing the full sample covariance.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_one_two, DenseMatrix, SymmetricMatrix};
use crate::sampler::{check_decoupled_pair, SampleBatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Minor,
    Banded,
    Taper,
    Threshold,
    Custom,
}

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MaskKind::Minor => "minor",
            MaskKind::Banded => "banded",
            MaskKind::Taper => "taper",
            MaskKind::Threshold => "threshold",
            MaskKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Mask {
    matrix: SymmetricMatrix,
    kind: MaskKind,
    max_col_nnz: usize,
    norm_12: f64,
    norm_op: f64,
    /// Nonzero positions `(i, j)` with `i ≤ j`.
    support: Vec<(usize, usize)>,
}

impl Mask {
    fn from_matrix(matrix: SymmetricMatrix, kind: MaskKind) -> Result<Self> {
        let p = matrix.dim();
        let max_col_nnz = (0..p)
            .map(|j| matrix.row(j).iter().filter(|v| v.abs() > 0.0).count())
            .max()
            .unwrap_or(0);
        let norm_12 = norm_one_two(&matrix.as_dense());
        let norm_op = matrix.spectral_norm()?;
        let support = (0..p)
            .flat_map(|i| (i..p).map(move |j| (i, j)))
            .filter(|&(i, j)| matrix.get(i, j) != 0.0)
            .collect();
        Ok(Self {
            matrix,
            kind,
            max_col_nnz,
            norm_12,
            norm_op,
            support,
        })
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `m`: the largest number of nonzero entries in any column.
    pub fn max_col_nnz(&self) -> usize {
        self.max_col_nnz
    }

    /// `‖M‖₁,₂`.
    pub fn norm_12(&self) -> f64 {
        self.norm_12
    }

    /// `‖M‖`.
    pub fn norm_op(&self) -> f64 {
        self.norm_op
    }

    pub fn support(&self) -> &[(usize, usize)] {
        &self.support
    }

    pub fn is_zero_one(&self) -> bool {
        self.matrix.entries().iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn is_all_ones(&self) -> bool {
        self.matrix.entries().iter().all(|&v| v == 1.0)
    }

    /// `M·Σ̂ₙ`, optionally with sample-mean centering, computed on the support only.
    pub fn apply_to_covariance(&self, batch: &SampleBatch, centered: bool) -> Result<SymmetricMatrix> {
        self.check_dim(batch.dim())?;
        if centered && batch.n() < 2 {
            return Err(Error::invalid("centered covariance needs n >= 2"));
        }
        let mut acc = vec![0.0; self.support.len()];
        for row in batch.rows() {
            for (a, &(i, j)) in acc.iter_mut().zip(&self.support) {
                *a += row[i] * row[j];
            }
        }
        let inv = 1.0 / batch.n() as f64;
        let mean = centered.then(|| batch.mean());
        let p = self.dim();
        let mut out = vec![0.0; p * p];
        for (a, &(i, j)) in acc.iter().zip(&self.support) {
            let mut v = a * inv;
            if let Some(mean) = &mean {
                v -= mean[i] * mean[j];
            }
            let v = self.matrix.get(i, j) * v;
            out[i * p + j] = v;
            out[j * p + i] = v;
        }
        SymmetricMatrix::new(p, out)
    }

    /// `M·Σ′ₙ` computed on the support only.
    pub fn apply_to_decoupled(&self, batch: &SampleBatch, batch_prime: &SampleBatch) -> Result<DenseMatrix> {
        self.check_dim(batch.dim())?;
        check_decoupled_pair(batch, batch_prime)?;
        // (i, j) and (j, i) accumulate separately: Σ′ₙ is not symmetric.
        let mut upper = vec![0.0; self.support.len()];
        let mut lower = vec![0.0; self.support.len()];
        for (x, xp) in batch.rows().zip(batch_prime.rows()) {
            for ((u, l), &(i, j)) in upper.iter_mut().zip(lower.iter_mut()).zip(&self.support) {
                *u += xp[i] * x[j];
                *l += xp[j] * x[i];
            }
        }
        let inv = 1.0 / batch.n() as f64;
        let p = self.dim();
        let mut out = vec![0.0; p * p];
        for ((u, l), &(i, j)) in upper.iter().zip(&lower).zip(&self.support) {
            let w = self.matrix.get(i, j) * inv;
            out[i * p + j] = w * u;
            out[j * p + i] = w * l;
        }
        DenseMatrix::new(p, p, out)
    }

    /// `‖M·Σ̂ₙ − M·Σ‖`.
    pub fn estimation_error(&self, batch: &SampleBatch, sigma: &SymmetricMatrix, centered: bool) -> Result<f64> {
        self.check_dim(sigma.dim())?;
        let estimate = self.apply_to_covariance(batch, centered)?;
        let p = self.dim();
        let mut diff = estimate.entries().to_vec();
        for &(i, j) in &self.support {
            let v = diff[i * p + j] - self.matrix.get(i, j) * sigma.get(i, j);
            diff[i * p + j] = v;
            diff[j * p + i] = v;
        }
        SymmetricMatrix::new(p, diff)?.spectral_norm()
    }

    fn check_dim(&self, p: usize) -> Result<()> {
        if p != self.dim() {
            return Err(Error::shape(self.dim(), p));
        }
        Ok(())
    }
}

/// `m_ij = 1` iff `i, j ∈ S`.
pub fn minor_mask(p: usize, indices: &[usize]) -> Result<Mask> {
    if p == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let set: BTreeSet<usize> = indices.iter().copied().collect();
    if set.is_empty() {
        return Err(Error::invalid("minor index set must be nonempty"));
    }
    if let Some(&bad) = set.iter().find(|&&i| i >= p) {
        return Err(Error::invalid(format!("index {bad} out of range for p = {p}")));
    }
    let inside: Vec<bool> = (0..p).map(|i| set.contains(&i)).collect();
    let m = SymmetricMatrix::from_fn(p, |i, j| if inside[i] && inside[j] { 1.0 } else { 0.0 })?;
    Mask::from_matrix(m, MaskKind::Minor)
}

/// `m_ij = 1` iff `|i − j| ≤ k`.
pub fn banded_mask(p: usize, k: usize) -> Result<Mask> {
    if p == 0 || k >= p {
        return Err(Error::invalid(format!("half-bandwidth k = {k} must be in 0..{p}")));
    }
    let m = SymmetricMatrix::from_fn(p, |i, j| if i - j <= k { 1.0 } else { 0.0 })?;
    Mask::from_matrix(m, MaskKind::Banded)
}

/// Trapezoidal taper weight at distance `d` for even width `k`.
pub fn taper_weight(d: usize, k: usize) -> f64 {
    if 2 * d <= k {
        1.0
    } else if d < k {
        2.0 - 2.0 * d as f64 / k as f64
    } else {
        0.0
    }
}

/// `m_ij = w(|i − j|)`: flat at 1 up to `k/2`, linear down to 0 at `k`.
pub fn taper_mask(p: usize, k: usize) -> Result<Mask> {
    if p == 0 || k % 2 != 0 || k < 2 || k > 2 * (p.max(1) - 1) {
        return Err(Error::invalid(format!(
            "taper width k = {k} must be even with 2 <= k <= {}",
            2 * (p.max(1) - 1)
        )));
    }
    let m = SymmetricMatrix::from_fn(p, |i, j| taper_weight(i - j, k))?;
    Mask::from_matrix(m, MaskKind::Taper)
}

/// Keeps the diagonal and every entry with `|σ̂_ij| ≥ h`.
pub fn threshold_mask(sigma_hat: &SymmetricMatrix, h: f64) -> Result<Mask> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid(format!("threshold h must be positive, got {h}")));
    }
    let m = SymmetricMatrix::from_fn(sigma_hat.dim(), |i, j| {
        if i == j || sigma_hat.get(i, j).abs() >= h {
            1.0
        } else {
            0.0
        }
    })?;
    Mask::from_matrix(m, MaskKind::Threshold)
}

/// Arbitrary symmetric mask; rejects asymmetry beyond the constructor tolerance.
pub fn custom_mask(matrix: &DenseMatrix) -> Result<Mask> {
    Mask::from_matrix(SymmetricMatrix::from_dense(matrix)?, MaskKind::Custom)
}

impl From<&Mask> for MaskStats {
    fn from(mask: &Mask) -> Self {
        MaskStats {
            kind: mask.kind,
            p: mask.dim(),
            max_col_nnz: mask.max_col_nnz,
            norm_12: mask.norm_12,
            norm_op: mask.norm_op,
        }
    }
}

/// Serializable summary of a mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskStats {
    pub kind: MaskKind,
    pub p: usize,
    pub max_col_nnz: usize,
    pub norm_12: f64,
    pub norm_op: f64,
}
