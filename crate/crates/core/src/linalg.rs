//! Dense matrices and the norms the error bounds are stated in.
//!
//! Storage is row-major `Vec<f64>`. [`SymmetricMatrix`] stores the exact
//! symmetrization `(A + Aᵀ)/2` of its input, so downstream eigen-solvers never
//! see floating-point asymmetry.
//!
//! Spectral norms are computed with a cyclic Jacobi eigenvalue sweep: directly
//! for symmetric matrices, and on the Gram matrix `AᵀA` (or `AAᵀ`, whichever is
//! smaller) for general ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance accepted by [`SymmetricMatrix::new`] before symmetrizing.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Negative eigenvalues above `-PSD_TOL·‖S‖` are clamped to zero by [`sym_sqrt`].
pub const PSD_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

fn check_finite(entries: &[f64]) -> Result<()> {
    match entries.iter().position(|x| !x.is_finite()) {
        Some(k) => Err(Error::invalid(format!("non-finite entry at flat index {k}"))),
        None => Ok(()),
    }
}

fn max_abs(entries: &[f64]) -> f64 {
    entries.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDense")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDense {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl TryFrom<RawDense> for DenseMatrix {
    type Error = Error;

    fn try_from(raw: RawDense) -> Result<Self> {
        DenseMatrix::new(raw.rows, raw.cols, raw.entries)
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix must have at least one row and column"));
        }
        if entries.len() != rows * cols {
            return Err(Error::shape(
                format!("{} entries ({rows}x{cols})", rows * cols),
                entries.len(),
            ));
        }
        check_finite(&entries)?;
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(p: usize) -> Self {
        SymmetricMatrix::identity(p).into_dense()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::shape(format!("{c} columns"), bad.len()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::new(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn transpose(&self) -> Self {
        let mut entries = vec![0.0; self.entries.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                entries[j * self.rows + i] = self.get(i, j);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                format!("{} rows", self.cols),
                format!("{} rows", other.rows),
            ));
        }
        let mut out = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        }
        DenseMatrix::new(self.rows, other.cols, out)
    }

    pub fn mat_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::shape(self.cols, x.len()));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::shape(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        DenseMatrix::new(self.rows, self.cols, entries)
    }

    /// `AᵀA` if `cols ≤ rows`, otherwise `AAᵀ`; both share the nonzero spectrum.
    pub fn small_gram(&self) -> SymmetricMatrix {
        let (outer, inner, transposed) = if self.cols <= self.rows {
            (self.cols, self.rows, false)
        } else {
            (self.rows, self.cols, true)
        };
        let at = |k: usize, i: usize| {
            if transposed {
                self.get(i, k)
            } else {
                self.get(k, i)
            }
        };
        let mut g = vec![0.0; outer * outer];
        for i in 0..outer {
            for j in i..outer {
                let s: f64 = (0..inner).map(|k| at(k, i) * at(k, j)).sum();
                g[i * outer + j] = s;
                g[j * outer + i] = s;
            }
        }
        SymmetricMatrix {
            dim: outer,
            entries: g,
        }
    }

    pub(crate) fn from_parts_unchecked(rows: usize, cols: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        Self {
            rows,
            cols,
            entries,
        }
    }
}

/// Square matrix with an exact symmetry invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSymmetric")]
pub struct SymmetricMatrix {
    dim: usize,
    entries: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSymmetric {
    dim: usize,
    entries: Vec<f64>,
}

impl TryFrom<RawSymmetric> for SymmetricMatrix {
    type Error = Error;

    fn try_from(raw: RawSymmetric) -> Result<Self> {
        SymmetricMatrix::new(raw.dim, raw.entries)
    }
}

impl SymmetricMatrix {
    /// Validates near-symmetry (relative [`SYMMETRY_TOL`]) and stores `(A + Aᵀ)/2`.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        let dense = DenseMatrix::new(dim, dim, entries)?;
        Self::from_dense(&dense)
    }

    pub fn from_dense(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::shape("square matrix", format!("{}x{}", a.rows, a.cols)));
        }
        let tol = SYMMETRY_TOL * a.max_abs().max(1.0);
        for i in 0..a.rows {
            for j in 0..i {
                let gap = (a.get(i, j) - a.get(j, i)).abs();
                if gap > tol {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e}"
                    )));
                }
            }
        }
        Ok(Self::symmetrize(a))
    }

    /// `(A + Aᵀ)/2` without any tolerance check.
    pub fn symmetrize(a: &DenseMatrix) -> Self {
        assert!(a.is_square(), "symmetrize needs a square matrix");
        let p = a.rows;
        let mut entries = vec![0.0; p * p];
        for i in 0..p {
            entries[i * p + i] = a.get(i, i);
            for j in 0..i {
                let v = 0.5 * (a.get(i, j) + a.get(j, i));
                entries[i * p + j] = v;
                entries[j * p + i] = v;
            }
        }
        Self { dim: p, entries }
    }

    /// Builds from the lower triangle of `f` (`f(i, j)` with `j ≤ i`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                entries[i * dim + j] = v;
                entries[j * dim + i] = v;
            }
        }
        check_finite(&entries)?;
        Ok(Self { dim, entries })
    }

    pub fn identity(p: usize) -> Self {
        Self::diagonal(&vec![1.0; p])
    }

    pub fn zeros(p: usize) -> Self {
        assert!(p > 0, "empty matrix");
        Self {
            dim: p,
            entries: vec![0.0; p * p],
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let p = diag.len();
        let mut m = Self::zeros(p);
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * p + i] = d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn as_dense(&self) -> DenseMatrix {
        DenseMatrix::from_parts_unchecked(self.dim, self.dim, self.entries.clone())
    }

    pub fn into_dense(self) -> DenseMatrix {
        DenseMatrix::from_parts_unchecked(self.dim, self.dim, self.entries)
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        if self.dim != other.dim {
            return Err(Error::shape(self.dim, other.dim));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, c: f64) -> SymmetricMatrix {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|x| c * x).collect(),
        }
    }

    pub fn mat_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::shape(self.dim, x.len()));
        }
        Ok((0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `⟨Ax, y⟩`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::shape(self.dim, y.len()));
        }
        Ok(self.mat_vec(x)?.iter().zip(y).map(|(a, b)| a * b).sum())
    }

    /// Whether the diagonal holds every nonzero entry.
    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut work = self.entries.clone();
        let mut vals = jacobi(&mut work, self.dim, None)?;
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }

    /// Eigenvalues (ascending) with eigenvectors stored as matrix columns.
    pub fn eigen(&self) -> Result<(Vec<f64>, DenseMatrix)> {
        let p = self.dim;
        let mut work = self.entries.clone();
        let mut vecs = SymmetricMatrix::identity(p).entries;
        let vals = jacobi(&mut work, p, Some(&mut vecs))?;
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let sorted_vals = order.iter().map(|&k| vals[k]).collect();
        let mut sorted_vecs = vec![0.0; p * p];
        for (new_col, &old_col) in order.iter().enumerate() {
            for i in 0..p {
                sorted_vecs[i * p + new_col] = vecs[i * p + old_col];
            }
        }
        Ok((sorted_vals, DenseMatrix::from_parts_unchecked(p, p, sorted_vecs)))
    }

    /// `max |λ|`. Identically zero rows and columns are dropped before the
    /// eigen-solve since they only contribute zero eigenvalues.
    pub fn spectral_norm(&self) -> Result<f64> {
        let active: Vec<usize> = (0..self.dim)
            .filter(|&i| self.row(i).iter().any(|&x| x != 0.0))
            .collect();
        if active.is_empty() {
            return Ok(0.0);
        }
        let k = active.len();
        let mut work = Vec::with_capacity(k * k);
        for &i in &active {
            for &j in &active {
                work.push(self.get(i, j));
            }
        }
        let vals = jacobi(&mut work, k, None)?;
        Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

/// Entrywise (Hadamard) product.
pub trait Hadamard<Rhs> {
    type Output;

    fn hadamard(&self, rhs: &Rhs) -> Result<Self::Output>;
}

impl Hadamard<SymmetricMatrix> for SymmetricMatrix {
    type Output = SymmetricMatrix;

    fn hadamard(&self, rhs: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        if self.dim != rhs.dim {
            return Err(Error::shape(self.dim, rhs.dim));
        }
        Ok(SymmetricMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }
}

impl Hadamard<DenseMatrix> for SymmetricMatrix {
    type Output = DenseMatrix;

    fn hadamard(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if (rhs.rows, rhs.cols) != (self.dim, self.dim) {
            return Err(Error::shape(
                format!("{0}x{0}", self.dim),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a * b)
            .collect();
        Ok(DenseMatrix::from_parts_unchecked(rhs.rows, rhs.cols, entries))
    }
}

pub fn hadamard<B>(mask: &SymmetricMatrix, b: &B) -> Result<<SymmetricMatrix as Hadamard<B>>::Output>
where
    SymmetricMatrix: Hadamard<B>,
{
    mask.hadamard(b)
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    if a.is_exactly_symmetric() {
        return SymmetricMatrix::symmetrize(a).spectral_norm();
    }
    let gram = a.small_gram();
    let top = gram.spectral_norm()?;
    Ok(top.max(0.0).sqrt())
}

/// `‖A‖₁,₂`: the largest Euclidean column norm.
pub fn norm_one_two(a: &DenseMatrix) -> f64 {
    (0..a.cols)
        .map(|j| (0..a.rows).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Symmetric PSD square root. Eigenvalues in `[-PSD_TOL·‖S‖, 0)` are clamped.
pub fn sym_sqrt(s: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let p = s.dim;
    if s.is_diagonal() {
        let norm = (0..p).map(|i| s.get(i, i).abs()).fold(0.0, f64::max);
        let diag = (0..p)
            .map(|i| clamp_root(s.get(i, i), norm))
            .collect::<Result<Vec<_>>>()?;
        return Ok(SymmetricMatrix::diagonal(&diag));
    }
    let (vals, vecs) = s.eigen()?;
    let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let roots = vals
        .iter()
        .map(|&v| clamp_root(v, norm))
        .collect::<Result<Vec<_>>>()?;
    let mut t = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let v: f64 = (0..p)
                .map(|k| vecs.get(i, k) * roots[k] * vecs.get(j, k))
                .sum();
            t[i * p + j] = v;
            t[j * p + i] = v;
        }
    }
    Ok(SymmetricMatrix { dim: p, entries: t })
}

fn clamp_root(eigenvalue: f64, norm: f64) -> Result<f64> {
    let tolerance = PSD_TOL * norm;
    if eigenvalue < -tolerance {
        return Err(Error::NotPsd {
            min_eigenvalue: eigenvalue,
            tolerance,
        });
    }
    Ok(eigenvalue.max(0.0).sqrt())
}

/// Cyclic Jacobi on a row-major symmetric `n×n` buffer, destroyed in place.
/// Returns the (unsorted) diagonal after convergence; `vecs`, when given,
/// accumulates the rotations (start it at the identity).
fn jacobi(a: &mut [f64], n: usize, mut vecs: Option<&mut Vec<f64>>) -> Result<Vec<f64>> {
    let diag = |a: &[f64]| (0..n).map(|i| a[i * n + i]).collect::<Vec<_>>();
    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].abs())
            .sum();
        if off == 0.0 {
            return Ok(diag(a));
        }
        let threshold = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                if apq.abs() <= threshold {
                    continue;
                }
                let h = aqq - app;
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(a, n, p, q, c, s);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = vecs.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let last = diag(a).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Err(Error::NumericalFailure {
        routine: "jacobi eigenvalue sweep",
        iterations: MAX_SWEEPS,
        last_estimate: last,
    })
}

/// `A ← JᵀAJ` for the plane rotation in (p, q), off the (p, q) block.
#[inline]
fn rotate(a: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        a[k * n + p] = new_p;
        a[k * n + q] = new_q;
        a[p * n + k] = new_p;
        a[q * n + k] = new_q;
    }
}

/// Finite real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("vector must be non-empty"));
        }
        check_finite(&entries)?;
        Ok(Self(entries))
    }

    pub fn basis(p: usize, i: usize) -> Self {
        let mut v = vec![0.0; p];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}
