//! Executable checks of the probabilistic and deterministic lemmas behind the
//! bounds: operator-norm discretization on nets and regular vectors, Gaussian
//! chaos decoupling, Gaussian concentration, and the `σₓ` functional.
//!
//! Each check returns a [`LemmaReport`]. Monte Carlo checks pass when
//! `lhs ≤ rhs + 3·stderr`; exact checks carry `stderr = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, DenseMatrix, SymmetricMatrix, Vector, PSD_TOL};
use crate::masks::Mask;
use crate::rng::SeedSpec;
use crate::sampler::{draw_samples, GaussianModel, SampleBatch};
use crate::stats::{combined_stderr, Summary};

/// Largest dimension for exhaustive regular-vector enumeration.
pub const MAX_ENUM_P: usize = 14;

/// Acceptance margin in standard errors.
pub const STDERR_MARGIN: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub passed: bool,
    pub trials: usize,
}

impl LemmaReport {
    pub fn new(lemma: impl Into<String>, lhs: f64, rhs: f64, stderr: f64, trials: usize) -> Self {
        Self {
            lemma: lemma.into(),
            lhs,
            rhs,
            stderr,
            passed: lhs <= rhs + STDERR_MARGIN * stderr,
            trials,
        }
    }

    pub fn exact(lemma: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(lemma, lhs, rhs, 0.0, 1)
    }
}

/// Unit vectors whose nonzero coordinates all equal `±1/√s`.
#[derive(Debug, Clone)]
pub struct RegularVectorSet {
    pub p: usize,
    pub s: usize,
    pub vectors: Vec<Vector>,
}

fn check_enum_size(p: usize) -> Result<()> {
    if p > MAX_ENUM_P {
        return Err(Error::SizeGuard {
            p,
            limit: MAX_ENUM_P,
        });
    }
    Ok(())
}

/// `C(p, s)·2^s`.
pub fn regular_count(p: usize, s: usize) -> u128 {
    if s > p {
        return 0;
    }
    let mut c: u128 = 1;
    for i in 0..s as u128 {
        c = c * (p as u128 - i) / (i + 1);
    }
    c << s
}

/// Calls `f` on every vector of `Reg_p(s)`: supports in lexicographic order,
/// then sign patterns in binary order (first support coordinate is the most
/// significant bit, a set bit meaning a negative sign).
pub fn for_each_regular(p: usize, s: usize, mut f: impl FnMut(&[f64])) {
    if s == 0 || s > p {
        return;
    }
    let value = 1.0 / (s as f64).sqrt();
    let mut support: Vec<usize> = (0..s).collect();
    let mut x = vec![0.0; p];
    loop {
        for signs in 0u32..(1 << s) {
            x.iter_mut().for_each(|v| *v = 0.0);
            for (t, &i) in support.iter().enumerate() {
                let negative = signs >> (s - 1 - t) & 1 == 1;
                x[i] = if negative { -value } else { value };
            }
            f(&x);
        }
        // next combination in lexicographic order
        let mut t = s;
        loop {
            if t == 0 {
                return;
            }
            t -= 1;
            if support[t] < p - s + t {
                break;
            }
            if t == 0 {
                return;
            }
        }
        support[t] += 1;
        for u in t + 1..s {
            support[u] = support[u - 1] + 1;
        }
    }
}

/// Exhaustive `Reg_p(s)`, `1 ≤ s ≤ p ≤ 14`.
pub fn enum_regular(p: usize, s: usize) -> Result<RegularVectorSet> {
    check_enum_size(p)?;
    if s == 0 || s > p {
        return Err(Error::invalid(format!("sparsity s = {s} must lie in 1..={p}")));
    }
    let mut vectors = Vec::with_capacity(regular_count(p, s) as usize);
    for_each_regular(p, s, |x| vectors.push(Vector::new(x.to_vec()).expect("finite")));
    Ok(RegularVectorSet { p, s, vectors })
}

/// `max_{y ∈ Reg_p} ⟨v, y⟩`: for each sparsity the best `y` puts signed mass
/// on the `s` largest `|vᵢ|`, giving `(Σ top-s |vᵢ|)/√s`.
pub fn max_regular_pairing(v: &[f64]) -> f64 {
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut best = 0.0f64;
    let mut prefix = 0.0;
    for (s, m) in mags.iter().enumerate() {
        prefix += m;
        best = best.max(prefix / ((s + 1) as f64).sqrt());
    }
    best
}

/// `max_{x, y ∈ Reg_p} ⟨Ax, y⟩`, enumerating `x` exhaustively.
pub fn max_regular_bilinear(a: &DenseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::shape("square matrix", format!("{}x{}", a.rows(), a.cols())));
    }
    let p = a.rows();
    check_enum_size(p)?;
    let best = (1..=p)
        .into_par_iter()
        .map(|s| {
            let mut best = 0.0f64;
            let mut ax = vec![0.0; p];
            for_each_regular(p, s, |x| {
                for (i, o) in ax.iter_mut().enumerate() {
                    *o = a.row(i).iter().zip(x).map(|(u, v)| u * v).sum();
                }
                best = best.max(max_regular_pairing(&ax));
            });
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// `‖A‖ ≤ 12⌈ln 2p⌉² max_{x,y ∈ Reg_p} ⟨Ax, y⟩`.
pub fn reg_norm_bound_check(a: &DenseMatrix) -> Result<LemmaReport> {
    let pairing = max_regular_bilinear(a)?;
    let p = a.rows();
    let factor = 12.0 * (2.0 * p as f64).ln().ceil().powi(2);
    Ok(LemmaReport::exact(
        format!("reg_norm/p={p}"),
        spectral_norm(a)?,
        factor * pairing,
    ))
}

/// Equally spaced points on the unit circle with their covering radius
/// `2 sin(π/(2N))` (chord of half the angular spacing).
pub fn circle_net(points: usize) -> Result<(Vec<Vector>, f64)> {
    if points < 3 {
        return Err(Error::invalid("a circle net needs at least 3 points"));
    }
    let step = std::f64::consts::TAU / points as f64;
    let net = (0..points)
        .map(|k| {
            let t = step * k as f64;
            Vector::new(vec![t.cos(), t.sin()]).expect("finite")
        })
        .collect();
    let delta = 2.0 * (step / 4.0).sin() * (1.0 + 1e-12);
    Ok((net, delta))
}

/// `‖A‖ ≤ (1−δ)⁻² max_{x,y ∈ N} ⟨Ax, y⟩` for a δ-net `N` supplied by the caller.
pub fn net_norm_bound_check(a: &DenseMatrix, net: &[Vector], delta: f64) -> Result<LemmaReport> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1), got {delta}")));
    }
    if !a.is_square() {
        return Err(Error::shape("square matrix", format!("{}x{}", a.rows(), a.cols())));
    }
    if net.is_empty() {
        return Err(Error::invalid("net is empty"));
    }
    for v in net {
        if v.dim() != a.rows() {
            return Err(Error::shape(a.rows(), v.dim()));
        }
        if (v.norm2() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("net vectors must be unit length"));
        }
    }
    let images: Vec<Vec<f64>> = net
        .iter()
        .map(|x| a.mat_vec(x.as_slice()))
        .collect::<Result<_>>()?;
    let best = images
        .iter()
        .flat_map(|ax| net.iter().map(move |y| y.dot(ax)))
        .fold(f64::NEG_INFINITY, f64::max);
    let rhs = best / (1.0 - delta).powi(2);
    Ok(LemmaReport::exact(
        format!("net_norm/p={}", a.rows()),
        spectral_norm(a)?,
        rhs,
    ))
}

/// Standard deviation `‖Σ^{1/2}a‖₂ = √(aᵀΣa)` of `⟨a, Z⟩`.
pub fn linear_form_std(sigma: &SymmetricMatrix, a: &Vector) -> Result<f64> {
    let eig = sigma.eigenvalues()?;
    let norm = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = PSD_TOL * norm;
    if eig[0] < -tolerance {
        return Err(Error::NotPsd {
            min_eigenvalue: eig[0],
            tolerance,
        });
    }
    let std = sigma.bilinear(a.as_slice(), a.as_slice())?.max(0.0).sqrt();
    let cap = norm.sqrt() * a.norm2() + 1e-9;
    if std > cap {
        return Err(Error::BoundViolated {
            what: "linear-form standard deviation".into(),
            lhs: std,
            rhs: cap,
        });
    }
    Ok(std)
}

/// `E sup_A |⟨AZ,Z⟩ − E⟨AZ,Z⟩| ≤ 2 E sup_A |⟨AZ,Z′⟩|` by Monte Carlo, with the
/// inner expectation taken exactly as `tr(AΣ)`.
pub fn decoupling_check(
    family: &[SymmetricMatrix],
    sigma: &SymmetricMatrix,
    trials: usize,
    seed: u64,
) -> Result<LemmaReport> {
    if family.is_empty() {
        return Err(Error::invalid("matrix family is empty"));
    }
    if trials < 10_000 {
        return Err(Error::invalid(format!("decoupling check needs >= 10000 trials, got {trials}")));
    }
    let d = sigma.dim();
    if let Some(bad) = family.iter().find(|a| a.dim() != d) {
        return Err(Error::shape(d, bad.dim()));
    }
    let model = GaussianModel::new(sigma.clone())?;
    let means: Vec<f64> = family
        .iter()
        .map(|a| {
            (0..d)
                .map(|i| (0..d).map(|k| a.get(i, k) * sigma.get(k, i)).sum::<f64>())
                .sum()
        })
        .collect();
    let samples: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut g = vec![0.0; d];
            let mut z = vec![0.0; d];
            let mut zp = vec![0.0; d];
            SeedSpec::new(seed, 2 * t).rng().fill_normal(&mut g);
            model.transform(&g, &mut z);
            SeedSpec::new(seed, 2 * t + 1).rng().fill_normal(&mut g);
            model.transform(&g, &mut zp);
            let mut coupled = 0.0f64;
            let mut decoupled = 0.0f64;
            for (a, mean) in family.iter().zip(&means) {
                let az = a.mat_vec(&z).expect("dims checked");
                let q: f64 = az.iter().zip(&z).map(|(u, v)| u * v).sum();
                let qp: f64 = az.iter().zip(&zp).map(|(u, v)| u * v).sum();
                coupled = coupled.max((q - mean).abs());
                decoupled = decoupled.max(qp.abs());
            }
            (coupled, 2.0 * decoupled)
        })
        .collect();
    let (lhs, rhs): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    let lhs = Summary::of(&lhs);
    let rhs = Summary::of(&rhs);
    Ok(LemmaReport::new(
        format!("decoupling/d={d}/family={}", family.len()),
        lhs.mean,
        rhs.mean,
        combined_stderr(lhs.stderr, rhs.stderr),
        trials,
    ))
}

/// Built-in Lipschitz functions with known constants.
#[derive(Debug, Clone, PartialEq)]
pub enum LipschitzFn {
    /// `⟨a, z⟩`, Lipschitz constant `‖a‖₂`.
    Linear(Vector),
    /// `‖z‖∞`, constant 1.
    SupNorm,
    /// `‖z‖₂`, constant 1.
    EuclideanNorm,
}

impl LipschitzFn {
    /// `linear` (unit vector `(1,…,1)/√p`), `sup-norm` or `euclidean-norm`.
    pub fn from_tag(tag: &str, p: usize) -> Result<Self> {
        match tag {
            "linear" => {
                let v = 1.0 / (p as f64).sqrt();
                Ok(LipschitzFn::Linear(Vector::new(vec![v; p])?))
            }
            "sup-norm" => Ok(LipschitzFn::SupNorm),
            "euclidean-norm" => Ok(LipschitzFn::EuclideanNorm),
            other => Err(Error::invalid(format!("unknown Lipschitz function tag {other:?}"))),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            LipschitzFn::Linear(_) => "linear",
            LipschitzFn::SupNorm => "sup-norm",
            LipschitzFn::EuclideanNorm => "euclidean-norm",
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            LipschitzFn::Linear(a) => a.norm2(),
            LipschitzFn::SupNorm | LipschitzFn::EuclideanNorm => 1.0,
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            LipschitzFn::Linear(a) => a.dot(z),
            LipschitzFn::SupNorm => z.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            LipschitzFn::EuclideanNorm => z.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// `P{f(Z) − E f(Z) ≥ t} ≤ ½ exp(−t²/(2L²‖Σ‖))` for each `t` in the grid,
/// with the empirical mean standing in for `E f(Z)`.
pub fn concentration_check(
    f: &LipschitzFn,
    sigma: &SymmetricMatrix,
    trials: usize,
    t_grid: &[f64],
    seed: u64,
) -> Result<Vec<LemmaReport>> {
    if trials < 2 {
        return Err(Error::invalid("concentration check needs at least 2 trials"));
    }
    if let LipschitzFn::Linear(a) = f {
        if a.dim() != sigma.dim() {
            return Err(Error::shape(sigma.dim(), a.dim()));
        }
    }
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::invalid("t-grid values must be nonnegative"));
    }
    let model = GaussianModel::new(sigma.clone())?;
    let d = sigma.dim();
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut g = vec![0.0; d];
            let mut z = vec![0.0; d];
            SeedSpec::new(seed, k).rng().fill_normal(&mut g);
            model.transform(&g, &mut z);
            f.eval(&z)
        })
        .collect();
    let mean = Summary::of(&values).mean;
    let l = f.lipschitz();
    let sigma_norm = model.sigma_norm();
    Ok(t_grid
        .iter()
        .map(|&t| {
            let hits = values.iter().filter(|&&v| v - mean >= t).count();
            let q = hits as f64 / trials as f64;
            let stderr = (q * (1.0 - q) / trials as f64).sqrt();
            let rhs = if l * l * sigma_norm == 0.0 {
                if t > 0.0 { 0.0 } else { 0.5 }
            } else {
                0.5 * (-t * t / (2.0 * l * l * sigma_norm)).exp()
            };
            LemmaReport::new(format!("concentration/{}/t={t}", f.tag()), q, rhs, stderr, trials)
        })
        .collect())
}

/// `σₓ = (1/n)·(Σₖ ‖M(x∘Xₖ)‖₂²)^{1/2}`.
pub fn sigma_x(mask: &Mask, x: &Vector, batch: &SampleBatch) -> Result<f64> {
    let p = mask.dim();
    if x.dim() != p || batch.dim() != p {
        return Err(Error::shape(p, format!("x: {}, batch: {}", x.dim(), batch.dim())));
    }
    if (x.norm2() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("x must be a unit vector"));
    }
    Ok(sigma_x_unchecked(mask.matrix(), x.as_slice(), batch))
}

fn sigma_x_unchecked(m: &SymmetricMatrix, x: &[f64], batch: &SampleBatch) -> f64 {
    let p = m.dim();
    let mut v = vec![0.0; p];
    let mut total = 0.0;
    for row in batch.rows() {
        for ((vi, xi), ri) in v.iter_mut().zip(x).zip(row) {
            *vi = xi * ri;
        }
        for i in 0..p {
            let w: f64 = m.row(i).iter().zip(&v).map(|(a, b)| a * b).sum();
            total += w * w;
        }
    }
    total.sqrt() / batch.n() as f64
}

/// `E σₓ ≤ ‖M‖₁,₂/√n` for a model with `‖Σ‖ ≤ 1`.
pub fn sigma_x_mean_check(
    mask: &Mask,
    x: &Vector,
    model: &GaussianModel,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LemmaReport> {
    if model.sigma_norm() > 1.0 + 1e-9 {
        return Err(Error::invalid(format!(
            "sigma_x mean bound needs ||Sigma|| <= 1, got {}",
            model.sigma_norm()
        )));
    }
    if model.dim() != mask.dim() {
        return Err(Error::shape(mask.dim(), model.dim()));
    }
    if trials < 2 {
        return Err(Error::invalid("need at least 2 trials"));
    }
    // validate once; the loop uses the unchecked kernel
    sigma_x(mask, x, &draw_samples(model, 1, SeedSpec::new(seed, u64::MAX))?)?;
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let b = draw_samples(model, n, SeedSpec::new(seed, t)).expect("n >= 1");
            sigma_x_unchecked(mask.matrix(), x.as_slice(), &b)
        })
        .collect();
    let s = Summary::of(&values);
    Ok(LemmaReport::new(
        format!("sigma_x_mean/p={}/n={n}", mask.dim()),
        s.mean,
        mask.norm_12() / (n as f64).sqrt(),
        s.stderr,
        trials,
    ))
}

/// `|σₓ(B) − σₓ(B′)| ≤ ‖M‖/(√r·n)·‖B − B′‖` for `x ∈ Reg_p(r)`.
///
/// Even trials pair two independent standard normal batches; odd trials pair a
/// batch with a small perturbation of itself, where the bound is tightest.
/// Reports the largest observed ratio of the two sides against 1.
pub fn sigma_x_lipschitz_check(mask: &Mask, r: usize, n: usize, trials: usize, seed: u64) -> Result<LemmaReport> {
    let p = mask.dim();
    let regular = enum_regular(p, r)?;
    if n == 0 || trials == 0 {
        return Err(Error::invalid("need n >= 1 and trials >= 1"));
    }
    let lip = mask.norm_op() / ((r as f64).sqrt() * n as f64);
    let model = GaussianModel::identity(p);
    let ratios: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut pick = SeedSpec::new(seed, 3 * t).substream(u64::MAX);
            let x = &regular.vectors[pick.below(regular.vectors.len() as u64) as usize];
            let b = draw_samples(&model, n, SeedSpec::new(seed, 3 * t)).expect("n >= 1");
            let bp = if t % 2 == 0 {
                draw_samples(&model, n, SeedSpec::new(seed, 3 * t + 1)).expect("n >= 1")
            } else {
                let noise = draw_samples(&model, n, SeedSpec::new(seed, 3 * t + 2)).expect("n >= 1");
                let obs = b
                    .observations()
                    .iter()
                    .zip(noise.observations())
                    .map(|(u, v)| u + 1e-2 * v)
                    .collect();
                SampleBatch::new(n, p, obs, noise.seed()).expect("finite")
            };
            lipschitz_ratio(mask, x, &b, &bp, lip)
        })
        .collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    Ok(LemmaReport::new(
        format!("sigma_x_lipschitz/p={p}/r={r}/n={n}"),
        worst,
        1.0,
        0.0,
        trials,
    ))
}

/// `|σₓ(B) − σₓ(B′)| / (L·‖B − B′‖ + 1e−9)`.
pub fn lipschitz_ratio(mask: &Mask, x: &Vector, b: &SampleBatch, bp: &SampleBatch, lip: f64) -> f64 {
    let gap = (sigma_x_unchecked(mask.matrix(), x.as_slice(), b)
        - sigma_x_unchecked(mask.matrix(), x.as_slice(), bp))
    .abs();
    let dist = b
        .observations()
        .iter()
        .zip(bp.observations())
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt();
    gap / (lip * dist + 1e-9)
}
