//! Closed-form error bounds, envelopes and sample-size rules.
//!
//! All logarithms are natural. Every evaluator returns a [`BoundReport`] that
//! echoes the inputs it was given, so a row of harness output can be checked
//! by hand.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute constant for the `C`-parameterized bounds.
pub const DEFAULT_C: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    BaiYin,
    Minor,
    TheoremMain,
    Refined,
    Nmp,
    Centering,
    IdentityCase,
}

impl BoundKind {
    pub fn tag(self) -> &'static str {
        match self {
            BoundKind::BaiYin => "bai_yin",
            BoundKind::Minor => "minor",
            BoundKind::TheoremMain => "theorem_main",
            BoundKind::Refined => "refined",
            BoundKind::Nmp => "nmp",
            BoundKind::Centering => "centering",
            BoundKind::IdentityCase => "identity_case",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Inputs a bound was evaluated at; fields a bound does not use stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub m: Option<usize>,
    pub norm_12: Option<f64>,
    pub norm_op: Option<f64>,
    pub sigma_norm: Option<f64>,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: BoundKind,
    pub value: f64,
    pub inputs: BoundInputs,
}

/// `(2√(p/n) + p/n)·‖Σ‖`, the o(1) term taken as zero.
pub fn bound_bai_yin(p: usize, n: usize, sigma_norm: f64) -> BoundReport {
    BoundReport {
        name: BoundKind::BaiYin,
        value: envelope(p as f64 / n as f64) * sigma_norm,
        inputs: BoundInputs {
            n: Some(n),
            p: Some(p),
            sigma_norm: Some(sigma_norm),
            ..Default::default()
        },
    }
}

/// `(2√(m/n) + m/n)·‖Σ‖` for an `m×m` minor.
pub fn bound_minor(m: usize, n: usize, sigma_norm: f64) -> BoundReport {
    BoundReport {
        name: BoundKind::Minor,
        value: envelope(m as f64 / n as f64) * sigma_norm,
        inputs: BoundInputs {
            n: Some(n),
            m: Some(m),
            sigma_norm: Some(sigma_norm),
            ..Default::default()
        },
    }
}

fn envelope(ratio: f64) -> f64 {
    2.0 * ratio.sqrt() + ratio
}

/// `C·ln³(2p)·(‖M‖₁,₂/√n + ‖M‖/n)·‖Σ‖`.
pub fn bound_theorem_main(norm_12: f64, norm_op: f64, n: usize, p: usize, sigma_norm: f64, c: f64) -> BoundReport {
    let n_f = n as f64;
    let log = (2.0 * p as f64).ln();
    BoundReport {
        name: BoundKind::TheoremMain,
        value: c * log.powi(3) * (norm_12 / n_f.sqrt() + norm_op / n_f) * sigma_norm,
        inputs: BoundInputs {
            n: Some(n),
            p: Some(p),
            norm_12: Some(norm_12),
            norm_op: Some(norm_op),
            sigma_norm: Some(sigma_norm),
            c: Some(c),
            ..Default::default()
        },
    }
}

/// Explicit-constant bound on `E‖M·Σ′ₙ‖`,
/// `84‖M‖₁,₂⌈ln 2ep⌉^{5/2}/√n + 263‖M‖⌈ln 2ep⌉³/n`, scaled by `‖Σ‖` and
/// doubled so that it bounds `E‖M·Σ̂ₙ − M·Σ‖` via decoupling.
pub fn bound_refined(norm_12: f64, norm_op: f64, n: usize, p: usize, sigma_norm: f64) -> BoundReport {
    BoundReport {
        name: BoundKind::Refined,
        value: 2.0 * refined_decoupled(norm_12, norm_op, n, p) * sigma_norm,
        inputs: BoundInputs {
            n: Some(n),
            p: Some(p),
            norm_12: Some(norm_12),
            norm_op: Some(norm_op),
            sigma_norm: Some(sigma_norm),
            ..Default::default()
        },
    }
}

/// The undoubled explicit bound on `E‖M·Σ′ₙ‖` for `‖Σ‖ = 1`.
pub fn refined_decoupled(norm_12: f64, norm_op: f64, n: usize, p: usize) -> f64 {
    let n_f = n as f64;
    let k = (2.0 * std::f64::consts::E * p as f64).ln().ceil();
    84.0 * norm_12 / n_f.sqrt() * k.powf(2.5) + 263.0 * norm_op / n_f * k.powi(3)
}

/// Smallest `n ≥ 1` with `n ≥ 4C²ε⁻²·m·ln⁶(2p)`.
pub fn sample_size_partial(m: usize, p: usize, eps: f64, c: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("C must be positive, got {c}")));
    }
    if m == 0 || p == 0 {
        return Err(Error::invalid("m and p must be at least 1"));
    }
    let raw = 4.0 * c * c / (eps * eps) * m as f64 * (2.0 * p as f64).ln().powi(6);
    Ok((raw.ceil() as u64).max(1))
}

/// [`sample_size_partial`] packaged as a report (`value` is the sample size).
pub fn bound_nmp(m: usize, p: usize, eps: f64, c: f64) -> Result<BoundReport> {
    let n = sample_size_partial(m, p, eps, c)?;
    Ok(BoundReport {
        name: BoundKind::Nmp,
        value: n as f64,
        inputs: BoundInputs {
            p: Some(p),
            m: Some(m),
            c: Some(c),
            ..Default::default()
        },
    })
}

/// Extra error from centering with the sample mean: `C‖M‖‖Σ‖ln(2p)/n`.
pub fn bound_centering(norm_op: f64, sigma_norm: f64, p: usize, n: usize, c: f64) -> BoundReport {
    BoundReport {
        name: BoundKind::Centering,
        value: c * norm_op * sigma_norm * (2.0 * p as f64).ln() / n as f64,
        inputs: BoundInputs {
            n: Some(n),
            p: Some(p),
            norm_op: Some(norm_op),
            sigma_norm: Some(sigma_norm),
            c: Some(c),
            ..Default::default()
        },
    }
}

/// `√(ln(2p)/n)`, the scale of `E max_i |σ̂_ii − 1|` when `Σ = M = I`.
pub fn bound_identity_case(p: usize, n: usize) -> BoundReport {
    BoundReport {
        name: BoundKind::IdentityCase,
        value: ((2.0 * p as f64).ln() / n as f64).sqrt(),
        inputs: BoundInputs {
            n: Some(n),
            p: Some(p),
            ..Default::default()
        },
    }
}
