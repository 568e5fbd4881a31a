//! Masked covariance estimation for Gaussian data.
//!
//! Given `n` observations of `N(0, Σ)` and a fixed symmetric mask `M`, the
//! estimator `M·Σ̂ₙ` (entrywise product) recovers the masked part of `Σ` at a
//! rate governed by `‖M‖₁,₂/√n + ‖M‖/n` up to logarithmic factors. This crate
//! provides
//!
//! - dense linear algebra and the norms the rates are expressed in ([`linalg`]),
//! - seeded Gaussian sampling and covariance constructions ([`sampler`]),
//! - banding, tapering, thresholding and minor masks ([`masks`]),
//! - closed-form bound evaluators ([`bounds`]),
//! - Monte Carlo and exhaustive checks of the supporting inequalities ([`verify`]),
//! - an experiment runner with log-log scaling fits ([`harness`]).

pub mod bounds;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod masks;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod verify;

pub use bounds::{BoundKind, BoundReport};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ScalingReport, TrialResult};
pub use linalg::{hadamard, norm_one_two, spectral_norm, sym_sqrt, DenseMatrix, Hadamard, SymmetricMatrix, Vector};
pub use masks::{Mask, MaskKind};
pub use rng::SeedSpec;
pub use sampler::{GaussianModel, SampleBatch};
pub use verify::LemmaReport;
