//! Low-multilinear-rank tensor recovery.
//!
//! The crate implements single-mode quasi Riemannian gradient descent
//! (SM-QRGD) for recovering a Tucker-structured tensor from linear
//! measurements, together with the TIHT, SeMPIHT and RGD baselines, the
//! HOSVD machinery they share, and a harness that runs the standard
//! completion experiments and writes CSV.
//!
//! Modes are 0-based throughout the library API. The CLI and the config
//! format use 1-based mode numbers.

pub mod error;
pub mod flops;
pub mod harness;
pub mod hosvd;
pub mod linalg;
pub mod measurement;
pub mod rng;
pub mod solvers;
pub mod tangent;
pub mod tensor;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use flops::{FlopCount, FlopCounter};
pub use hosvd::{TailEnergies, TuckerFactorization};
pub use linalg::{MatRef, Matrix};
pub use measurement::{GaussianOperator, MeasurementOperator, NoiseSpec, SamplingOperator};
pub use tangent::{FactoredTangentPoint, ModeOneBasis};
pub use tensor::{DenseTensor, MultilinearRank};
