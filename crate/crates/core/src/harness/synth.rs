//! Seeded synthetic ground truths and completion instances.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hosvd::{t_hosvd, TuckerFactorization};
use crate::linalg::{qr_thin, Matrix};
use crate::measurement::{add_noise, sample_omega, MeasurementOperator, NoiseSpec, SamplingOperator};
use crate::rng::{rng_from_seed, Prng};
use crate::solvers::kappa1;
use crate::tensor::{DenseTensor, MultilinearRank};

#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub tucker: TuckerFactorization,
    pub dense: DenseTensor,
    /// `sigma_1 / sigma_{r1}` of the mode-1 matricization.
    pub kappa1: f64,
}

/// A ground truth observed through entry sampling, `y = P_Omega(T + J)`.
#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    pub truth: GroundTruth,
    pub op: SamplingOperator,
    pub y: Vec<f64>,
    pub noise: NoiseSpec,
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Prng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn finish(tucker: TuckerFactorization) -> Result<GroundTruth> {
    let dense = tucker.compose();
    let kappa1 = kappa1(&dense, tucker.core.dims()[0])?;
    Ok(GroundTruth {
        tucker,
        dense,
        kappa1,
    })
}

/// Truncated HOSVD at `rank` of a standard Gaussian tensor.
pub fn synth_tensor(dims: &[usize], rank: &MultilinearRank, seed: u64) -> Result<GroundTruth> {
    rank.check_against(dims)?;
    let mut rng = rng_from_seed(seed);
    let z = DenseTensor::from_fn(dims, |_| StandardNormal.sample(&mut rng))?;
    finish(t_hosvd(&z, rank)?)
}

/// `n x n x n` tensor with core `S(j1, j2, j3) = s_{j2} / sqrt(r)` when
/// `j1 + j2 + j3` is divisible by `r` (1-based indices) and zero otherwise,
/// where `s` runs linearly from 1 down to `1 / kappa2`, and random
/// orthonormal factors. Its mode-2 matricization has condition number
/// `kappa2`; modes 1 and 3 are perfectly conditioned.
pub fn synth_conditioned(n: usize, r: usize, kappa2: f64, seed: u64) -> Result<GroundTruth> {
    if !(kappa2 >= 1.0 && kappa2.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa2 = {kappa2} must be >= 1")));
    }
    if r == 0 || r > n {
        return Err(Error::RankExceedsDimension { mode: 0, rank: r, dim: n });
    }
    let sigma = |j: usize| {
        if r == 1 {
            1.0
        } else {
            1.0 - (j - 1) as f64 * (1.0 - 1.0 / kappa2) / (r - 1) as f64
        }
    };
    let scale = (r as f64).sqrt();
    let core = DenseTensor::from_fn(&[r, r, r], |i| {
        let (j1, j2, j3) = (i[0] + 1, i[1] + 1, i[2] + 1);
        if (j1 + j2 + j3) % r == 0 {
            sigma(j2) / scale
        } else {
            0.0
        }
    })?;
    let mut rng = rng_from_seed(seed);
    let factors = (0..3)
        .map(|_| qr_thin(gaussian_matrix(n, r, &mut rng).as_ref()).q)
        .collect();
    finish(TuckerFactorization::new(core, factors)?)
}

impl SyntheticInstance {
    /// Samples `round(rho N)` entries of `truth + noise`.
    pub fn completion(
        truth: GroundTruth,
        rho: f64,
        omega_seed: u64,
        noise: NoiseSpec,
    ) -> Result<Self> {
        let op = sample_omega(truth.dense.dims(), rho, omega_seed)?;
        let observed = add_noise(&truth.dense, &noise);
        let y = op.apply(&observed)?;
        Ok(Self { truth, op, y, noise })
    }
}
