use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::hosvd::TuckerFactorization;
use crate::linalg::{qr_thin, Matrix};
use crate::tensor::DenseTensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_tensor(dims: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    DenseTensor::from_fn(dims, |_| StandardNormal.sample(rng)).unwrap()
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn orthonormal(n: usize, r: usize, rng: &mut ChaCha8Rng) -> Matrix {
    qr_thin(gaussian_matrix(n, r, rng).as_ref()).q
}

/// Gaussian core times random orthonormal factors.
pub fn low_rank_tucker(dims: &[usize], ranks: &[usize], rng: &mut ChaCha8Rng) -> TuckerFactorization {
    let core = gaussian_tensor(ranks, rng);
    let factors = dims
        .iter()
        .zip(ranks)
        .map(|(&n, &r)| orthonormal(n, r, rng))
        .collect();
    TuckerFactorization::new(core, factors).unwrap()
}

pub fn low_rank(dims: &[usize], ranks: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    low_rank_tucker(dims, ranks, rng).compose()
}

pub fn orthonormality_error(u: &Matrix) -> f64 {
    let g = crate::linalg::matmul(u.t(), u.as_ref()).unwrap();
    g.sub(&Matrix::identity(u.cols())).frob_norm()
}

pub fn rel_diff(a: &DenseTensor, b: &DenseTensor) -> f64 {
    let scale = b.frob_norm().max(f64::MIN_POSITIVE);
    a.distance(b).unwrap() / scale
}
