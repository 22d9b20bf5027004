//! Truncated and sequentially truncated higher-order SVD, and the mode-1
//! truncation used to build the substitution iterate.

use crate::error::{shape_mismatch, Error, Result};
use crate::flops::FlopCounter;
use crate::linalg::{svd_padded_counted, Matrix};
use crate::tangent::ModeOneBasis;
use crate::tensor::{check_permutation, DenseTensor, MultilinearRank};

/// `core x_1 U_1 x_2 ... x_d U_d` with orthonormal factors.
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerFactorization {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
}

/// Per-mode discarded singular-value energy `sqrt(sum_{j > r_i} sigma_j^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailEnergies(pub Vec<f64>);

impl TailEnergies {
    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.0.iter().map(|t| t * t).sum()
    }
}

impl TuckerFactorization {
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::InvalidArgument(format!(
                "{} factors for an order-{} core",
                factors.len(),
                core.order()
            )));
        }
        for (u, &r) in factors.iter().zip(core.dims()) {
            if u.cols() != r {
                return Err(shape_mismatch(&[u.rows(), r], &[u.rows(), u.cols()]));
            }
        }
        Ok(Self { core, factors })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    pub fn ranks(&self) -> MultilinearRank {
        MultilinearRank::new(self.core.dims().to_vec())
    }

    /// Relabels modes: mode `i` of the result is mode `perm[i]` of `self`.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<Self> {
        let core = self.core.permute(perm)?;
        let factors = perm.iter().map(|&p| self.factors[p].clone()).collect();
        Self::new(core, factors)
    }

    pub fn compose(&self) -> DenseTensor {
        self.compose_counted(&mut FlopCounter::default())
    }

    pub(crate) fn compose_counted(&self, counter: &mut FlopCounter) -> DenseTensor {
        let mut t = self.core.clone();
        for (k, u) in self.factors.iter().enumerate() {
            t = t
                .mode_product_counted(k, u.as_ref(), counter)
                .expect("factor shapes checked at construction");
        }
        t
    }
}

fn check_ranks(z: &DenseTensor, r: &MultilinearRank) -> Result<()> {
    r.check_against(z.dims())
}

fn leading_left_basis(z: &DenseTensor, mode: usize, r: usize, counter: &mut FlopCounter) -> Result<Matrix> {
    let svd = if mode == 0 {
        svd_padded_counted(z.mode1_view(), r, counter)?
    } else {
        svd_padded_counted(z.matricize(mode)?.as_ref(), r, counter)?
    };
    Ok(svd.u)
}

/// Independent truncation of every mode of `z`.
pub fn t_hosvd(z: &DenseTensor, r: &MultilinearRank) -> Result<TuckerFactorization> {
    t_hosvd_counted(z, r, &mut FlopCounter::default())
}

pub(crate) fn t_hosvd_counted(
    z: &DenseTensor,
    r: &MultilinearRank,
    counter: &mut FlopCounter,
) -> Result<TuckerFactorization> {
    check_ranks(z, r)?;
    let factors = (0..z.order())
        .map(|k| leading_left_basis(z, k, r[k], counter))
        .collect::<Result<Vec<_>>>()?;
    let mut core = z.clone();
    for (k, u) in factors.iter().enumerate() {
        core = core.mode_product_counted(k, u.t(), counter)?;
    }
    TuckerFactorization::new(core, factors)
}

/// Ascending rank, ties by mode index.
pub fn default_order(r: &MultilinearRank) -> Vec<usize> {
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by_key(|&k| r[k]);
    order
}

/// Mode 0 first, the rest by ascending rank.
pub fn mode1_first_order(r: &MultilinearRank) -> Vec<usize> {
    let mut order = vec![0];
    order.extend(default_order(r).into_iter().filter(|&k| k != 0));
    order
}

/// Sequential truncation of the modes of `z` in `order`.
pub fn st_hosvd(z: &DenseTensor, r: &MultilinearRank, order: &[usize]) -> Result<TuckerFactorization> {
    st_hosvd_counted(z, r, order, &mut FlopCounter::default())
}

pub(crate) fn st_hosvd_counted(
    z: &DenseTensor,
    r: &MultilinearRank,
    order: &[usize],
    counter: &mut FlopCounter,
) -> Result<TuckerFactorization> {
    check_ranks(z, r)?;
    check_permutation(order, z.order())?;
    let mut factors: Vec<Option<Matrix>> = vec![None; z.order()];
    let mut work = z.clone();
    for &k in order {
        work = truncate_mode(&work, k, r[k], &mut factors[k], counter)?;
    }
    let factors = factors.into_iter().map(|u| u.expect("every mode visited")).collect();
    TuckerFactorization::new(work, factors)
}

/// Replaces mode `k` of `work` by `Sigma V^T` of its rank-`r` SVD. When the
/// matricization has fewer than `r` columns the factor is completed with
/// orthonormal directions carrying zero weight.
pub(crate) fn truncate_mode(
    work: &DenseTensor,
    k: usize,
    r: usize,
    factor: &mut Option<Matrix>,
    counter: &mut FlopCounter,
) -> Result<DenseTensor> {
    let svd = if k == 0 {
        svd_padded_counted(work.mode1_view(), r, counter)?
    } else {
        svd_padded_counted(work.matricize(k)?.as_ref(), r, counter)?
    };
    let mut dims = work.dims().to_vec();
    dims[k] = r;
    let mut sv = svd.v;
    sv.scale_cols(&svd.s);
    let next = DenseTensor::tensorize(&sv.transpose(), &dims, k)?;
    *factor = Some(svd.u);
    Ok(next)
}

/// Best approximation of `z` whose mode-1 matricization has rank `r1`,
/// with the singular bases that define it.
pub fn h_mode1(z: &DenseTensor, r1: usize) -> Result<(DenseTensor, ModeOneBasis)> {
    if r1 > z.dims()[0] {
        return Err(Error::RankExceedsDimension {
            mode: 0,
            rank: r1,
            dim: z.dims()[0],
        });
    }
    let svd = svd_padded_counted(z.mode1_view(), r1, &mut FlopCounter::default())?;
    let approx = DenseTensor::tensorize(&svd.reconstruct(), z.dims(), 0)?;
    Ok((approx, ModeOneBasis { u: svd.u, v: svd.v }))
}

/// Tail energies of `z` against `r`. Modes whose rank fits entirely get 0.
pub fn tail_energies(z: &DenseTensor, r: &MultilinearRank) -> Result<TailEnergies> {
    if r.len() != z.order() {
        return Err(shape_mismatch(z.dims(), r));
    }
    let taus = (0..z.order())
        .map(|k| {
            let s = z.mode_singular_values(k)?;
            Ok(s.iter().skip(r[k]).map(|x| x * x).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TailEnergies(taus))
}
