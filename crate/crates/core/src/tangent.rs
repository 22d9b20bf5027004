//! The tangent space of the mode-1 matricization at a rank-`r1` point, its
//! projector, and the fused projection + sequential truncation.
//!
//! For a point with singular bases `U` (left) and `V` (right), the projector
//! acts on the mode-1 matricization `Y` as
//! `U U^T Y + Y V V^T - U U^T Y V V^T`. Its image has rank at most `2 r1`
//! and factors as `[U Q1] M [V Q2]^T`, which the fused path exploits to
//! avoid any dense SVD.

use crate::error::{shape_mismatch, Error, Result};
use crate::flops::{FlopCount, FlopCounter};
use crate::hosvd::{mode1_first_order, truncate_mode, TuckerFactorization};
use crate::linalg::{apply_sign_convention, gemm_into, matmul_counted, qr_thin_counted, svd_truncated_counted, Matrix};
use crate::tensor::{DenseTensor, MultilinearRank};

/// Left and right singular bases of a rank-`r1` mode-1 matricization.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeOneBasis {
    pub u: Matrix,
    pub v: Matrix,
}

/// `left * mid * right^T` with orthonormal `left` and `right`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredTangentPoint {
    pub left: Matrix,
    pub mid: Matrix,
    pub right: Matrix,
}

/// Output of [`fused_retract`].
#[derive(Clone, Debug)]
pub struct Retraction {
    pub tucker: TuckerFactorization,
    /// Singular bases of the rank-`r1` truncation of the projected input.
    pub basis: ModeOneBasis,
    pub flops: FlopCount,
}

impl ModeOneBasis {
    pub fn new(u: Matrix, v: Matrix) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(shape_mismatch(&[u.rows(), u.cols()], &[v.rows(), v.cols()]));
        }
        Ok(Self { u, v })
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    fn check(&self, z: &DenseTensor) -> Result<()> {
        let n1 = z.dims()[0];
        let rest = z.len() / n1;
        if self.u.rows() != n1 || self.v.rows() != rest || self.u.cols() != self.v.cols() {
            return Err(shape_mismatch(
                &[n1, rest],
                &[self.u.rows(), self.v.rows()],
            ));
        }
        Ok(())
    }
}

impl FactoredTangentPoint {
    pub fn to_matrix(&self) -> Matrix {
        let mut c = FlopCounter::default();
        let lm = matmul_counted(self.left.as_ref(), self.mid.as_ref(), &mut c);
        matmul_counted(lm.as_ref(), self.right.t(), &mut c)
    }

    pub fn to_tensor(&self, dims: &[usize]) -> Result<DenseTensor> {
        DenseTensor::tensorize(&self.to_matrix(), dims, 0)
    }

    /// Frobenius norm of the represented matrix.
    pub fn frob_norm(&self) -> f64 {
        self.mid.frob_norm()
    }
}

/// Dense projection of `z` onto the tangent space.
pub fn project_dense(z: &DenseTensor, basis: &ModeOneBasis) -> Result<DenseTensor> {
    project_dense_counted(z, basis, &mut FlopCounter::default())
}

pub(crate) fn project_dense_counted(
    z: &DenseTensor,
    basis: &ModeOneBasis,
    counter: &mut FlopCounter,
) -> Result<DenseTensor> {
    basis.check(z)?;
    let y = z.mode1_view();
    let (u, v) = (&basis.u, &basis.v);
    // P1 = U (U^T Y); out = P1 + (Y - P1) V V^T
    let uty = matmul_counted(u.t(), y, counter);
    let p1 = matmul_counted(u.as_ref(), uty.as_ref(), counter);
    let resid = y.to_matrix().sub(&p1);
    let rv = matmul_counted(resid.as_ref(), v.as_ref(), counter);
    let mut out = p1.into_data();
    gemm_into(1.0, rv.as_ref(), v.t(), 1.0, &mut out, counter);
    DenseTensor::new(z.dims().to_vec(), out)
}

/// Orthonormal `Q` with `range([b y]) = range([b Q])`, `Q ⟂ b`, and the
/// coefficient block `R` such that `y - b b^T y = Q R`.
///
/// `Q` has `min(n, 2k) - k` columns for an `n x k` basis `b`.
pub(crate) fn complement_qr(b: &Matrix, y: &Matrix, counter: &mut FlopCounter) -> Result<(Matrix, Matrix)> {
    let k = b.cols();
    let qr = qr_thin_counted(Matrix::hcat(&[b, y])?.as_ref(), counter);
    let kk = qr.q.cols();
    Ok((qr.q.block(0..b.rows(), k..kk), qr.r.block(k..kk, k..k + y.cols())))
}

/// Factored projection of `z` onto the tangent space.
pub fn project_factored(z: &DenseTensor, basis: &ModeOneBasis) -> Result<FactoredTangentPoint> {
    project_factored_counted(z, basis, &mut FlopCounter::default())
}

pub(crate) fn project_factored_counted(
    z: &DenseTensor,
    basis: &ModeOneBasis,
    counter: &mut FlopCounter,
) -> Result<FactoredTangentPoint> {
    basis.check(z)?;
    let y = z.mode1_view();
    let (u, v) = (&basis.u, &basis.v);
    let r = basis.rank();
    let zv = matmul_counted(y, v.as_ref(), counter);
    let ztu = matmul_counted(y.t(), u.as_ref(), counter);
    let c = matmul_counted(u.t(), zv.as_ref(), counter);
    // Y1 = (I - U U^T) Z V, Y2 = (I - V V^T) Z^T U
    let y1 = zv.sub(&matmul_counted(u.as_ref(), c.as_ref(), counter));
    let y2 = ztu.sub(&matmul_counted(v.as_ref(), c.t(), counter));
    let (q1, r1) = complement_qr(u, &y1, counter)?;
    let (q2, r2) = complement_qr(v, &y2, counter)?;
    let (k1, k2) = (q1.cols(), q2.cols());
    let mid = Matrix::from_fn(r + k1, r + k2, |i, j| match (i < r, j < r) {
        (true, true) => c.get(i, j),
        (true, false) => r2.get(j - r, i),
        (false, true) => r1.get(i - r, j),
        (false, false) => 0.0,
    });
    Ok(FactoredTangentPoint {
        left: Matrix::hcat(&[u, &q1])?,
        mid,
        right: Matrix::hcat(&[v, &q2])?,
    })
}

/// Sequential truncation of the projection of `z`, mode 0 first, computed
/// from the factored projection.
///
/// Products are tallied as leading only when at least two of their
/// dimensions exceed `2 * max(r)`.
pub fn fused_retract(z: &DenseTensor, basis: &ModeOneBasis, r: &MultilinearRank) -> Result<Retraction> {
    r.check_against(z.dims())?;
    if basis.rank() != r[0] {
        return Err(Error::InvalidArgument(format!(
            "basis rank {} differs from r1 = {}",
            basis.rank(),
            r[0]
        )));
    }
    let mut counter = flop_counter_for(r);
    let p = project_factored_counted(z, basis, &mut counter)?;
    let svd = svd_truncated_counted(p.mid.as_ref(), r[0], &mut counter)?;
    let mut u1 = matmul_counted(p.left.as_ref(), svd.u.as_ref(), &mut counter);
    let mut v1 = matmul_counted(p.right.as_ref(), svd.v.as_ref(), &mut counter);
    apply_sign_convention(&mut u1, &mut v1);

    let mut sv = v1.clone();
    sv.scale_cols(&svd.s);
    let mut dims = z.dims().to_vec();
    dims[0] = r[0];
    let mut work = DenseTensor::tensorize(&sv.transpose(), &dims, 0)?;
    let mut factors: Vec<Option<Matrix>> = vec![None; z.order()];
    factors[0] = Some(u1.clone());
    for k in mode1_first_order(r).into_iter().skip(1) {
        work = truncate_mode(&work, k, r[k], &mut factors[k], &mut counter)?;
    }
    let factors = factors.into_iter().map(|u| u.expect("every mode visited")).collect();
    Ok(Retraction {
        tucker: TuckerFactorization::new(work, factors)?,
        basis: ModeOneBasis { u: u1, v: v1 },
        flops: counter.count(),
    })
}

pub(crate) fn flop_counter_for(r: &MultilinearRank) -> FlopCounter {
    FlopCounter::new(2 * r.iter().copied().max().unwrap_or(0))
}

/// `||P(X) - X|| / ||X||` for `X = compose(x)`; 0 when `X` vanishes.
pub fn lemma31_check(x: &TuckerFactorization, basis: &ModeOneBasis) -> Result<f64> {
    let dense = x.compose();
    let norm = dense.frob_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(project_dense(&dense, basis)?.distance(&dense)? / norm)
}
