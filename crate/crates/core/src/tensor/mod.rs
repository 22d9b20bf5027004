//! Dense d-order tensors and the multilinear primitives built on them.
//!
//! Storage is column-major in the mode-1 sense: the first index varies
//! fastest, so the mode-1 matricization is the flat buffer read as an
//! `n1 x (n2*...*nd)` column-major matrix. Column `j` of the mode-k
//! matricization enumerates the remaining indices with the lowest mode
//! varying fastest.

mod io;

use std::ops::Deref;

pub use io::{read_dtns, read_text, write_dtns, write_text, DTNS_MAGIC};

use crate::error::{shape_mismatch, Error, Result};
use crate::flops::FlopCounter;
use crate::linalg::{self, gemm_into, MatRef, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

/// Per-mode ranks `(r1, ..., rd)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultilinearRank(Vec<usize>);

impl MultilinearRank {
    pub fn new(ranks: Vec<usize>) -> Self {
        Self(ranks)
    }

    pub fn uniform(order: usize, r: usize) -> Self {
        Self(vec![r; order])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Checks `1 <= r_i <= n_i` for every mode.
    pub fn check_against(&self, dims: &[usize]) -> Result<()> {
        if self.0.len() != dims.len() {
            return Err(shape_mismatch(dims, &self.0));
        }
        for (mode, (&rank, &dim)) in self.0.iter().zip(dims).enumerate() {
            if rank > dim {
                return Err(Error::RankExceedsDimension { mode, rank, dim });
            }
            if rank == 0 {
                return Err(Error::InvalidArgument(format!("rank of mode {mode} is zero")));
            }
        }
        Ok(())
    }
}

impl Deref for MultilinearRank {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for MultilinearRank {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.len() < 2 {
        return Err(Error::InvalidShape(format!(
            "tensor order must be at least 2, got {}",
            dims.len()
        )));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidShape(format!("zero-length mode in {dims:?}")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::InvalidShape(format!("{dims:?} overflows")))
}

/// `(left, n_k, right)` block sizes around mode `k`.
fn split_at_mode(dims: &[usize], mode: usize) -> (usize, usize, usize) {
    let left = dims[..mode].iter().product();
    let right = dims[mode + 1..].iter().product();
    (left, dims[mode], right)
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_dims(&dims)?;
        if data.len() != len {
            return Err(Error::InvalidShape(format!(
                "{} values for dims {dims:?} (expected {len})",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let len = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Fills entries from their multi-index, visited in storage order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        let mut idx = vec![0usize; dims.len()];
        for x in t.data.iter_mut() {
            *x = f(&idx);
            for (i, n) in idx.iter_mut().zip(dims) {
                *i += 1;
                if *i < *n {
                    break;
                }
                *i = 0;
            }
        }
        Ok(t)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &n) in idx.iter().zip(&self.dims) {
            debug_assert!(i < n);
            lin += i * stride;
            stride *= n;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], x: f64) {
        let lin = self.linear_index(idx);
        self.data[lin] = x;
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Zero-copy mode-1 (mode index 0) matricization.
    pub fn mode1_view(&self) -> MatRef<'_> {
        let n1 = self.dims[0];
        MatRef::col_major(&self.data, n1, self.data.len() / n1).expect("consistent dims")
    }

    /// Mode-`mode` matricization, `n_mode x prod(other dims)`.
    pub fn matricize(&self, mode: usize) -> Result<Matrix> {
        self.check_mode(mode)?;
        if mode == 0 {
            return Ok(self.mode1_view().to_matrix());
        }
        let (left, nk, right) = split_at_mode(&self.dims, mode);
        let cols = left * right;
        let mut out = vec![0.0; self.data.len()];
        for b in 0..right {
            for i in 0..nk {
                let src = &self.data[left * i + left * nk * b..][..left];
                for (a, &x) in src.iter().enumerate() {
                    out[i + nk * (a + left * b)] = x;
                }
            }
        }
        Matrix::from_col_major(nk, cols, out)
    }

    /// Inverse of [`DenseTensor::matricize`] for the same `dims` and `mode`.
    pub fn tensorize(m: &Matrix, dims: &[usize], mode: usize) -> Result<Self> {
        let len = check_dims(dims)?;
        if mode >= dims.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: dims.len(),
            });
        }
        let (left, nk, right) = split_at_mode(dims, mode);
        if m.rows() != nk || m.cols() != left * right {
            return Err(shape_mismatch(&[nk, left * right], &[m.rows(), m.cols()]));
        }
        if mode == 0 {
            return Self::new(dims.to_vec(), m.data().to_vec());
        }
        let src = m.data();
        let mut data = vec![0.0; len];
        for b in 0..right {
            for i in 0..nk {
                let dst = &mut data[left * i + left * nk * b..][..left];
                for (a, x) in dst.iter_mut().enumerate() {
                    *x = src[i + nk * (a + left * b)];
                }
            }
        }
        Self::new(dims.to_vec(), data)
    }

    /// Mode product `self x_mode u` with `u` of shape `m x n_mode`.
    pub fn mode_product(&self, mode: usize, u: MatRef<'_>) -> Result<Self> {
        self.mode_product_counted(mode, u, &mut FlopCounter::default())
    }

    pub(crate) fn mode_product_counted(
        &self,
        mode: usize,
        u: MatRef<'_>,
        counter: &mut FlopCounter,
    ) -> Result<Self> {
        self.check_mode(mode)?;
        let (left, nk, right) = split_at_mode(&self.dims, mode);
        if u.cols() != nk {
            return Err(shape_mismatch(&[u.rows(), nk], &[u.rows(), u.cols()]));
        }
        let m = u.rows();
        let mut dims = self.dims.clone();
        dims[mode] = m;
        let mut out = Self::zeros(&dims)?;
        counter.product(m, nk, left * right);
        let mut quiet = FlopCounter::default();
        if left == 1 {
            let x = MatRef::col_major(&self.data, nk, right)?;
            gemm_into(1.0, u, x, 0.0, &mut out.data, &mut quiet);
        } else {
            let in_slab = left * nk;
            let out_slab = left * m;
            for b in 0..right {
                let x = MatRef::col_major(&self.data[b * in_slab..(b + 1) * in_slab], left, nk)?;
                gemm_into(
                    1.0,
                    x,
                    u.t(),
                    0.0,
                    &mut out.data[b * out_slab..(b + 1) * out_slab],
                    &mut quiet,
                );
            }
        }
        Ok(out)
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return Err(shape_mismatch(&self.dims, &other.dims));
        }
        Ok(linalg::dot(&self.data, &other.data))
    }

    pub fn frob_norm(&self) -> f64 {
        linalg::norm2(&self.data)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(shape_mismatch(&self.dims, &other.dims));
        }
        Ok(Self {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(shape_mismatch(&self.dims, &other.dims));
        }
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += alpha * b);
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// `||self - other||_F`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.frob_norm())
    }

    /// Reorders modes: output mode `i` is input mode `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.order())?;
        let d = self.order();
        let mut in_strides = vec![1usize; d];
        for i in 1..d {
            in_strides[i] = in_strides[i - 1] * self.dims[i - 1];
        }
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; d];
        let mut src = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[src]);
            for k in 0..d {
                idx[k] += 1;
                src += strides[k];
                if idx[k] < dims[k] {
                    break;
                }
                src -= strides[k] * dims[k];
                idx[k] = 0;
            }
        }
        Self::new(dims, data)
    }

    /// Singular values of the mode-`mode` matricization.
    pub fn mode_singular_values(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        Ok(if mode == 0 {
            linalg::singular_values(self.mode1_view())
        } else {
            linalg::singular_values(self.matricize(mode)?.as_ref())
        })
    }

    /// Counts, per mode, the singular values above `tol * sigma_max`
    /// (the relative cut is never below `1e-13`). A zero tensor has rank 0
    /// in every mode.
    pub fn multilinear_rank(&self, tol: f64) -> MultilinearRank {
        let ranks = (0..self.order())
            .map(|k| {
                if k == 0 {
                    linalg::numerical_rank(self.mode1_view(), tol)
                } else {
                    let m = self.matricize(k).expect("mode in range");
                    linalg::numerical_rank(m.as_ref(), tol)
                }
            })
            .collect();
        MultilinearRank(ranks)
    }
}

pub(crate) fn check_permutation(perm: &[usize], d: usize) -> Result<()> {
    let mut seen = vec![false; d];
    if perm.len() != d {
        return Err(Error::InvalidPermutation(perm.to_vec()));
    }
    for &p in perm {
        if p >= d || seen[p] {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        seen[p] = true;
    }
    Ok(())
}

pub(crate) fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dims: &[usize], seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseTensor::from_fn(dims, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn counting() -> DenseTensor {
        DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap()
    }

    /// Column index from the textbook unfolding formula, 0-based.
    fn unfolding_column(idx: &[usize], dims: &[usize], k: usize) -> usize {
        let mut j = 0;
        for (l, &i) in idx.iter().enumerate().filter(|&(l, _)| l != k) {
            let stride: usize = (0..l).filter(|&m| m != k).map(|m| dims[m]).product();
            j += i * stride;
        }
        j
    }

    #[test]
    fn mode1_of_counting_tensor() {
        let m = counting().matricize(0).unwrap();
        let want = Matrix::from_rows(&[[1.0, 3.0, 5.0, 7.0], [2.0, 4.0, 6.0, 8.0]]).unwrap();
        assert_eq!(m, want);
        let back = DenseTensor::tensorize(&want, &[2, 2, 2], 0).unwrap();
        assert_eq!(back, counting());
    }

    #[test]
    fn matricize_matches_index_formula() {
        let dims = [3, 4, 2, 5];
        let t = random(&dims, 3);
        for k in 0..4 {
            let m = t.matricize(k).unwrap();
            let mut idx = vec![0; 4];
            for lin in 0..t.len() {
                let mut rem = lin;
                for (i, n) in idx.iter_mut().zip(&dims) {
                    *i = rem % n;
                    rem /= n;
                }
                let col = unfolding_column(&idx, &dims, k);
                assert_eq!(m.get(idx[k], col), t.data()[lin]);
            }
        }
    }

    #[test]
    fn order_two_mode1_is_the_matrix() {
        let t = random(&[3, 5], 9);
        let m = t.matricize(0).unwrap();
        assert_eq!(m.data(), t.data());
        let m2 = t.matricize(1).unwrap();
        assert_eq!(m2, m.transpose());
    }

    #[test]
    fn mode_out_of_range() {
        assert!(matches!(
            counting().matricize(3),
            Err(Error::ModeOutOfRange { mode: 3, order: 3 })
        ));
    }

    #[test]
    fn tensorize_rejects_bad_shape() {
        let m = Matrix::zeros(2, 3);
        assert!(DenseTensor::tensorize(&m, &[2, 2, 2], 1).is_err());
        let z = DenseTensor::tensorize(&Matrix::zeros(2, 4), &[2, 2, 2], 2).unwrap();
        assert_eq!(z.frob_norm(), 0.0);
    }

    #[test]
    fn identity_and_zero_mode_products() {
        let t = random(&[3, 4, 5], 1);
        for k in 0..3 {
            let n = t.dims()[k];
            let id = Matrix::identity(n);
            assert_eq!(t.mode_product(k, id.as_ref()).unwrap(), t);
            let z = Matrix::zeros(2, n);
            let p = t.mode_product(k, z.as_ref()).unwrap();
            assert_eq!(p.dims()[k], 2);
            assert_eq!(p.frob_norm(), 0.0);
        }
        assert!(t.mode_product(1, Matrix::zeros(2, 3).as_ref()).is_err());
    }

    #[test]
    fn frob_norm_of_ones() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0; 4]).unwrap();
        assert_eq!(t.frob_norm(), 2.0);
        let z = DenseTensor::zeros(&[2, 2]).unwrap();
        assert_eq!(t.inner(&z).unwrap(), 0.0);
    }

    #[test]
    fn permute_round_trip() {
        let t = random(&[2, 3, 4], 5);
        let perm = [2, 0, 1];
        let p = t.permute(&perm).unwrap();
        assert_eq!(p.dims(), &[4, 2, 3]);
        assert_eq!(p.get(&[3, 1, 2]), t.get(&[1, 2, 3]));
        let back = p.permute(&inverse_permutation(&perm)).unwrap();
        assert_eq!(back, t);
        assert!(t.permute(&[0, 0, 1]).is_err());
    }

    #[test]
    fn rank_one_and_zero_ranks() {
        let (x, y, z) = ([1.0, 2.0, -1.0], [0.5, 1.5], [2.0, -3.0, 1.0, 1.0]);
        let t = DenseTensor::from_fn(&[3, 2, 4], |i| x[i[0]] * y[i[1]] * z[i[2]]).unwrap();
        assert_eq!(t.multilinear_rank(1e-10).as_slice(), &[1, 1, 1]);
        let zero = DenseTensor::zeros(&[3, 3, 3]).unwrap();
        assert_eq!(zero.multilinear_rank(1e-10).as_slice(), &[0, 0, 0]);
    }

    #[test]
    fn rejects_order_one_and_bad_lengths() {
        assert!(DenseTensor::new(vec![4], vec![0.0; 4]).is_err());
        assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(DenseTensor::zeros(&[2, 0]).is_err());
    }
}
