//! Dense column-major matrices with the kernels the solvers need: matrix
//! products, Householder thin QR and a one-sided Jacobi SVD.
//!
//! Sign conventions are fixed so results are reproducible:
//! - QR: every diagonal entry of `R` is nonnegative.
//! - SVD: in each left singular vector the entry of largest magnitude
//!   (first one on ties) is nonnegative; `u` and `v` are flipped together.

use crate::error::{Error, Result};
use crate::flops::FlopCounter;

/// Owned column-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Borrowed strided matrix view. Transposition is free.
#[derive(Clone, Copy, Debug)]
pub struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    row_stride: usize,
    col_stride: usize,
}

impl<'a> MatRef<'a> {
    /// View a contiguous column-major buffer as a `rows x cols` matrix.
    pub fn col_major(data: &'a [f64], rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{} values cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self {
            data,
            rows,
            cols,
            row_stride: 1,
            col_stride: rows,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.row_stride + j * self.col_stride]
    }

    pub fn t(self) -> MatRef<'a> {
        MatRef {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        if self.row_stride == 1 && self.col_stride == self.rows {
            return Matrix {
                rows: self.rows,
                cols: self.cols,
                data: self.data[..self.rows * self.cols].to_vec(),
            };
        }
        let mut out = Matrix::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.data[i + j * self.rows] = self.get(i, j);
            }
        }
        out
    }

    pub fn frob_norm(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.cols {
            for i in 0..self.rows {
                let x = self.get(i, j);
                acc += x * x;
            }
        }
        acc.sqrt()
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::eye(n, n)
    }

    /// `rows x cols` matrix with ones on the main diagonal.
    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.data[i + i * rows] = 1.0;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{} values cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(Error::InvalidShape("ragged rows".into()));
            }
            for (j, &x) in row.iter().enumerate() {
                m.data[i + j * nrows] = x;
            }
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[i + j * rows] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i + j * self.rows] = x;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_ref(&self) -> MatRef<'_> {
        MatRef {
            data: &self.data,
            rows: self.rows,
            cols: self.cols,
            row_stride: 1,
            col_stride: self.rows,
        }
    }

    pub fn t(&self) -> MatRef<'_> {
        self.as_ref().t()
    }

    pub fn transpose(&self) -> Matrix {
        self.t().to_matrix()
    }

    /// Leading `k` columns.
    pub fn leading_cols(&self, k: usize) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: k,
            data: self.data[..self.rows * k].to_vec(),
        }
    }

    /// Copy of rows `rows` and columns `cols`.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
        assert!(rows.end <= self.rows && cols.end <= self.cols, "block out of range");
        Matrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.data[rows.start + i + (cols.start + j) * self.rows]
        })
    }

    /// Horizontal concatenation; all blocks need the same row count.
    pub fn hcat(blocks: &[&Matrix]) -> Result<Matrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let mut data = Vec::new();
        let mut cols = 0;
        for b in blocks {
            if b.rows != rows {
                return Err(Error::ShapeMismatch {
                    expected: vec![rows],
                    got: vec![b.rows],
                });
            }
            data.extend_from_slice(&b.data);
            cols += b.cols;
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn frob_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// `self - other`.
    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "matrix shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Multiplies column `j` by `d[j]`.
    pub fn scale_cols(&mut self, d: &[f64]) {
        for (j, &dj) in d.iter().enumerate().take(self.cols) {
            self.col_mut(j).iter_mut().for_each(|x| *x *= dj);
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `c <- alpha * a * b + beta * c` where `c` is a contiguous column-major
/// `a.rows() x b.cols()` buffer.
pub(crate) fn gemm_into(
    alpha: f64,
    a: MatRef<'_>,
    b: MatRef<'_>,
    beta: f64,
    c: &mut [f64],
    counter: &mut FlopCounter,
) {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert_eq!(k, b.rows, "inner dimensions differ");
    assert_eq!(c.len(), m * n, "output buffer has the wrong length");
    if m == 0 || n == 0 {
        return;
    }
    counter.product(m, k, n);
    if k == 0 {
        c.iter_mut().for_each(|x| *x *= beta);
        return;
    }
    // SAFETY: the strides describe in-bounds elements of `a.data` and
    // `b.data` for all (i, j) in range, and `c` holds exactly m*n elements
    // laid out column-major. The views never alias `c`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.as_mut_ptr(),
            1,
            m as isize,
        );
    }
}

pub(crate) fn matmul_counted(a: MatRef<'_>, b: MatRef<'_>, counter: &mut FlopCounter) -> Matrix {
    let mut out = Matrix::zeros(a.rows, b.cols);
    gemm_into(1.0, a, b, 0.0, &mut out.data, counter);
    out
}

/// Matrix product `a * b`.
pub fn matmul(a: MatRef<'_>, b: MatRef<'_>) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::ShapeMismatch {
            expected: vec![a.rows, a.cols],
            got: vec![b.rows, b.cols],
        });
    }
    Ok(matmul_counted(a, b, &mut FlopCounter::default()))
}

/// Thin QR factorization `a = q * r`.
#[derive(Clone, Debug)]
pub struct ThinQR {
    /// `m x min(m, n)` with orthonormal columns.
    pub q: Matrix,
    /// `min(m, n) x n`, upper triangular (trapezoidal when `n > m`).
    pub r: Matrix,
}

/// Householder thin QR with nonnegative diagonal in `r`.
///
/// Rank-deficient inputs produce zero diagonal entries in `r`; `q` stays
/// orthonormal.
pub fn qr_thin(a: MatRef<'_>) -> ThinQR {
    qr_thin_counted(a, &mut FlopCounter::default())
}

pub(crate) fn qr_thin_counted(a: MatRef<'_>, counter: &mut FlopCounter) -> ThinQR {
    let (m, n) = (a.rows, a.cols);
    let k = m.min(n);
    let mut w = a.to_matrix();
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k);
    let mut macs = 0u64;

    for j in 0..k {
        let x = &w.data[j * m + j..(j + 1) * m];
        let norm = norm2(x);
        if norm == 0.0 {
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        let tau = if vv > 0.0 { 2.0 / vv } else { 0.0 };
        {
            let col = &mut w.data[j * m + j..(j + 1) * m];
            col[0] = alpha;
            col[1..].iter_mut().for_each(|x| *x = 0.0);
        }
        for l in j + 1..n {
            let col = &mut w.data[l * m + j..(l + 1) * m];
            let s = tau * dot(&v, col);
            col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= s * vi);
        }
        macs += 2 * ((m - j) as u64) * ((n - j - 1) as u64);
        reflectors.push((v, tau));
    }

    let mut q = Matrix::eye(m, k);
    for j in (0..k).rev() {
        let (v, tau) = &reflectors[j];
        if *tau == 0.0 {
            continue;
        }
        for l in j..k {
            let col = &mut q.data[l * m + j..(l + 1) * m];
            let s = tau * dot(v, col);
            col.iter_mut().zip(v).for_each(|(c, vi)| *c -= s * vi);
        }
        macs += 2 * ((m - j) as u64) * ((k - j) as u64);
    }
    counter.factorization(macs);

    let mut r = Matrix::zeros(k, n);
    for j in 0..n {
        for i in 0..k.min(j + 1) {
            r.data[i + j * k] = w.data[i + j * m];
        }
    }
    for i in 0..k {
        if r.get(i, i) < 0.0 {
            for j in i..n {
                let x = r.get(i, j);
                r.set(i, j, -x);
            }
            q.col_mut(i).iter_mut().for_each(|x| *x = -*x);
        }
    }
    ThinQR { q, r }
}

/// Singular value decomposition truncated to `r` triplets.
#[derive(Clone, Debug)]
pub struct TruncatedSVD {
    /// `rows x r`, orthonormal columns.
    pub u: Matrix,
    /// Nonincreasing, nonnegative.
    pub s: Vec<f64>,
    /// `cols x r`, orthonormal columns.
    pub v: Matrix,
}

impl TruncatedSVD {
    /// `u * diag(s) * v^T`.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        us.scale_cols(&self.s);
        matmul_counted(us.as_ref(), self.v.t(), &mut FlopCounter::default())
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided Jacobi on the columns of `b`; accumulates the rotations into
/// `v` when given.
fn jacobi_orthogonalize(b: &mut Matrix, mut v: Option<&mut Matrix>, counter: &mut FlopCounter) {
    let (m, n) = (b.rows, b.cols);
    let tol = (m.max(1) as f64) * f64::EPSILON;
    let mut macs = 0u64;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let bp = b.col(p);
                    let bq = b.col(q);
                    (dot(bp, bp), dot(bq, bq), dot(bp, bq))
                };
                macs += 3 * m as u64;
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_cols(b, p, q, c, s);
                macs += 2 * m as u64;
                if let Some(v) = v.as_deref_mut() {
                    rotate_cols(v, p, q, c, s);
                    macs += 2 * v.rows as u64;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    counter.factorization(macs);
}

fn rotate_cols(a: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = a.rows;
    let (lo, hi) = a.data.split_at_mut(q * rows);
    let cp = &mut lo[p * rows..(p + 1) * rows];
    let cq = &mut hi[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Extends the columns of `u` flagged in `missing` to an orthonormal set.
/// Each new column is the standard basis vector with the largest component
/// outside the current span, orthogonalized twice; that residual has squared
/// norm at least `(m - filled) / m`, so the choice is always well conditioned.
fn complete_orthonormal(u: &mut Matrix, missing: &[bool]) {
    let m = u.rows;
    let mut filled: Vec<usize> = (0..u.cols).filter(|&l| !missing[l]).collect();
    for j in (0..u.cols).filter(|&j| missing[j]) {
        assert!(filled.len() < m, "cannot complete an orthonormal basis");
        let residual = |u: &Matrix, i: usize| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            for _ in 0..2 {
                for &l in &filled {
                    let cl = u.col(l);
                    let s = dot(cl, &e);
                    e.iter_mut().zip(cl).for_each(|(x, c)| *x -= s * c);
                }
            }
            e
        };
        let best = (0..m)
            .map(|i| residual(u, i))
            .max_by(|a, b| norm2(a).total_cmp(&norm2(b)))
            .expect("m >= 1");
        let nrm = norm2(&best);
        u.col_mut(j).iter_mut().zip(&best).for_each(|(x, e)| *x = e / nrm);
        filled.push(j);
    }
}

/// Core SVD of a matrix with `rows >= cols`: returns `(u_small, s, v)` with
/// `a = q * u_small * diag(s) * v^T` where `q` comes from the preliminary QR.
struct TallSvd {
    q: Matrix,
    u_small: Matrix,
    s: Vec<f64>,
    v: Option<Matrix>,
}

fn tall_svd(a: MatRef<'_>, want_q: bool, want_v: bool, counter: &mut FlopCounter) -> TallSvd {
    debug_assert!(a.rows >= a.cols);
    let n = a.cols;
    let qr = qr_thin_counted(a, counter);
    let mut b = qr.r;
    let mut v = want_v.then(|| Matrix::identity(n));
    jacobi_orthogonalize(&mut b, v.as_mut(), counter);

    let norms: Vec<f64> = (0..n).map(|j| norm2(b.col(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u_small = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut missing = vec![false; n];
    let mut v_sorted = v.as_ref().map(|_| Matrix::zeros(n, n));
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        if sigma > f64::MIN_POSITIVE {
            let col = u_small.col_mut(dst);
            col.iter_mut()
                .zip(b.col(src))
                .for_each(|(x, y)| *x = y / sigma);
        } else {
            missing[dst] = true;
        }
        if let (Some(vs), Some(v)) = (v_sorted.as_mut(), v.as_ref()) {
            vs.col_mut(dst).copy_from_slice(v.col(src));
        }
    }
    if missing.iter().any(|&x| x) {
        complete_orthonormal(&mut u_small, &missing);
    }
    TallSvd {
        q: if want_q { qr.q } else { Matrix::zeros(0, 0) },
        u_small,
        s,
        v: v_sorted,
    }
}

pub(crate) fn apply_sign_convention(u: &mut Matrix, v: &mut Matrix) {
    for j in 0..u.cols {
        let col = u.col(j);
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if col.get(best).is_some_and(|&x| x < 0.0) {
            u.col_mut(j).iter_mut().for_each(|x| *x = -*x);
            v.col_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Leading `r` singular triplets of `a`.
pub fn svd_truncated(a: MatRef<'_>, r: usize) -> Result<TruncatedSVD> {
    svd_truncated_counted(a, r, &mut FlopCounter::default())
}

pub(crate) fn svd_truncated_counted(
    a: MatRef<'_>,
    r: usize,
    counter: &mut FlopCounter,
) -> Result<TruncatedSVD> {
    let (m, n) = (a.rows, a.cols);
    if r > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "truncation rank {r} exceeds min({m}, {n})"
        )));
    }
    let mut factor = FlopCounter::new(usize::MAX);
    let (mut u, s, mut v) = if m >= n {
        let core = tall_svd(a, true, true, &mut factor);
        let u = matmul_counted(core.q.as_ref(), core.u_small.leading_cols(r).as_ref(), &mut factor);
        let v = core.v.expect("v requested").leading_cols(r);
        (u, core.s, v)
    } else {
        // a^T = q * u_small * diag(s) * w^T, so a = w * diag(s) * (q * u_small)^T.
        let core = tall_svd(a.t(), true, true, &mut factor);
        let u = core.v.expect("v requested").leading_cols(r);
        let v = matmul_counted(core.q.as_ref(), core.u_small.leading_cols(r).as_ref(), &mut factor);
        (u, core.s, v)
    };
    counter.factorization(factor.count().total());
    apply_sign_convention(&mut u, &mut v);
    Ok(TruncatedSVD {
        u,
        s: s[..r].to_vec(),
        v,
    })
}

/// Like [`svd_truncated_counted`] but accepts `min(rows, cols) < r <= rows`:
/// `u` is completed to `r` orthonormal columns, and the extra singular
/// values and columns of `v` are zero.
pub(crate) fn svd_padded_counted(
    a: MatRef<'_>,
    r: usize,
    counter: &mut FlopCounter,
) -> Result<TruncatedSVD> {
    let k = a.rows.min(a.cols);
    if r <= k {
        return svd_truncated_counted(a, r, counter);
    }
    if r > a.rows {
        return Err(Error::InvalidArgument(format!(
            "truncation rank {r} exceeds {} rows",
            a.rows
        )));
    }
    let svd = svd_truncated_counted(a, k, counter)?;
    let mut u = Matrix::zeros(a.rows, r);
    u.data[..a.rows * k].copy_from_slice(&svd.u.data);
    let missing: Vec<bool> = (0..r).map(|j| j >= k).collect();
    complete_orthonormal(&mut u, &missing);
    let mut v = Matrix::zeros(a.cols, r);
    v.data[..a.cols * k].copy_from_slice(&svd.v.data);
    let mut s = svd.s;
    s.resize(r, 0.0);
    Ok(TruncatedSVD { u, s, v })
}

/// All `min(rows, cols)` singular values in nonincreasing order.
pub fn singular_values(a: MatRef<'_>) -> Vec<f64> {
    let mut counter = FlopCounter::default();
    if a.rows >= a.cols {
        tall_svd(a, false, false, &mut counter).s
    } else {
        tall_svd(a.t(), false, false, &mut counter).s
    }
}

/// Number of singular values above `rel_tol * sigma_max`; the relative
/// threshold is never below `1e-13`.
pub fn numerical_rank(a: MatRef<'_>, rel_tol: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    let cut = rel_tol.max(RANK_FLOOR) * smax;
    s.iter().filter(|&&x| x > cut).count()
}

pub(crate) const RANK_FLOOR: f64 = 1e-13;
