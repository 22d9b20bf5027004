//! Linear measurement operators, sampling sets and additive noise.

use std::io::{BufRead, Write};

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::dot;
use crate::rng::{rng_from_seed, PRNG_ALGORITHM};
use crate::tensor::{check_permutation, inverse_permutation, DenseTensor};

/// A linear map from tensors of shape `dims()` to `R^m`.
pub trait MeasurementOperator: Send + Sync {
    fn dims(&self) -> &[usize];

    fn num_measurements(&self) -> usize;

    fn apply(&self, x: &DenseTensor) -> Result<Vec<f64>>;

    fn adjoint(&self, y: &[f64]) -> Result<DenseTensor>;
}

fn check_input(dims: &[usize], x: &DenseTensor) -> Result<()> {
    if x.dims() != dims {
        return Err(shape_mismatch(dims, x.dims()));
    }
    Ok(())
}

fn check_output(m: usize, y: &[f64]) -> Result<()> {
    if y.len() != m {
        return Err(shape_mismatch(&[m], &[y.len()]));
    }
    Ok(())
}

/// Entry sampling on a set `Omega` of distinct indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingOperator {
    dims: Vec<usize>,
    /// Linear (storage-order) indices, strictly increasing.
    omega: Vec<usize>,
}

impl SamplingOperator {
    /// Builds the operator from storage-order linear indices. They are
    /// sorted; duplicates are rejected.
    pub fn from_linear(dims: &[usize], mut omega: Vec<usize>) -> Result<Self> {
        let len = DenseTensor::zeros(dims)?.len();
        omega.sort_unstable();
        if omega.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate sampled index".into()));
        }
        if omega.last().is_some_and(|&i| i >= len) {
            return Err(Error::InvalidArgument("sampled index out of range".into()));
        }
        Ok(Self {
            dims: dims.to_vec(),
            omega,
        })
    }

    /// Builds the operator from multi-indices.
    pub fn new(dims: &[usize], indices: &[Vec<usize>]) -> Result<Self> {
        let mut omega = Vec::with_capacity(indices.len());
        for idx in indices {
            if idx.len() != dims.len() || idx.iter().zip(dims).any(|(i, n)| i >= n) {
                return Err(Error::InvalidArgument(format!(
                    "index {idx:?} outside {dims:?}"
                )));
            }
            let mut lin = 0;
            let mut stride = 1;
            for (i, n) in idx.iter().zip(dims) {
                lin += i * stride;
                stride *= n;
            }
            omega.push(lin);
        }
        Self::from_linear(dims, omega)
    }

    /// Observes every entry.
    pub fn full(dims: &[usize]) -> Result<Self> {
        let len = DenseTensor::zeros(dims)?.len();
        Self::from_linear(dims, (0..len).collect())
    }

    pub fn linear_indices(&self) -> &[usize] {
        &self.omega
    }

    pub fn multi_index(&self, k: usize) -> Vec<usize> {
        let mut rem = self.omega[k];
        self.dims
            .iter()
            .map(|n| {
                let i = rem % n;
                rem /= n;
                i
            })
            .collect()
    }

    pub fn sampling_ratio(&self) -> f64 {
        self.omega.len() as f64 / self.dims.iter().product::<usize>() as f64
    }

    /// Writes `Omega` as CSV: comment lines with dims, seed and generator,
    /// a header `i1,...,id`, then one 0-based multi-index per row.
    pub fn write_csv<W: Write>(&self, seed: Option<u64>, mut w: W) -> Result<()> {
        let dims: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        writeln!(w, "# dims={}", dims.join(","))?;
        if let Some(seed) = seed {
            writeln!(w, "# seed={seed}")?;
            writeln!(w, "# prng={PRNG_ALGORITHM}")?;
        }
        let header: Vec<String> = (1..=self.dims.len()).map(|k| format!("i{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.omega.len() {
            let row: Vec<String> = self.multi_index(k).iter().map(|i| i.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads the format of [`SamplingOperator::write_csv`], returning the
    /// recorded seed if any.
    pub fn read_csv<R: BufRead>(r: R) -> Result<(Self, Option<u64>)> {
        let mut dims: Option<Vec<usize>> = None;
        let mut seed = None;
        let mut indices = Vec::new();
        let bad = |msg: String| Error::Format(msg);
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let meta = meta.trim();
                if let Some(v) = meta.strip_prefix("dims=") {
                    dims = Some(
                        v.split(',')
                            .map(|t| t.trim().parse().map_err(|_| bad(format!("bad dims {v:?}"))))
                            .collect::<Result<_>>()?,
                    );
                } else if let Some(v) = meta.strip_prefix("seed=") {
                    seed = Some(v.trim().parse().map_err(|_| bad(format!("bad seed {v:?}")))?);
                }
                continue;
            }
            if line.starts_with('i') {
                continue;
            }
            let idx = line
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| bad(format!("bad row {line:?}"))))
                .collect::<Result<Vec<usize>>>()?;
            indices.push(idx);
        }
        let dims = dims.ok_or_else(|| bad("missing dims line".into()))?;
        Ok((Self::new(&dims, &indices)?, seed))
    }
}

impl MeasurementOperator for SamplingOperator {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn num_measurements(&self) -> usize {
        self.omega.len()
    }

    fn apply(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        check_input(&self.dims, x)?;
        let data = x.data();
        Ok(self.omega.iter().map(|&i| data[i]).collect())
    }

    fn adjoint(&self, y: &[f64]) -> Result<DenseTensor> {
        check_output(self.omega.len(), y)?;
        let mut out = DenseTensor::zeros(&self.dims)?;
        let data = out.data_mut();
        for (&i, &v) in self.omega.iter().zip(y) {
            data[i] = v;
        }
        Ok(out)
    }
}

/// Draws `round(rho * N)` distinct entries uniformly.
pub fn sample_omega(dims: &[usize], rho: f64, seed: u64) -> Result<SamplingOperator> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("sampling ratio {rho} not in (0, 1]")));
    }
    let len = DenseTensor::zeros(dims)?.len();
    let m = (rho * len as f64).round() as usize;
    if m == 0 {
        return Err(Error::InvalidArgument(format!(
            "sampling ratio {rho} selects no entries of {len}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let omega = index::sample(&mut rng, len, m).into_vec();
    SamplingOperator::from_linear(dims, omega)
}

/// Inner products with i.i.d. `N(0, 1/m)` sensing tensors.
///
/// Row `i` is the ChaCha stream `i` of the operator seed, read in storage
/// order. By default rows are regenerated on every use; [`Self::with_cache`]
/// keeps them in memory.
#[derive(Clone, Debug)]
pub struct GaussianOperator {
    dims: Vec<usize>,
    m: usize,
    seed: u64,
    len: usize,
    cache: Option<Vec<f64>>,
}

/// Largest `m * N` for which [`GaussianOperator::with_cache`] stores rows.
pub const GAUSSIAN_CACHE_LIMIT: usize = 100_000_000;

impl GaussianOperator {
    pub fn new(dims: &[usize], m: usize, seed: u64) -> Result<Self> {
        let len = DenseTensor::zeros(dims)?.len();
        if m == 0 {
            return Err(Error::InvalidArgument("zero measurements".into()));
        }
        Ok(Self {
            dims: dims.to_vec(),
            m,
            seed,
            len,
            cache: None,
        })
    }

    /// Materializes all rows; fails above [`GAUSSIAN_CACHE_LIMIT`] entries.
    pub fn with_cache(mut self) -> Result<Self> {
        let total = self.m.checked_mul(self.len).filter(|&t| t <= GAUSSIAN_CACHE_LIMIT);
        let Some(total) = total else {
            return Err(Error::InvalidArgument("operator too large to cache".into()));
        };
        let mut rows = Vec::with_capacity(total);
        let mut buf = vec![0.0; self.len];
        for i in 0..self.m {
            self.fill_row(i, &mut buf);
            rows.extend_from_slice(&buf);
        }
        self.cache = Some(rows);
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_cached(&self) -> bool {
        self.cache.is_some()
    }

    /// Sensing tensor `i`, flattened in storage order.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let mut buf = vec![0.0; self.len];
        self.fill_row(i, &mut buf);
        buf
    }

    fn fill_row(&self, i: usize, buf: &mut [f64]) {
        assert!(i < self.m, "row {i} out of range");
        if let Some(cache) = &self.cache {
            buf.copy_from_slice(&cache[i * self.len..(i + 1) * self.len]);
            return;
        }
        let mut rng = rng_from_seed(self.seed);
        rng.set_stream(i as u64);
        let scale = 1.0 / (self.m as f64).sqrt();
        for x in buf.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = scale * z;
        }
    }
}

impl MeasurementOperator for GaussianOperator {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn num_measurements(&self) -> usize {
        self.m
    }

    fn apply(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        check_input(&self.dims, x)?;
        let mut buf = vec![0.0; self.len];
        Ok((0..self.m)
            .map(|i| {
                self.fill_row(i, &mut buf);
                dot(&buf, x.data())
            })
            .collect())
    }

    fn adjoint(&self, y: &[f64]) -> Result<DenseTensor> {
        check_output(self.m, y)?;
        let mut out = DenseTensor::zeros(&self.dims)?;
        let mut buf = vec![0.0; self.len];
        for (i, &yi) in y.iter().enumerate() {
            self.fill_row(i, &mut buf);
            out.data_mut()
                .iter_mut()
                .zip(&buf)
                .for_each(|(o, a)| *o += yi * a);
        }
        Ok(out)
    }
}

/// Presents `inner` on tensors whose modes are permuted: mode `i` of the
/// outer tensor is mode `perm[i]` of the inner one.
pub struct PermutedOperator<'a> {
    inner: &'a dyn MeasurementOperator,
    perm: Vec<usize>,
    inverse: Vec<usize>,
    dims: Vec<usize>,
}

impl<'a> PermutedOperator<'a> {
    pub fn new(inner: &'a dyn MeasurementOperator, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, inner.dims().len())?;
        Ok(Self {
            inner,
            perm: perm.to_vec(),
            inverse: inverse_permutation(perm),
            dims: perm.iter().map(|&p| inner.dims()[p]).collect(),
        })
    }
}

impl MeasurementOperator for PermutedOperator<'_> {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn num_measurements(&self) -> usize {
        self.inner.num_measurements()
    }

    fn apply(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        check_input(&self.dims, x)?;
        self.inner.apply(&x.permute(&self.inverse)?)
    }

    fn adjoint(&self, y: &[f64]) -> Result<DenseTensor> {
        self.inner.adjoint(y)?.permute(&self.perm)
    }
}

/// Additive i.i.d. Gaussian noise at a target signal-to-noise ratio
/// `10 log10(||T||^2 / (N sigma^2))`. An infinite ratio means no noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, seed: u64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!("invalid SNR {snr_db}")));
        }
        Ok(Self { snr_db, seed })
    }

    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            seed: 0,
        }
    }

    /// Noise variance for a tensor of norm `norm` with `len` entries.
    pub fn variance(&self, norm: f64, len: usize) -> f64 {
        if self.snr_db.is_infinite() {
            return 0.0;
        }
        norm * norm / (len as f64 * 10f64.powf(self.snr_db / 10.0))
    }
}

pub fn add_noise(t: &DenseTensor, spec: &NoiseSpec) -> DenseTensor {
    let mut out = t.clone();
    let var = spec.variance(t.frob_norm(), t.len());
    if var == 0.0 {
        return out;
    }
    let sigma = var.sqrt();
    let mut rng = rng_from_seed(spec.seed);
    for x in out.data_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *x += sigma * z;
    }
    out
}
