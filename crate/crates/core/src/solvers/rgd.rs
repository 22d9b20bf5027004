//! Riemannian gradient descent on the manifold of fixed multilinear rank.
//!
//! At `X = C x_1 U_1 ... x_d U_d` a tangent vector is
//! `D x_1 U_1 ... x_d U_d + sum_i C x_i V_i x_{j != i} U_j` with
//! `U_i^T V_i = 0`. Projection of `G` uses `D = G x_j U_j^T` and
//! `V_i = (I - U_i U_i^T) M_i(G x_{j != i} U_j^T) M_i(C)^+`.
//! With `V_i = Q_i R_i` (`Q_i` orthogonal to `U_i`), `X + alpha xi` has the
//! form `S x_i [U_i Q_i]` for a core `S` with at most `2 r_i` entries per
//! mode, so the retraction runs a truncated HOSVD on `S` only.

use std::time::Instant;

use super::{check_problem, drive, step_size, Method, Problem, SolveOutput, SolverConfig, Step};
use crate::error::Result;
use crate::flops::{FlopCount, FlopCounter};
use crate::hosvd::{t_hosvd_counted, TuckerFactorization};
use crate::linalg::{matmul_counted, svd_truncated_counted, Matrix, RANK_FLOOR};
use crate::tangent::{complement_qr, flop_counter_for};
use crate::tensor::{DenseTensor, MultilinearRank};

/// Tangent vector at `point` in the `(D, V_1, ..., V_d)` parametrization.
#[derive(Clone, Debug)]
pub struct TuckerTangentVector {
    pub core: DenseTensor,
    pub dirs: Vec<Matrix>,
}

fn pinv_wide(c: &Matrix, counter: &mut FlopCounter) -> Result<Matrix> {
    // c = U S V^T  =>  c^+ = V S^+ U^T
    let k = c.rows().min(c.cols());
    let svd = svd_truncated_counted(c.as_ref(), k, counter)?;
    let cut = RANK_FLOOR * svd.s.first().copied().unwrap_or(0.0);
    let inv: Vec<f64> = svd.s.iter().map(|&s| if s > cut { 1.0 / s } else { 0.0 }).collect();
    let mut v = svd.v;
    v.scale_cols(&inv);
    Ok(matmul_counted(v.as_ref(), svd.u.t(), counter))
}

/// Orthogonal projection of `g` onto the tangent space at `point`.
pub fn tucker_tangent_project(point: &TuckerFactorization, g: &DenseTensor) -> Result<TuckerTangentVector> {
    project_counted(point, g, &mut FlopCounter::default())
}

fn project_counted(
    point: &TuckerFactorization,
    g: &DenseTensor,
    counter: &mut FlopCounter,
) -> Result<TuckerTangentVector> {
    let d = point.factors.len();
    let mut dirs = Vec::with_capacity(d);
    for i in 0..d {
        let mut partial = g.clone();
        for (j, u) in point.factors.iter().enumerate() {
            if j != i {
                partial = partial.mode_product_counted(j, u.t(), counter)?;
            }
        }
        let gi = partial.matricize(i)?;
        let ci = point.core.matricize(i)?;
        let v = matmul_counted(gi.as_ref(), pinv_wide(&ci, counter)?.as_ref(), counter);
        let u = &point.factors[i];
        let utv = matmul_counted(u.t(), v.as_ref(), counter);
        dirs.push(v.sub(&matmul_counted(u.as_ref(), utv.as_ref(), counter)));
    }
    let mut core = g.clone();
    for (j, u) in point.factors.iter().enumerate() {
        core = core.mode_product_counted(j, u.t(), counter)?;
    }
    Ok(TuckerTangentVector { core, dirs })
}

/// `base * C + alpha * xi` as a Tucker factorization over `[U_i Q_i]`.
fn block_form(
    point: &TuckerFactorization,
    xi: &TuckerTangentVector,
    base: f64,
    alpha: f64,
    counter: &mut FlopCounter,
) -> Result<TuckerFactorization> {
    let d = point.factors.len();
    let r: Vec<usize> = point.core.dims().to_vec();
    let mut bases = Vec::with_capacity(d);
    let mut shifted = Vec::with_capacity(d);
    for i in 0..d {
        let (q, rr) = complement_qr(&point.factors[i], &xi.dirs[i], counter)?;
        shifted.push(point.core.mode_product_counted(i, rr.as_ref(), counter)?);
        bases.push(Matrix::hcat(&[&point.factors[i], &q])?);
    }
    let dims: Vec<usize> = bases.iter().map(Matrix::cols).collect();
    let mut local = vec![0usize; d];
    let s = DenseTensor::from_fn(&dims, |idx| {
        let mut outside = None;
        for k in 0..d {
            if idx[k] >= r[k] {
                if outside.is_some() {
                    return 0.0;
                }
                outside = Some(k);
            }
        }
        match outside {
            None => base * point.core.get(idx) + alpha * xi.core.get(idx),
            Some(k) => {
                local.copy_from_slice(idx);
                local[k] -= r[k];
                alpha * shifted[k].get(&local)
            }
        }
    })?;
    TuckerFactorization::new(s, bases)
}

impl TuckerTangentVector {
    /// Dense form at `point`.
    pub fn to_dense(&self, point: &TuckerFactorization) -> Result<DenseTensor> {
        let mut c = FlopCounter::default();
        Ok(block_form(point, self, 0.0, 1.0, &mut c)?.compose_counted(&mut c))
    }
}

struct Rgd {
    rank: MultilinearRank,
    rule: super::StepRule,
    x: TuckerFactorization,
    dense: DenseTensor,
}

impl Method for Rgd {
    fn current(&self) -> &DenseTensor {
        &self.dense
    }

    fn step(&mut self, grad: DenseTensor, problem: &Problem<'_>) -> Result<Step> {
        let mut counter = flop_counter_for(&self.rank);
        let xi = project_counted(&self.x, &grad, &mut counter)?;
        let alpha = match self.rule {
            super::StepRule::Constant(a) => a,
            rule => {
                let dense_xi = block_form(&self.x, &xi, 0.0, 1.0, &mut counter)?.compose_counted(&mut counter);
                step_size(rule, &dense_xi, problem.op)?
            }
        };
        let mut thr = flop_counter_for(&self.rank);
        let w = block_form(&self.x, &xi, 1.0, alpha, &mut thr)?;
        let small = t_hosvd_counted(&w.core, &self.rank, &mut thr)?;
        let factors = w
            .factors
            .iter()
            .zip(&small.factors)
            .map(|(b, u)| matmul_counted(b.as_ref(), u.as_ref(), &mut thr))
            .collect();
        self.x = TuckerFactorization::new(small.core, factors)?;
        self.dense = self.x.compose_counted(&mut thr);
        Ok(Step {
            alpha,
            flops: counter.count() + thr.count(),
            threshold_flops: thr.count(),
            appendix: None,
            lemma31: None,
        })
    }

    fn into_estimate(self) -> TuckerFactorization {
        self.x
    }
}

/// Riemannian gradient descent with truncated-HOSVD retraction, started from
/// the truncated HOSVD of `A*(y)`.
pub fn rgd(problem: &Problem<'_>, config: &SolverConfig) -> Result<SolveOutput> {
    check_problem(problem, config)?;
    let started = Instant::now();
    let r = &config.rank;
    let mut counter = flop_counter_for(r);
    let x = t_hosvd_counted(&problem.op.adjoint(problem.y)?, r, &mut counter)?;
    let dense = x.compose_counted(&mut counter);
    let initial = Step {
        alpha: 0.0,
        flops: counter.count(),
        threshold_flops: FlopCount::default(),
        appendix: None,
        lemma31: None,
    };
    let method = Rgd {
        rank: r.clone(),
        rule: config.step_rule,
        x,
        dense,
    };
    drive(problem, config, method, initial, started)
}
