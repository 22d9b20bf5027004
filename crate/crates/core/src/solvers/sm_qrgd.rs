//! Single-mode quasi Riemannian gradient descent.
//!
//! Each step projects the gradient onto the tangent space of the mode-1
//! matricization at the substitution iterate, moves along it, and retracts
//! with the fused projection + sequential truncation. Because the current
//! iterate already lies in that tangent space, `X + alpha P(G)` equals the
//! projection of `X + alpha G`.

use std::time::Instant;

use super::{check_problem, drive, monitor_appendix, step_size, Method, Problem, SolveOutput, SolverConfig, Step};
use crate::error::Result;
use crate::flops::FlopCount;
use crate::hosvd::{h_mode1, mode1_first_order, st_hosvd_counted, TuckerFactorization};
use crate::measurement::{MeasurementOperator, PermutedOperator};
use crate::tangent::{flop_counter_for, fused_retract, lemma31_check, project_dense_counted, ModeOneBasis};
use crate::tensor::{DenseTensor, MultilinearRank};

/// Sequential truncation (mode 0 first) of `A*(y)` and the mode-1 singular
/// bases of `A*(y)`.
pub fn init_point(
    op: &dyn MeasurementOperator,
    y: &[f64],
    r: &MultilinearRank,
) -> Result<(TuckerFactorization, ModeOneBasis)> {
    let z = op.adjoint(y)?;
    let x = st_hosvd_counted(&z, r, &mode1_first_order(r), &mut flop_counter_for(r))?;
    let (_, basis) = h_mode1(&z, r[0])?;
    Ok((x, basis))
}

struct SmQrgd {
    rank: MultilinearRank,
    rule: super::StepRule,
    monitors: super::MonitorFlags,
    x: TuckerFactorization,
    dense: DenseTensor,
    basis: ModeOneBasis,
}

impl Method for SmQrgd {
    fn current(&self) -> &DenseTensor {
        &self.dense
    }

    fn step(&mut self, grad: DenseTensor, problem: &Problem<'_>) -> Result<Step> {
        let mut counter = flop_counter_for(&self.rank);
        let pg = project_dense_counted(&grad, &self.basis, &mut counter)?;
        let alpha = step_size(self.rule, &pg, problem.op)?;
        let mut w = self.dense.clone();
        w.axpy(alpha, &pg)?;
        let ret = fused_retract(&w, &self.basis, &self.rank)?;
        let mut compose = flop_counter_for(&self.rank);
        let dense = ret.tucker.compose_counted(&mut compose);
        let threshold_flops = ret.flops + compose.count();
        let appendix = match (self.monitors.appendix, problem.truth) {
            (true, Some(t)) => Some(monitor_appendix(&w, &dense, &ret.basis, t)?),
            _ => None,
        };
        self.x = ret.tucker;
        self.dense = dense;
        self.basis = ret.basis;
        let lemma31 = if self.monitors.lemma31 {
            Some(lemma31_check(&self.x, &self.basis)?)
        } else {
            None
        };
        Ok(Step {
            alpha,
            flops: counter.count() + threshold_flops,
            threshold_flops,
            appendix,
            lemma31,
        })
    }

    fn into_estimate(self) -> TuckerFactorization {
        self.x
    }
}

fn run_mode1(problem: &Problem<'_>, config: &SolverConfig) -> Result<SolveOutput> {
    let started = Instant::now();
    let r = &config.rank;
    let w0 = problem.op.adjoint(problem.y)?;
    let mut counter = flop_counter_for(r);
    let x = st_hosvd_counted(&w0, r, &mode1_first_order(r), &mut counter)?;
    let (_, basis) = h_mode1(&w0, r[0])?;
    let dense = x.compose_counted(&mut counter);
    let appendix = match (config.monitors.appendix, problem.truth) {
        (true, Some(t)) => Some(monitor_appendix(&w0, &dense, &basis, t)?),
        _ => None,
    };
    let lemma31 = if config.monitors.lemma31 {
        Some(lemma31_check(&x, &basis)?)
    } else {
        None
    };
    let initial = Step {
        alpha: 0.0,
        flops: counter.count(),
        threshold_flops: FlopCount::default(),
        appendix,
        lemma31,
    };
    let method = SmQrgd {
        rank: r.clone(),
        rule: config.step_rule,
        monitors: config.monitors,
        x,
        dense,
        basis,
    };
    drive(problem, config, method, initial, started)
}

/// SM-QRGD with the tangent space on `config.tangent_mode`. Other tangent
/// modes are handled by relabelling that mode as mode 0 (the remaining
/// modes keep their relative order) and relabelling the result back.
pub fn sm_qrgd(problem: &Problem<'_>, config: &SolverConfig) -> Result<SolveOutput> {
    check_problem(problem, config)?;
    let m = config.tangent_mode;
    if m == 0 {
        return run_mode1(problem, config);
    }
    let d = problem.op.dims().len();
    let mut perm = vec![m];
    perm.extend((0..d).filter(|&k| k != m));
    let op = PermutedOperator::new(problem.op, &perm)?;
    let truth = problem.truth.map(|t| t.permute(&perm)).transpose()?;
    let mut inner = *problem;
    inner.op = &op;
    inner.truth = truth.as_ref();
    let mut cfg = config.clone();
    cfg.rank = MultilinearRank::new(perm.iter().map(|&p| config.rank[p]).collect());
    cfg.tangent_mode = 0;
    let out = run_mode1(&inner, &cfg)?;
    let inverse = crate::tensor::inverse_permutation(&perm);
    Ok(SolveOutput {
        estimate: out.estimate.permute_modes(&inverse)?,
        trace: out.trace,
    })
}
