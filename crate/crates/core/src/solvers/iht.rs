//! Iterative hard thresholding with HOSVD-type thresholding: TIHT
//! (independent truncation) and SeMPIHT (sequential truncation).

use std::time::Instant;

use super::{check_problem, drive, step_size, Method, Problem, SolveOutput, SolverConfig, Step, StepRule};
use crate::error::Result;
use crate::flops::{FlopCount, FlopCounter};
use crate::hosvd::{default_order, st_hosvd_counted, t_hosvd_counted, TuckerFactorization};
use crate::tangent::flop_counter_for;
use crate::tensor::{DenseTensor, MultilinearRank};

/// Step-size variant of TIHT.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IhtVariant {
    /// Constant step: the configured constant, or 1 under a normalized rule.
    Ciht,
    /// Normalized step on the gradient projected onto the factor spans.
    Niht,
}

#[derive(Clone, Copy)]
enum Thresholding {
    Independent,
    Sequential,
}

struct Iht {
    rank: MultilinearRank,
    rule: StepRule,
    kind: Thresholding,
    x: TuckerFactorization,
    dense: DenseTensor,
}

fn threshold(
    kind: Thresholding,
    z: &DenseTensor,
    r: &MultilinearRank,
    counter: &mut FlopCounter,
) -> Result<TuckerFactorization> {
    match kind {
        Thresholding::Independent => t_hosvd_counted(z, r, counter),
        Thresholding::Sequential => st_hosvd_counted(z, r, &default_order(r), counter),
    }
}

/// `z x_1 U_1 U_1^T ... x_d U_d U_d^T` for the factors of `x`.
pub(crate) fn factor_projection(
    z: &DenseTensor,
    x: &TuckerFactorization,
    counter: &mut FlopCounter,
) -> Result<DenseTensor> {
    let mut core = z.clone();
    for (k, u) in x.factors.iter().enumerate() {
        core = core.mode_product_counted(k, u.t(), counter)?;
    }
    Ok(TuckerFactorization::new(core, x.factors.clone())?.compose_counted(counter))
}

impl Method for Iht {
    fn current(&self) -> &DenseTensor {
        &self.dense
    }

    fn step(&mut self, grad: DenseTensor, problem: &Problem<'_>) -> Result<Step> {
        let mut counter = flop_counter_for(&self.rank);
        let alpha = match self.rule {
            StepRule::Constant(a) => a,
            StepRule::Normalized => {
                let f = factor_projection(&grad, &self.x, &mut counter)?;
                step_size(self.rule, &f, problem.op)?
            }
        };
        let mut w = self.dense.clone();
        w.axpy(alpha, &grad)?;
        let mut thr = flop_counter_for(&self.rank);
        self.x = threshold(self.kind, &w, &self.rank, &mut thr)?;
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

fn run(problem: &Problem<'_>, config: &SolverConfig, kind: Thresholding, rule: StepRule) -> Result<SolveOutput> {
    check_problem(problem, config)?;
    let started = Instant::now();
    let r = &config.rank;
    let mut counter = flop_counter_for(r);
    let x = threshold(kind, &problem.op.adjoint(problem.y)?, r, &mut counter)?;
    let dense = x.compose_counted(&mut counter);
    let initial = Step {
        alpha: 0.0,
        flops: counter.count(),
        threshold_flops: FlopCount::default(),
        appendix: None,
        lemma31: None,
    };
    let method = Iht {
        rank: r.clone(),
        rule,
        kind,
        x,
        dense,
    };
    drive(problem, config, method, initial, started)
}

/// Sequentially truncated IHT; thresholding visits modes by ascending rank.
pub fn sempiht(problem: &Problem<'_>, config: &SolverConfig) -> Result<SolveOutput> {
    run(problem, config, Thresholding::Sequential, config.step_rule)
}

/// IHT with truncated-HOSVD thresholding.
pub fn tiht(problem: &Problem<'_>, config: &SolverConfig, variant: IhtVariant) -> Result<SolveOutput> {
    let rule = match (variant, config.step_rule) {
        (IhtVariant::Ciht, StepRule::Constant(a)) => StepRule::Constant(a),
        (IhtVariant::Ciht, StepRule::Normalized) => StepRule::Constant(1.0),
        (IhtVariant::Niht, _) => StepRule::Normalized,
    };
    run(problem, config, Thresholding::Independent, rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hosvd::t_hosvd;
    use crate::measurement::{sample_omega, MeasurementOperator, SamplingOperator};
    use crate::solvers::SolverStatus;
    use crate::testutil::*;

    #[test]
    fn full_observation_converges_in_one_step() {
        let mut g = rng(1);
        let t = low_rank(&[6, 6, 6], &[2, 2, 2], &mut g);
        let op = SamplingOperator::full(&[6, 6, 6]).unwrap();
        let y = op.apply(&t).unwrap();
        let mut cfg = SolverConfig::new(MultilinearRank::uniform(3, 2));
        cfg.step_rule = StepRule::Constant(1.0);
        let out = sempiht(&Problem::new(&op, &y).with_truth(&t), &cfg).unwrap();
        assert_eq!(out.trace.status, SolverStatus::Converged);
        assert!(out.trace.iterations() <= 1);
    }

    #[test]
    fn factor_projection_fixes_the_iterate_and_niht_alpha_is_one_on_full_data() {
        let mut g = rng(2);
        let z = gaussian_tensor(&[5, 6, 4], &mut g);
        let x = t_hosvd(&z, &MultilinearRank::new(vec![2, 3, 2])).unwrap();
        let dense = x.compose();
        let fx = factor_projection(&dense, &x, &mut FlopCounter::default()).unwrap();
        assert!(rel_diff(&fx, &dense) < 1e-12);
        let op = SamplingOperator::full(&[5, 6, 4]).unwrap();
        let f = factor_projection(&z, &x, &mut FlopCounter::default()).unwrap();
        assert!((super::super::step_size_normalized(&f, &op).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn baselines_recover_desk_instance() {
        let mut g = rng(3);
        let t = low_rank(&[12, 12, 12], &[2, 2, 2], &mut g);
        let op = sample_omega(&[12, 12, 12], 0.5, 3).unwrap();
        let y = op.apply(&t).unwrap();
        let cfg = SolverConfig::new(MultilinearRank::uniform(3, 2));
        let p = Problem::new(&op, &y).with_truth(&t);
        for out in [
            sempiht(&p, &cfg).unwrap(),
            tiht(&p, &cfg, IhtVariant::Niht).unwrap(),
        ] {
            assert_eq!(out.trace.status, SolverStatus::Converged);
            assert!(rel_diff(&out.estimate.compose(), &t) <= 1e-5);
        }
        let ciht = tiht(&p, &cfg, IhtVariant::Ciht).unwrap();
        assert!(ciht.trace.records[1..].iter().all(|r| r.alpha == Some(1.0)));
    }
}
