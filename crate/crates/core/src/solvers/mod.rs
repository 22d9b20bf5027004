//! Iterative recovery solvers and their diagnostics.
//!
//! All solvers minimize `||A(X) - y||^2` over tensors of multilinear rank
//! `r`, starting from a truncation of `A*(y)`. They share the stopping rule,
//! the divergence guard and the trace format implemented here.

mod diagnostics;
mod iht;
mod rgd;
mod sm_qrgd;

use std::io::Write;
use std::time::Instant;

pub use diagnostics::{
    gamma_constants, kappa1, monitor_appendix, AppendixMonitor, ConvergenceConstants, GammaReport,
};
pub use iht::{sempiht, tiht, IhtVariant};
pub use rgd::{rgd, tucker_tangent_project, TuckerTangentVector};
pub use sm_qrgd::{init_point, sm_qrgd};

use crate::error::{Error, Result};
use crate::flops::FlopCount;
use crate::hosvd::TuckerFactorization;
use crate::linalg::dot;
use crate::measurement::MeasurementOperator;
use crate::tensor::{DenseTensor, MultilinearRank};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    Constant(f64),
    /// `||F||^2 / ||A(F)||^2` for the solver's projected gradient `F`.
    Normalized,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MonitorFlags {
    /// Tangent-space residual of each SM-QRGD iterate.
    pub lemma31: bool,
    /// The three distance ratios of [`monitor_appendix`]; needs ground truth.
    pub appendix: bool,
}

impl MonitorFlags {
    pub fn all() -> Self {
        Self {
            lemma31: true,
            appendix: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub rank: MultilinearRank,
    pub step_rule: StepRule,
    pub max_iters: usize,
    pub tol_rel_err: f64,
    /// Mode whose matricization carries the tangent space (SM-QRGD only).
    pub tangent_mode: usize,
    pub monitors: MonitorFlags,
    /// Recorded for provenance; the solvers themselves are deterministic.
    pub seed: u64,
}

impl SolverConfig {
    /// Normalized steps, 100 iterations, tolerance `1e-5`, tangent mode 0.
    pub fn new(rank: MultilinearRank) -> Self {
        Self {
            rank,
            step_rule: StepRule::Normalized,
            max_iters: 100,
            tol_rel_err: 1e-5,
            tangent_mode: 0,
            monitors: MonitorFlags::default(),
            seed: 0,
        }
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        self.rank.check_against(dims)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if self.tol_rel_err.is_nan() || self.tol_rel_err < 0.0 {
            return Err(Error::InvalidArgument("tolerance must be nonnegative".into()));
        }
        if let StepRule::Constant(a) = self.step_rule {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument(format!("step size {a} must be positive")));
            }
        }
        if self.tangent_mode >= dims.len() {
            return Err(Error::ModeOutOfRange {
                mode: self.tangent_mode,
                order: dims.len(),
            });
        }
        Ok(())
    }
}

/// Measurements `y = A(T)`, optionally with the ground truth `T`.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub op: &'a dyn MeasurementOperator,
    pub y: &'a [f64],
    pub truth: Option<&'a DenseTensor>,
}

impl<'a> Problem<'a> {
    pub fn new(op: &'a dyn MeasurementOperator, y: &'a [f64]) -> Self {
        Self { op, y, truth: None }
    }

    pub fn with_truth(mut self, truth: &'a DenseTensor) -> Self {
        self.truth = Some(truth);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    MaxIters,
    /// Error grew past `1e3` times its initial value, or became non-finite.
    Diverged,
    /// The normalized step was undefined (`A` annihilates the search direction).
    Stationary,
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIters => "max_iters",
            Self::Diverged => "diverged",
            Self::Stationary => "stationary",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `||X - T|| / ||T||` with ground truth, otherwise equal to `residual`.
    pub rel_err: f64,
    /// `||A(X) - y|| / ||y||`.
    pub residual: f64,
    pub alpha: Option<f64>,
    /// All counted work of the iteration.
    pub flops: FlopCount,
    /// The part of `flops` spent on thresholding (retraction and composition).
    pub threshold_flops: FlopCount,
    pub wall_ns: u64,
    pub appendix: Option<AppendixMonitor>,
    pub lemma31: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
    pub status: SolverStatus,
}

pub const TRACE_CSV_HEADER: &str =
    "iter,rel_err,residual,alpha,flops,wall_ns,monitor1,monitor2,monitor3,lemma31";

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

impl SolverTrace {
    pub fn final_rel_err(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.rel_err)
    }

    /// Number of iterations performed (the initial point is iteration 0).
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    /// First iteration whose error is at most `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.records.iter().find(|r| r.rel_err <= tol).map(|r| r.iter)
    }

    /// CSV row for one record. `wall_ns` is left empty unless `timing`.
    pub fn csv_row(rec: &IterationRecord, timing: bool) -> String {
        let (m1, m2, m3) = match rec.appendix {
            Some(a) => (Some(a.x_ratio), Some(a.xhat_ratio), Some(a.gap_ratio)),
            None => (None, None, None),
        };
        format!(
            "{},{:e},{:e},{},{},{},{},{},{},{}",
            rec.iter,
            rec.rel_err,
            rec.residual,
            opt(rec.alpha),
            rec.flops.total(),
            if timing { rec.wall_ns.to_string() } else { String::new() },
            opt(m1),
            opt(m2),
            opt(m3),
            opt(rec.lemma31),
        )
    }

    pub fn write_csv<W: Write>(&self, mut w: W, timing: bool) -> Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        for rec in &self.records {
            writeln!(w, "{}", Self::csv_row(rec, timing))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub estimate: TuckerFactorization,
    pub trace: SolverTrace,
}

/// `||F||^2 / ||A(F)||^2`.
pub fn step_size_normalized(direction: &DenseTensor, op: &dyn MeasurementOperator) -> Result<f64> {
    let num = direction.inner(direction)?;
    let af = op.apply(direction)?;
    let den = dot(&af, &af);
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DegenerateStep);
    }
    Ok(num / den)
}

pub(crate) fn step_size(rule: StepRule, direction: &DenseTensor, op: &dyn MeasurementOperator) -> Result<f64> {
    match rule {
        StepRule::Constant(a) => Ok(a),
        StepRule::Normalized => step_size_normalized(direction, op),
    }
}

/// Outcome of one solver step.
pub(crate) struct Step {
    pub alpha: f64,
    pub flops: FlopCount,
    pub threshold_flops: FlopCount,
    pub appendix: Option<AppendixMonitor>,
    pub lemma31: Option<f64>,
}

/// A solver as seen by [`drive`].
pub(crate) trait Method {
    fn current(&self) -> &DenseTensor;

    /// Moves to the next iterate given the negative gradient `A*(y - A(X))`.
    fn step(&mut self, grad: DenseTensor, problem: &Problem<'_>) -> Result<Step>;

    fn into_estimate(self) -> TuckerFactorization;
}

struct Measured {
    resid_vec: Vec<f64>,
    residual: f64,
    rel_err: f64,
}

fn measure(problem: &Problem<'_>, x: &DenseTensor) -> Result<Measured> {
    let ax = problem.op.apply(x)?;
    let resid_vec: Vec<f64> = problem.y.iter().zip(&ax).map(|(y, a)| y - a).collect();
    let y_norm = dot(problem.y, problem.y).sqrt();
    let r_norm = dot(&resid_vec, &resid_vec).sqrt();
    let residual = if y_norm > 0.0 { r_norm / y_norm } else { r_norm };
    let rel_err = match problem.truth {
        Some(t) => {
            let e = x.distance(t)?;
            let tn = t.frob_norm();
            if tn > 0.0 {
                e / tn
            } else {
                e
            }
        }
        None => residual,
    };
    Ok(Measured {
        resid_vec,
        residual,
        rel_err,
    })
}

pub(crate) fn check_problem(problem: &Problem<'_>, config: &SolverConfig) -> Result<()> {
    let dims = problem.op.dims();
    config.validate(dims)?;
    if problem.y.len() != problem.op.num_measurements() {
        return Err(crate::error::shape_mismatch(
            &[problem.op.num_measurements()],
            &[problem.y.len()],
        ));
    }
    if let Some(t) = problem.truth {
        if t.dims() != dims {
            return Err(crate::error::shape_mismatch(dims, t.dims()));
        }
    }
    Ok(())
}

const DIVERGENCE_FACTOR: f64 = 1e3;

/// Runs `method` from its current point under the shared stopping rules.
pub(crate) fn drive<M: Method>(
    problem: &Problem<'_>,
    config: &SolverConfig,
    mut method: M,
    initial: Step,
    started: Instant,
) -> Result<SolveOutput> {
    let mut meas = measure(problem, method.current())?;
    let initial_err = meas.rel_err;
    let mut records = vec![IterationRecord {
        iter: 0,
        rel_err: meas.rel_err,
        residual: meas.residual,
        alpha: None,
        flops: initial.flops,
        threshold_flops: initial.threshold_flops,
        wall_ns: started.elapsed().as_nanos() as u64,
        appendix: initial.appendix,
        lemma31: initial.lemma31,
    }];
    let stop = |err: f64| -> Option<SolverStatus> {
        if err <= config.tol_rel_err {
            Some(SolverStatus::Converged)
        } else if !err.is_finite() || err > DIVERGENCE_FACTOR * initial_err {
            Some(SolverStatus::Diverged)
        } else {
            None
        }
    };
    let mut status = stop(meas.rel_err);
    let mut k = 0;
    while status.is_none() {
        if k == config.max_iters {
            status = Some(SolverStatus::MaxIters);
            break;
        }
        k += 1;
        let clock = Instant::now();
        let grad = problem.op.adjoint(&meas.resid_vec)?;
        let step = match method.step(grad, problem) {
            Ok(s) => s,
            Err(Error::DegenerateStep) => {
                status = Some(SolverStatus::Stationary);
                break;
            }
            Err(e) => return Err(e),
        };
        meas = measure(problem, method.current())?;
        records.push(IterationRecord {
            iter: k,
            rel_err: meas.rel_err,
            residual: meas.residual,
            alpha: Some(step.alpha),
            flops: step.flops,
            threshold_flops: step.threshold_flops,
            wall_ns: clock.elapsed().as_nanos() as u64,
            appendix: step.appendix,
            lemma31: step.lemma31,
        });
        status = stop(meas.rel_err);
    }
    Ok(SolveOutput {
        estimate: method.into_estimate(),
        trace: SolverTrace {
            records,
            status: status.expect("loop exits with a status"),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{sample_omega, SamplingOperator};
    use crate::testutil::*;

    struct Scaled<'a>(&'a dyn MeasurementOperator, f64);

    impl MeasurementOperator for Scaled<'_> {
        fn dims(&self) -> &[usize] {
            self.0.dims()
        }
        fn num_measurements(&self) -> usize {
            self.0.num_measurements()
        }
        fn apply(&self, x: &DenseTensor) -> Result<Vec<f64>> {
            Ok(self.0.apply(x)?.into_iter().map(|v| v * self.1).collect())
        }
        fn adjoint(&self, y: &[f64]) -> Result<DenseTensor> {
            let mut t = self.0.adjoint(y)?;
            t.scale(self.1);
            Ok(t)
        }
    }

    #[test]
    fn normalized_step_identity_and_homogeneity() {
        let mut g = rng(1);
        let f = gaussian_tensor(&[4, 4, 4], &mut g);
        let full = SamplingOperator::full(&[4, 4, 4]).unwrap();
        assert_eq!(step_size_normalized(&f, &full).unwrap(), 1.0);
        let s = sample_omega(&[4, 4, 4], 0.5, 3).unwrap();
        let base = step_size_normalized(&f, &s).unwrap();
        let scaled = step_size_normalized(&f, &Scaled(&s, 3.0)).unwrap();
        assert!((scaled - base / 9.0).abs() < 1e-12 * base);
        let zero = DenseTensor::zeros(&[4, 4, 4]).unwrap();
        assert!(matches!(step_size_normalized(&zero, &s), Err(Error::DegenerateStep)));
    }

    #[test]
    fn config_validation() {
        let dims = [5, 5, 5];
        let mut c = SolverConfig::new(MultilinearRank::uniform(3, 2));
        assert!(c.validate(&dims).is_ok());
        c.max_iters = 0;
        assert!(c.validate(&dims).is_err());
        c.max_iters = 5;
        c.step_rule = StepRule::Constant(0.0);
        assert!(c.validate(&dims).is_err());
        c.step_rule = StepRule::Constant(1.0);
        c.tangent_mode = 3;
        assert!(c.validate(&dims).is_err());
        c.tangent_mode = 0;
        c.rank = MultilinearRank::uniform(3, 6);
        assert!(c.validate(&dims).is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let rec = IterationRecord {
            iter: 3,
            rel_err: 0.5,
            residual: 0.25,
            alpha: Some(1.0),
            flops: FlopCount {
                leading: 10,
                lower_order: 2,
                factorization: 3,
            },
            threshold_flops: FlopCount::default(),
            wall_ns: 77,
            appendix: None,
            lemma31: Some(1e-16),
        };
        assert_eq!(SolverTrace::csv_row(&rec, false), "3,5e-1,2.5e-1,1e0,15,,,,,1e-16");
        assert_eq!(SolverTrace::csv_row(&rec, true), "3,5e-1,2.5e-1,1e0,15,77,,,,1e-16");
    }
}
