//! C ABI over the recovery library.
//!
//! Objects are opaque handles created by `tr_*_new` style functions and
//! released with the matching `tr_*_free`. Every fallible call returns a
//! [`TrStatus`]; on failure a message is available from
//! [`tr_last_error_message`] on the same thread. Panics never cross the
//! boundary.
//!
//! Modes are 0-based throughout, matching the Rust API.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use tucker_recover::harness::synth_tensor;
use tucker_recover::measurement::sample_omega;
use tucker_recover::solvers::{
    gamma_constants, rgd, sempiht, sm_qrgd, tiht, ConvergenceConstants, IhtVariant, Problem, SolveOutput,
    SolverConfig, SolverStatus, StepRule,
};
use tucker_recover::{DenseTensor, Error, MeasurementOperator, MultilinearRank, SamplingOperator};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    RankExceedsDimension = 4,
    DegenerateStep = 5,
    Io = 6,
    Panic = 7,
}

/// Solver selector for [`tr_solve`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrMethod {
    SmQrgd = 0,
    Sempiht = 1,
    TihtCiht = 2,
    TihtNiht = 3,
    Rgd = 4,
}

/// Final state of a solve.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrSolveStatus {
    Converged = 0,
    MaxIters = 1,
    Diverged = 2,
    Stationary = 3,
}

/// Options for [`tr_solve`]. Obtain defaults from [`tr_solve_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TrSolveOptions {
    pub max_iters: usize,
    pub tol_rel_err: f64,
    /// A positive value selects a constant step; 0 selects the normalized step.
    pub constant_step: f64,
    pub tangent_mode: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct TrGammaReport {
    pub gamma1: f64,
    pub gamma2: f64,
    pub threshold1: f64,
    pub threshold2: f64,
    pub gamma1_contracts: bool,
    pub gamma2_contracts: bool,
}

/// Opaque dense tensor.
pub struct TrTensor(DenseTensor);

/// Opaque entry-sampling operator.
pub struct TrSampling(SamplingOperator);

/// Opaque solver result.
pub struct TrResult(SolveOutput);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TrStatus {
    match e {
        Error::ShapeMismatch { .. } => TrStatus::ShapeMismatch,
        Error::RankExceedsDimension { .. } => TrStatus::RankExceedsDimension,
        Error::DegenerateStep => TrStatus::DegenerateStep,
        Error::Io(_) | Error::Format(_) => TrStatus::Io,
        _ => TrStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TrStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            TrStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            TrStatus::Panic
        }
    }
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

fn out_arg<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    // SAFETY: checked non-null; the caller provides a writable slot.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Message for the most recent failure on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a tensor from `d` dimensions and, if `data` is non-null,
/// `prod(dims)` column-major values (mode 0 fastest); otherwise zeros.
///
/// # Safety
/// `dims` must point to `d` values and `data` (if non-null) to `prod(dims)`.
#[no_mangle]
pub unsafe extern "C" fn tr_tensor_new(
    dims: *const usize,
    d: usize,
    data: *const f64,
    out: *mut *mut TrTensor,
) -> TrStatus {
    guard(|| {
        let dims = slice_arg(dims, d, "dims")?;
        let mut t = DenseTensor::zeros(dims)?;
        if !data.is_null() {
            let n = t.len();
            t.data_mut().copy_from_slice(slice::from_raw_parts(data, n));
        }
        out_arg(out, TrTensor(t))
    })
}

/// A random tensor of multilinear rank `ranks`, built by truncating a
/// Gaussian tensor; deterministic in `seed`.
///
/// # Safety
/// `dims` and `ranks` must each point to `d` values.
#[no_mangle]
pub unsafe extern "C" fn tr_tensor_synth(
    dims: *const usize,
    ranks: *const usize,
    d: usize,
    seed: u64,
    out: *mut *mut TrTensor,
) -> TrStatus {
    guard(|| {
        let dims = slice_arg(dims, d, "dims")?;
        let rank = MultilinearRank::new(slice_arg(ranks, d, "ranks")?.to_vec());
        out_arg(out, TrTensor(synth_tensor(dims, &rank, seed)?.dense))
    })
}

/// # Safety
/// `t` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tr_tensor_free(t: *mut TrTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Order of the tensor, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tr_tensor_order(t: *const TrTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.order())
}

/// Number of entries, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tr_tensor_len(t: *const TrTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

/// Copies the dimensions into `dims`, which holds `cap` values.
///
/// # Safety
/// `t` must be a live handle and `dims` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn tr_tensor_dims(t: *const TrTensor, dims: *mut usize, cap: usize) -> TrStatus {
    guard(|| {
        let t = ref_arg(t, "tensor")?;
        copy_out(t.0.dims(), dims, cap)
    })
}

/// Copies the column-major entries into `data`, which holds `cap` values.
///
/// # Safety
/// `t` must be a live handle and `data` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn tr_tensor_data(t: *const TrTensor, data: *mut f64, cap: usize) -> TrStatus {
    guard(|| {
        let t = ref_arg(t, "tensor")?;
        copy_out(t.0.data(), data, cap)
    })
}

/// Frobenius distance between two tensors of equal shape.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tr_tensor_distance(a: *const TrTensor, b: *const TrTensor, out: *mut f64) -> TrStatus {
    guard(|| {
        let (a, b) = (ref_arg(a, "a")?, ref_arg(b, "b")?);
        let dist = a.0.distance(&b.0)?;
        *out.as_mut().ok_or(Fail::Null("out"))? = dist;
        Ok(())
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], dst: *mut T, cap: usize) -> Result<(), Fail> {
    if cap < src.len() {
        return Err(Fail::Lib(Error::InvalidArgument(format!(
            "buffer holds {cap} values, {} needed",
            src.len()
        ))));
    }
    if src.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return Err(Fail::Null("buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Samples each entry independently with probability `rho`.
///
/// # Safety
/// `dims` must point to `d` values.
#[no_mangle]
pub unsafe extern "C" fn tr_sampling_new(
    dims: *const usize,
    d: usize,
    rho: f64,
    seed: u64,
    out: *mut *mut TrSampling,
) -> TrStatus {
    guard(|| {
        let dims = slice_arg(dims, d, "dims")?;
        out_arg(out, TrSampling(sample_omega(dims, rho, seed)?))
    })
}

/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tr_sampling_free(op: *mut TrSampling) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Number of observed entries, or 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tr_sampling_len(op: *const TrSampling) -> usize {
    op.as_ref().map_or(0, |op| op.0.num_measurements())
}

/// Writes the observed entries of `t` into `y`, which holds `cap` values.
///
/// # Safety
/// `op` and `t` must be live handles; `y` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn tr_sampling_apply(
    op: *const TrSampling,
    t: *const TrTensor,
    y: *mut f64,
    cap: usize,
) -> TrStatus {
    guard(|| {
        let (op, t) = (ref_arg(op, "op")?, ref_arg(t, "tensor")?);
        copy_out(&op.0.apply(&t.0)?, y, cap)
    })
}

#[no_mangle]
pub extern "C" fn tr_solve_options_default() -> TrSolveOptions {
    TrSolveOptions {
        max_iters: 100,
        tol_rel_err: 1e-5,
        constant_step: 0.0,
        tangent_mode: 0,
    }
}

/// Recovers a rank-`ranks` tensor from the `m` samples `y` of `op`.
/// `truth` may be null; when given, relative errors are measured against it.
///
/// # Safety
/// Handles must be live; `y` must point to `m` values and `ranks` to as many
/// values as the operator's order.
#[no_mangle]
pub unsafe extern "C" fn tr_solve(
    method: TrMethod,
    op: *const TrSampling,
    y: *const f64,
    m: usize,
    ranks: *const usize,
    opts: *const TrSolveOptions,
    truth: *const TrTensor,
    out: *mut *mut TrResult,
) -> TrStatus {
    guard(|| {
        let op = ref_arg(op, "op")?;
        let y = slice_arg(y, m, "y")?;
        let d = op.0.dims().len();
        let rank = MultilinearRank::new(slice_arg(ranks, d, "ranks")?.to_vec());
        let opts = if opts.is_null() { tr_solve_options_default() } else { *opts };
        let mut cfg = SolverConfig::new(rank);
        cfg.max_iters = opts.max_iters;
        cfg.tol_rel_err = opts.tol_rel_err;
        cfg.tangent_mode = opts.tangent_mode;
        if opts.constant_step > 0.0 {
            cfg.step_rule = StepRule::Constant(opts.constant_step);
        }
        let mut problem = Problem::new(&op.0 as &dyn MeasurementOperator, y);
        if let Some(t) = truth.as_ref() {
            problem = problem.with_truth(&t.0);
        }
        let res = match method {
            TrMethod::SmQrgd => sm_qrgd(&problem, &cfg),
            TrMethod::Sempiht => sempiht(&problem, &cfg),
            TrMethod::TihtCiht => tiht(&problem, &cfg, IhtVariant::Ciht),
            TrMethod::TihtNiht => tiht(&problem, &cfg, IhtVariant::Niht),
            TrMethod::Rgd => rgd(&problem, &cfg),
        }?;
        out_arg(out, TrResult(res))
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tr_result_free(r: *mut TrResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tr_result_status(r: *const TrResult) -> TrSolveStatus {
    match (*r).0.trace.status {
        SolverStatus::Converged => TrSolveStatus::Converged,
        SolverStatus::MaxIters => TrSolveStatus::MaxIters,
        SolverStatus::Diverged => TrSolveStatus::Diverged,
        SolverStatus::Stationary => TrSolveStatus::Stationary,
    }
}

/// Iterations performed.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tr_result_iterations(r: *const TrResult) -> usize {
    (*r).0.trace.iterations()
}

/// Relative error of the last iterate.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tr_result_final_rel_err(r: *const TrResult) -> f64 {
    (*r).0.trace.final_rel_err()
}

/// The composed estimate as a new tensor handle.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tr_result_estimate(r: *const TrResult, out: *mut *mut TrTensor) -> TrStatus {
    guard(|| {
        let r = ref_arg(r, "result")?;
        out_arg(out, TrTensor(r.0.estimate.compose()))
    })
}

/// Contraction constants of the convergence analysis.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tr_gamma_constants(
    d: usize,
    r1: usize,
    kappa1: f64,
    ric: f64,
    out: *mut TrGammaReport,
) -> TrStatus {
    guard(|| {
        let rep = gamma_constants(&ConvergenceConstants { d, r1, kappa1, ric })?;
        *out.as_mut().ok_or(Fail::Null("out"))? = TrGammaReport {
            gamma1: rep.gamma1,
            gamma2: rep.gamma2,
            threshold1: rep.threshold1,
            threshold2: rep.threshold2,
            gamma1_contracts: rep.gamma1_contracts,
            gamma2_contracts: rep.gamma2_contracts,
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    #[test]
    fn errors_set_code_and_message() {
        let mut t = ptr::null_mut();
        let dims = [3usize];
        let s = unsafe { tr_tensor_new(dims.as_ptr(), 1, ptr::null(), &mut t) };
        assert_eq!(s, TrStatus::InvalidArgument);
        assert!(t.is_null());
        let msg = unsafe { CStr::from_ptr(tr_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("shape"));
        let s = unsafe { tr_tensor_new(ptr::null(), 3, ptr::null(), &mut t) };
        assert_eq!(s, TrStatus::NullPointer);
    }

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::DegenerateStep), TrStatus::DegenerateStep);
        assert_eq!(
            status_of(&Error::RankExceedsDimension { mode: 0, rank: 3, dim: 2 }),
            TrStatus::RankExceedsDimension
        );
        assert_eq!(status_of(&Error::Format("x".into())), TrStatus::Io);
    }
}
