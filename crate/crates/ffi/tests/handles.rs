use std::ffi::CStr;
use std::ptr;

use tucker_recover_ffi::*;

#[test]
fn complete_and_recover_through_handles() {
    let dims = [10usize, 10, 10];
    let ranks = [2usize, 2, 2];
    unsafe {
        let mut truth = ptr::null_mut();
        assert_eq!(tr_tensor_synth(dims.as_ptr(), ranks.as_ptr(), 3, 5, &mut truth), TrStatus::Ok);
        assert_eq!(tr_tensor_order(truth), 3);
        assert_eq!(tr_tensor_len(truth), 1000);

        let mut op = ptr::null_mut();
        assert_eq!(tr_sampling_new(dims.as_ptr(), 3, 0.5, 9, &mut op), TrStatus::Ok);
        let m = tr_sampling_len(op);
        let mut y = vec![0.0; m];
        assert_eq!(tr_sampling_apply(op, truth, y.as_mut_ptr(), m), TrStatus::Ok);

        let opts = tr_solve_options_default();
        let mut res = ptr::null_mut();
        let s = tr_solve(TrMethod::SmQrgd, op, y.as_ptr(), m, ranks.as_ptr(), &opts, truth, &mut res);
        assert_eq!(s, TrStatus::Ok);
        assert_eq!(tr_result_status(res), TrSolveStatus::Converged);
        assert!(tr_result_final_rel_err(res) <= 1e-5);
        assert!(tr_result_iterations(res) > 0);

        let mut est = ptr::null_mut();
        assert_eq!(tr_result_estimate(res, &mut est), TrStatus::Ok);
        let mut dist = f64::NAN;
        assert_eq!(tr_tensor_distance(est, truth, &mut dist), TrStatus::Ok);
        let mut data = vec![0.0; 1000];
        assert_eq!(tr_tensor_data(truth, data.as_mut_ptr(), 1000), TrStatus::Ok);
        let norm = data.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(dist <= 1e-5 * norm);

        tr_tensor_free(est);
        tr_result_free(res);
        tr_sampling_free(op);
        tr_tensor_free(truth);
    }
}

#[test]
fn every_method_runs_without_truth() {
    let dims = [8usize, 8, 8];
    let ranks = [1usize, 1, 1];
    let methods = [TrMethod::SmQrgd, TrMethod::Sempiht, TrMethod::TihtCiht, TrMethod::TihtNiht, TrMethod::Rgd];
    unsafe {
        let mut truth = ptr::null_mut();
        assert_eq!(tr_tensor_synth(dims.as_ptr(), ranks.as_ptr(), 3, 1, &mut truth), TrStatus::Ok);
        let mut op = ptr::null_mut();
        assert_eq!(tr_sampling_new(dims.as_ptr(), 3, 0.6, 2, &mut op), TrStatus::Ok);
        let m = tr_sampling_len(op);
        let mut y = vec![0.0; m];
        assert_eq!(tr_sampling_apply(op, truth, y.as_mut_ptr(), m), TrStatus::Ok);
        for method in methods {
            let mut res = ptr::null_mut();
            let s = tr_solve(method, op, y.as_ptr(), m, ranks.as_ptr(), ptr::null(), ptr::null(), &mut res);
            assert_eq!(s, TrStatus::Ok, "{method:?}");
            assert_ne!(tr_result_status(res), TrSolveStatus::Diverged, "{method:?}");
            tr_result_free(res);
        }
        tr_sampling_free(op);
        tr_tensor_free(truth);
    }
}

#[test]
fn error_codes_and_messages() {
    let dims = [4usize, 4, 4];
    unsafe {
        let mut t = ptr::null_mut();
        let too_big = [5usize, 1, 1];
        assert_eq!(
            tr_tensor_synth(dims.as_ptr(), too_big.as_ptr(), 3, 0, &mut t),
            TrStatus::RankExceedsDimension
        );
        assert!(t.is_null());
        let msg = CStr::from_ptr(tr_last_error_message()).to_str().unwrap();
        assert!(msg.contains("exceeds"), "{msg}");

        let mut op = ptr::null_mut();
        assert_eq!(tr_sampling_new(dims.as_ptr(), 3, 1.5, 0, &mut op), TrStatus::InvalidArgument);

        let mut a = ptr::null_mut();
        assert_eq!(tr_tensor_new(dims.as_ptr(), 3, ptr::null(), &mut a), TrStatus::Ok);
        let mut small = [0usize; 2];
        assert_eq!(tr_tensor_dims(a, small.as_mut_ptr(), 2), TrStatus::InvalidArgument);
        let mut b = ptr::null_mut();
        let other = [4usize, 4, 5];
        assert_eq!(tr_tensor_new(other.as_ptr(), 3, ptr::null(), &mut b), TrStatus::Ok);
        let mut dist = 0.0;
        assert_eq!(tr_tensor_distance(a, b, &mut dist), TrStatus::ShapeMismatch);
        assert_eq!(tr_tensor_distance(a, ptr::null(), &mut dist), TrStatus::NullPointer);
        tr_tensor_free(a);
        tr_tensor_free(b);
        tr_tensor_free(ptr::null_mut());
    }
}

#[test]
fn gamma_report_matches_reference_values() {
    let mut rep = TrGammaReport::default();
    assert_eq!(unsafe { tr_gamma_constants(3, 1, 1.0, 0.01, &mut rep) }, TrStatus::Ok);
    assert!((rep.gamma1 - 0.436326).abs() < 1e-6);
    assert!((rep.threshold1 - 0.017539).abs() < 1e-6);
    assert!(rep.gamma1_contracts);
    assert_eq!(unsafe { tr_gamma_constants(3, 1, 1.0, 0.01, ptr::null_mut()) }, TrStatus::NullPointer);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(tr_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
