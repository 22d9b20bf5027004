//! Theoretical convergence constants and the appendix inequality monitors.

use crate::error::{Error, Result};
use crate::linalg::matmul;
use crate::tangent::ModeOneBasis;
use crate::tensor::DenseTensor;

/// Inputs of the recovery guarantees. `ric` is a hypothesised restricted
/// isometry constant of order `3 r1` for the first mode; it is not computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceConstants {
    pub d: usize,
    pub r1: usize,
    pub kappa1: f64,
    pub ric: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaReport {
    /// Contraction factor with unit step size.
    pub gamma1: f64,
    /// Contraction factor with normalized step size.
    pub gamma2: f64,
    /// Sufficient bound on `ric` for `gamma1 < 1`.
    pub threshold1: f64,
    /// Sufficient bound on `ric` for `gamma2 < 1`.
    pub threshold2: f64,
    pub gamma1_contracts: bool,
    pub gamma2_contracts: bool,
    pub ric_below_threshold1: bool,
    pub ric_below_threshold2: bool,
}

pub fn gamma_constants(c: &ConvergenceConstants) -> Result<GammaReport> {
    if c.d < 2 || c.r1 == 0 {
        return Err(Error::InvalidArgument("need d >= 2 and r1 >= 1".into()));
    }
    if !c.kappa1.is_finite() || c.kappa1 < 1.0 {
        return Err(Error::InvalidArgument(format!("kappa1 = {} must be >= 1", c.kappa1)));
    }
    if !(0.0..1.0).contains(&c.ric) {
        return Err(Error::InvalidArgument(format!("ric = {} must lie in [0, 1)", c.ric)));
    }
    let d = c.d as f64;
    let sd = d.sqrt();
    let sdm = (d - 1.0).sqrt();
    let rk = (c.r1 as f64).sqrt() * c.kappa1;
    let r = c.ric;
    let gamma1 = r * (8.0 * rk * ((sdm + 1.0) * (r + 2.0) + r) + sd + 3.0);
    let gamma2 = 2.0 * r / (1.0 - r) * (4.0 * rk * (2.0 * (sdm + 1.0) + r) + sd + 2.0);
    let threshold1 = 0.5f64.min(1.0 / ((20.0 * sdm + 24.0) * rk + sd + 3.0));
    let threshold2 = 0.5f64.min(1.0 / ((32.0 * sdm + 40.0) * rk + 4.0 * sd + 8.0));
    Ok(GammaReport {
        gamma1,
        gamma2,
        threshold1,
        threshold2,
        gamma1_contracts: gamma1 < 1.0,
        gamma2_contracts: gamma2 < 1.0,
        ric_below_threshold1: r < threshold1,
        ric_below_threshold2: r < threshold2,
    })
}

/// `sigma_1 / sigma_{r1}` of the mode-1 matricization of `t`.
pub fn kappa1(t: &DenseTensor, r1: usize) -> Result<f64> {
    let s = t.mode_singular_values(0)?;
    if r1 == 0 || r1 > s.len() {
        return Err(Error::InvalidArgument(format!("r1 = {r1} out of range")));
    }
    Ok(s[0] / s[r1 - 1])
}

/// Distance ratios against `||W - T||`, bounded by `sqrt(d) + 1`, `2` and
/// `sqrt(d) + 1` respectively.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppendixMonitor {
    /// `||X - T|| / ||W - T||`.
    pub x_ratio: f64,
    /// `||Xhat - T|| / ||W - T||`.
    pub xhat_ratio: f64,
    /// `||Xhat - X|| / ||W - T||`.
    pub gap_ratio: f64,
}

impl AppendixMonitor {
    pub fn bounds(d: usize) -> [f64; 3] {
        let b = (d as f64).sqrt() + 1.0;
        [b, 2.0, b]
    }

    pub fn within_bounds(&self, d: usize, slack: f64) -> bool {
        let b = Self::bounds(d);
        self.x_ratio <= b[0] + slack && self.xhat_ratio <= b[1] + slack && self.gap_ratio <= b[2] + slack
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Monitors for the pre-truncation point `w`, its sequential truncation `x`
/// and the mode-1 truncation `Xhat = U U^T M1(w)` defined by `basis`.
pub fn monitor_appendix(
    w: &DenseTensor,
    x: &DenseTensor,
    basis: &ModeOneBasis,
    truth: &DenseTensor,
) -> Result<AppendixMonitor> {
    let utw = matmul(basis.u.t(), w.mode1_view())?;
    let xhat = DenseTensor::tensorize(&matmul(basis.u.as_ref(), utw.as_ref())?, w.dims(), 0)?;
    let den = w.distance(truth)?;
    Ok(AppendixMonitor {
        x_ratio: ratio(x.distance(truth)?, den),
        xhat_ratio: ratio(xhat.distance(truth)?, den),
        gap_ratio: ratio(xhat.distance(x)?, den),
    })
}
