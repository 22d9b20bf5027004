//! Multiply-add accounting for the dense kernels.
//!
//! A matrix product `(m x k) * (k x n)` costs `m*k*n` multiply-adds. It is
//! tallied as *leading* when at least two of `m`, `k`, `n` exceed the
//! counter's small-dimension threshold (typically twice the tangent rank),
//! and as *lower order* otherwise. Householder and Jacobi work inside QR and
//! SVD is tallied separately as *factorization*.

use std::ops::{Add, AddAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlopCount {
    pub leading: u64,
    pub lower_order: u64,
    pub factorization: u64,
}

impl FlopCount {
    pub fn total(&self) -> u64 {
        self.leading + self.lower_order + self.factorization
    }
}

impl Add for FlopCount {
    type Output = FlopCount;

    fn add(self, rhs: FlopCount) -> FlopCount {
        FlopCount {
            leading: self.leading + rhs.leading,
            lower_order: self.lower_order + rhs.lower_order,
            factorization: self.factorization + rhs.factorization,
        }
    }
}

impl AddAssign for FlopCount {
    fn add_assign(&mut self, rhs: FlopCount) {
        *self = *self + rhs;
    }
}

#[derive(Clone, Debug)]
pub struct FlopCounter {
    small: usize,
    count: FlopCount,
}

impl FlopCounter {
    /// A counter that classifies dimensions `<= small` as lower order.
    pub fn new(small: usize) -> Self {
        Self {
            small,
            count: FlopCount::default(),
        }
    }

    pub fn product(&mut self, m: usize, k: usize, n: usize) {
        let macs = (m as u64) * (k as u64) * (n as u64);
        let large = [m, k, n].iter().filter(|&&x| x > self.small).count();
        if large >= 2 {
            self.count.leading += macs;
        } else {
            self.count.lower_order += macs;
        }
    }

    pub fn factorization(&mut self, macs: u64) {
        self.count.factorization += macs;
    }

    pub fn count(&self) -> FlopCount {
        self.count
    }

    /// Returns the count accumulated so far and resets it.
    pub fn take(&mut self) -> FlopCount {
        std::mem::take(&mut self.count)
    }
}

impl Default for FlopCounter {
    fn default() -> Self {
        Self::new(0)
    }
}
