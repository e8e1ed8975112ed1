//! Numerical verification of quantum connections on contact manifolds.
//!
//! Operators are dense complex matrices on truncated Fock spaces or sampled
//! grids. Geometry is chart based: fields are closures returning component
//! arrays, and exterior calculus is done with analytic data where available
//! and central differences otherwise.

pub mod connection;
pub mod contractor;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metaplectic;
pub mod models;
pub mod operator_core;

pub use error::{CqError, Result};

pub type C64 = num_complex::Complex64;
pub type Mat = nalgebra::DMatrix<C64>;
pub type CVec = nalgebra::DVector<C64>;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `max` that lets NaN through, so a broken residual never reads as zero.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Maximum absolute entry; NaN if any entry is NaN.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, z| nan_max(acc, z.norm()))
}

/// Maximum absolute entry over the leading `k`×`k` block.
pub fn block_max_abs(m: &Mat, k: usize) -> f64 {
    let k = k.min(m.nrows()).min(m.ncols());
    let mut r: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            r = nan_max(r, m[(i, j)].norm());
        }
    }
    r
}

/// Maximum absolute entry restricted to rows and columns in `idx`.
pub fn index_max_abs(m: &Mat, idx: &[usize]) -> f64 {
    let mut r: f64 = 0.0;
    for &i in idx {
        for &j in idx {
            r = nan_max(r, m[(i, j)].norm());
        }
    }
    r
}
