//! Cylindrical `R^3` with `α = ½r²dθ - dz`.
//!
//! The calibration rotates with θ: `s_-(θ) = -cosθ s1 + sinθ s2` and
//! `s_+(θ) = -sinθ s1 - cosθ s2`, so that `∂_θ s_- = -s_+`, `∂_θ s_+ = s_-`.
//! Flatness needs the grade-zero term `dθ (s1² + s2²)/(iħ)`.

use std::sync::Arc;

use super::{const_form, linear_connection, ModelInstance};
use crate::connection::{CheckSet, QuantumConnection};
use crate::geometry::{Chart, ChartField, Coframe, Rank};
use crate::operator_core::{fock_rep, identity};
use crate::{c, Mat, Result};

pub fn chart() -> Chart {
    Chart::new(&["r", "theta", "z"], |p| p[0] > 0.0)
}

pub fn alpha() -> ChartField {
    ChartField::new(Rank::OneForm, |p| vec![0.0, 0.5 * p[0] * p[0], -1.0])
        .with_deriv(|p| vec![vec![0.0, p[0], 0.0], vec![0.0; 3], vec![0.0; 3]])
}

/// `(e^1, e^2) = (dr, r dθ)`.
pub fn coframe() -> Result<Coframe> {
    let e2 = ChartField::new(Rank::OneForm, |p| vec![0.0, p[0], 0.0])
        .with_deriv(|_| vec![vec![0.0, 1.0, 0.0], vec![0.0; 3], vec![0.0; 3]]);
    Coframe::new(alpha(), vec![const_form(vec![1.0, 0.0, 0.0]), e2], Coframe::standard_j(1))
}

/// `s_-(θ)` and `s_+(θ)`.
pub fn s_pm(theta: f64, s1: &Mat, s2: &Mat) -> (Mat, Mat) {
    let (sn, cs) = theta.sin_cos();
    (s1 * c(-cs, 0.0) + s2 * c(sn, 0.0), s1 * c(-sn, 0.0) + s2 * c(-cs, 0.0))
}

pub fn connection(hbar: f64, fock_dim: usize, with_omega_term: bool) -> Result<QuantumConnection> {
    let f = fock_rep(fock_dim, hbar)?;
    // κ = s_- dr + s_+ r dθ, split over the constant operators s1, s2.
    let on_s1 = ChartField::new(Rank::OneForm, |p| {
        let (sn, cs) = p[1].sin_cos();
        vec![-cs, -p[0] * sn, 0.0]
    })
    .with_deriv(|p| {
        let (sn, cs) = p[1].sin_cos();
        vec![vec![0.0, -sn, 0.0], vec![sn, -p[0] * cs, 0.0], vec![0.0; 3]]
    });
    let on_s2 = ChartField::new(Rank::OneForm, |p| {
        let (sn, cs) = p[1].sin_cos();
        vec![sn, -p[0] * cs, 0.0]
    })
    .with_deriv(|p| {
        let (sn, cs) = p[1].sin_cos();
        vec![vec![0.0, -cs, 0.0], vec![cs, p[0] * sn, 0.0], vec![0.0; 3]]
    });
    let mut forms = vec![alpha(), on_s1, on_s2];
    let mut ops = vec![identity(fock_dim), f.s1.clone(), f.s2.clone()];
    if with_omega_term {
        forms.push(const_form(vec![0.0, 1.0, 0.0]));
        ops.push(&f.s1 * &f.s1 + &f.s2 * &f.s2);
    }
    Ok(linear_connection(chart(), hbar, CheckSet::Block(fock_dim - 2), forms, ops))
}

pub fn model(hbar: f64, fock_dim: usize) -> Result<ModelInstance> {
    Ok(ModelInstance {
        name: "r3",
        chart: chart(),
        alpha: alpha(),
        coframe: Some(coframe()?),
        conn: connection(hbar, fock_dim, true)?,
        family: Arc::new(move |h| connection(h, fock_dim, true)),
    })
}

/// Negative control: the grade-zero term is dropped and flatness fails.
pub fn model_without_omega_term(hbar: f64, fock_dim: usize) -> Result<ModelInstance> {
    Ok(ModelInstance {
        name: "r3-no-omega",
        conn: connection(hbar, fock_dim, false)?,
        family: Arc::new(move |h| connection(h, fock_dim, false)),
        ..model(hbar, fock_dim)?
    })
}

/// Example connection on the distribution in the frame `(dr, r dθ)`:
/// `ω^1_2 = -dθ`, `ω^2_1 = dθ`.
pub fn expected_xi_connection() -> Vec<nalgebra::DMatrix<f64>> {
    let mut w = vec![nalgebra::DMatrix::zeros(2, 2); 3];
    w[1][(0, 1)] = -1.0;
    w[1][(1, 0)] = 1.0;
    w
}

/// `r ∂_r` and the Reeb field `-∂_z`.
pub fn euler_field() -> ChartField {
    ChartField::new(Rank::Vector, |p| vec![p[0], 0.0, 0.0])
        .with_deriv(|_| vec![vec![1.0, 0.0, 0.0], vec![0.0; 3], vec![0.0; 3]])
}

pub fn reeb() -> Vec<f64> {
    vec![0.0, 0.0, -1.0]
}
