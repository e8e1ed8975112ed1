//! Time-dependent Hamiltonian systems on `(q, p, t)` with `α = p dq - H dt`.
//!
//! `iħÂ_q = p + S_p`, `iħÂ_p = -S_q`, `iħÂ_t = -H_W(q + S_q, p + S_p)` where
//! `H_W` is the Weyl-ordered quantization and `S_q = s2`, `S_p = s1`.

use std::sync::Arc;

use super::ModelInstance;
use crate::connection::{CheckSet, OpField, OpFieldDeriv, QuantumConnection};
use crate::geometry::{Chart, ChartField, Rank};
use crate::operator_core::{fock_rep, identity, weyl_quantize, weyl_table, PolynomialObservable, Substitution, MAX_WEYL_DEGREE};
use crate::{c, CqError, Mat, Result};

pub fn chart() -> Chart {
    Chart::new(&["q", "p", "t"], |_| true)
}

pub fn alpha(h: &PolynomialObservable) -> ChartField {
    let (h0, hq, hp) = (h.clone(), h.d_dq(), h.d_dp());
    ChartField::new(Rank::OneForm, move |x| vec![x[1], 0.0, -h0.evaluate(x[0], x[1]).re]).with_deriv(move |x| {
        vec![
            vec![0.0, 0.0, -hq.evaluate(x[0], x[1]).re],
            vec![1.0, 0.0, -hp.evaluate(x[0], x[1]).re],
            vec![0.0; 3],
        ]
    })
}

/// Weyl-ordered `P(q + S_q, p + S_p)` via the Taylor expansion in the
/// shifts, over a precomputed table of Weyl monomials in `(S_q, S_p)`.
#[derive(Clone)]
struct Shifted {
    table: Arc<Vec<Vec<Mat>>>,
    dim: usize,
}

impl Shifted {
    fn new(degree: u32, hbar: f64, fock_dim: usize) -> Result<Self> {
        let f = fock_rep(fock_dim, hbar)?;
        let table = weyl_table(&Substitution { q: f.s2, p: f.s1 }, degree)?;
        Ok(Self { table: Arc::new(table), dim: fock_dim })
    }

    fn eval(&self, poly: &PolynomialObservable, q: f64, p: f64) -> Mat {
        let mut out = Mat::zeros(self.dim, self.dim);
        for (&(m, n), &v) in &poly.terms {
            for a in 0..=m {
                for b in 0..=n {
                    let w = v * binom(m, a) * binom(n, b) * q.powi((m - a) as i32) * p.powi((n - b) as i32);
                    if w.norm() != 0.0 {
                        out += &self.table[a as usize][b as usize] * w;
                    }
                }
            }
        }
        out
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn check_margin(h: &PolynomialObservable) -> usize {
    h.degree() as usize + 1
}

pub fn connection(h: &PolynomialObservable, hbar: f64, fock_dim: usize) -> Result<QuantumConnection> {
    if h.degree() > MAX_WEYL_DEGREE {
        return Err(CqError::Unsupported(format!("degree {}", h.degree())));
    }
    let f = fock_rep(fock_dim, hbar)?;
    let (sq, sp, id) = (f.s2, f.s1, identity(fock_dim));
    let k = c(0.0, -1.0 / hbar);
    let margin = check_margin(h).min(fock_dim - 1);
    let w = Shifted::new(h.degree(), hbar, fock_dim)?;
    let (w1, h1, id1) = (w.clone(), h.clone(), id.clone());
    let (hq, hp) = (h.d_dq(), h.d_dp());
    Ok(QuantumConnection::new(chart(), fock_dim, hbar, CheckSet::Block(fock_dim - margin), move |x, i| {
        let m = match i {
            0 => &id1 * c(x[1], 0.0) + &sp,
            1 => -sq.clone(),
            _ => -w1.eval(&h1, x[0], x[1]),
        };
        m * k
    })
    .with_deriv(move |x, i, j| {
        let dim = id.nrows();
        let m = match (i, j) {
            (0, 1) => id.clone(),
            (2, 0) => -w.eval(&hq, x[0], x[1]),
            (2, 1) => -w.eval(&hp, x[0], x[1]),
            _ => Mat::zeros(dim, dim),
        };
        m * k
    }))
}

pub fn model(h: &PolynomialObservable, hbar: f64, fock_dim: usize) -> Result<ModelInstance> {
    let hh = h.clone();
    Ok(ModelInstance {
        name: "hamsys",
        chart: chart(),
        alpha: alpha(h),
        coframe: None,
        conn: connection(h, hbar, fock_dim)?,
        family: Arc::new(move |hb| connection(&hh, hb, fock_dim)),
    })
}

/// The conserved charge `Q̂ = i H_W(q + S_q, p + S_p)` and its analytic
/// partial derivatives.
pub fn charge(h: &PolynomialObservable, hbar: f64, fock_dim: usize) -> Result<(OpField, OpFieldDeriv)> {
    if h.degree() > MAX_WEYL_DEGREE {
        return Err(CqError::Unsupported(format!("degree {}", h.degree())));
    }
    let w = Shifted::new(h.degree(), hbar, fock_dim)?;
    let (w1, h1) = (w.clone(), h.clone());
    let (hq, hp) = (h.d_dq(), h.d_dp());
    let q: OpField = Arc::new(move |x| w1.eval(&h1, x[0], x[1]) * c(0.0, 1.0));
    let dq: OpFieldDeriv = Arc::new(move |x, i| {
        let poly = match i {
            0 => &hq,
            1 => &hp,
            _ => return Mat::zeros(w.dim, w.dim),
        };
        w.eval(poly, x[0], x[1]) * c(0.0, 1.0)
    });
    Ok((q, dq))
}

/// `H_W(S_q, S_p)` on the Fock space; the quantum Hamiltonian at the origin.
pub fn hamiltonian_at(h: &PolynomialObservable, hbar: f64, fock_dim: usize, q: f64, p: f64) -> Result<Mat> {
    let f = fock_rep(fock_dim, hbar)?;
    let (sq, sp, id) = (f.s2, f.s1, identity(fock_dim));
    weyl_quantize(h, &Substitution { q: &id * c(q, 0.0) + sq, p: &id * c(p, 0.0) + sp })
}
