//! Worked examples: charts, contact forms, coframes and quantum connections.

pub mod ambient;
pub mod contactization;
pub mod darboux;
pub mod hamsys;
pub mod r3;
pub mod s3;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::connection::{CheckSet, QuantumConnection};
use crate::geometry::{Chart, ChartField, Coframe};
use crate::{c, Mat, Result};

pub type ConnFamily = Arc<dyn Fn(f64) -> Result<QuantumConnection> + Send + Sync>;

#[derive(Clone)]
pub struct ModelInstance {
    pub name: &'static str,
    pub chart: Chart,
    pub alpha: ChartField,
    pub coframe: Option<Coframe>,
    pub conn: QuantumConnection,
    /// Rebuilds the connection at another ħ with the same representation sizes.
    pub family: ConnFamily,
}

impl ModelInstance {
    pub fn at_hbar(&self, hbar: f64) -> Result<QuantumConnection> {
        (self.family)(hbar)
    }
}

pub const MODEL_NAMES: [&str; 6] = ["darboux", "r3", "hamsys", "s3-strict", "s3-ambient", "contactization"];

/// `Â = (1/iħ) Σ_m form_m ⊗ op_m` with analytic derivatives inherited from
/// the forms.
pub fn linear_connection(chart: Chart, hbar: f64, check: CheckSet, forms: Vec<ChartField>, ops: Vec<Mat>) -> QuantumConnection {
    let dim = ops[0].nrows();
    let k = c(0.0, -1.0 / hbar);
    let ops: Arc<Vec<Mat>> = Arc::new(ops.into_iter().map(|m| m * k).collect());
    let forms = Arc::new(forms);
    let h = chart.h;
    let (f1, o1) = (forms.clone(), ops.clone());
    let (f2, o2) = (forms, ops);
    QuantumConnection::new(chart, dim, hbar, check, move |p, i| {
        let mut out = Mat::zeros(dim, dim);
        for (f, o) in f1.iter().zip(o1.iter()) {
            let v = f.eval(p)[i];
            if v != 0.0 {
                out += o * c(v, 0.0);
            }
        }
        out
    })
    .with_deriv(move |p, i, j| {
        let mut out = Mat::zeros(dim, dim);
        for (f, o) in f2.iter().zip(o2.iter()) {
            let v = f.partials(p, h)[j][i];
            if v != 0.0 {
                out += o * c(v, 0.0);
            }
        }
        out
    })
}

/// Uniform samples in a box, rejected against the chart domain.
pub fn sample_box(chart: &Chart, lo: &[f64], hi: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| rng.gen_range(*a..*b)).collect();
        if chart.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// 1-form with constant components.
pub fn const_form(v: Vec<f64>) -> ChartField {
    ChartField::constant(crate::geometry::Rank::OneForm, v)
}

/// Unit covector `dx^i` on an `n`-dimensional chart.
pub fn coord_form(n: usize, i: usize) -> ChartField {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    const_form(v)
}
