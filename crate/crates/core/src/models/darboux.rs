//! Flat connection on `R^{2n+1}` with `α = p_k dx^k - dt`.
//!
//! Chart order is `(x^1..x^n, p_1..p_n, t)`. Each mode carries its own
//! oscillator; `S_q = s2`, `S_p = s1` so that `[S_q, S_p] = iħ`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{coord_form, linear_connection, ModelInstance};
use crate::connection::{CheckSet, QuantumConnection};
use crate::geometry::{Chart, ChartField, Coframe, Rank};
use crate::operator_core::{fock_rep, identity, kron};
use crate::{CqError, Mat, Result};

pub fn chart(n: usize) -> Chart {
    let mut names: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    names.extend((1..=n).map(|k| format!("p{k}")));
    names.push("t".into());
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    Chart::new(&refs, |_| true)
}

pub fn alpha(n: usize) -> ChartField {
    let dim = 2 * n + 1;
    ChartField::new(Rank::OneForm, move |p| {
        let mut v = vec![0.0; dim];
        for k in 0..n {
            v[k] = p[n + k];
        }
        v[2 * n] = -1.0;
        v
    })
    .with_deriv(move |_| {
        let mut d = vec![vec![0.0; dim]; dim];
        for k in 0..n {
            d[n + k][k] = 1.0;
        }
        d
    })
}

/// `(e^{2k-1}, e^{2k}) = (dp_k, dx^k)` with the standard pairing.
pub fn coframe(n: usize) -> Result<Coframe> {
    let dim = 2 * n + 1;
    let frames = (0..n).flat_map(|k| [coord_form(dim, n + k), coord_form(dim, k)]).collect();
    Coframe::new(alpha(n), frames, Coframe::standard_j(n))
}

/// `(S_q, S_p)` for each of `n` modes on the tensor-product space.
pub fn mode_ops(n: usize, hbar: f64, fock_dim: usize) -> Result<Vec<(Mat, Mat)>> {
    let f = fock_rep(fock_dim, hbar)?;
    let id = identity(fock_dim);
    Ok((0..n)
        .map(|k| {
            let embed = |op: &Mat| {
                let mut m = identity(1);
                for j in 0..n {
                    m = kron(&m, if j == k { op } else { &id });
                }
                m
            };
            (embed(&f.s2), embed(&f.s1))
        })
        .collect())
}

/// Product indices with every mode below `fock_dim - margin`.
pub fn interior(n: usize, fock_dim: usize, margin: usize) -> Vec<usize> {
    let total = fock_dim.pow(n as u32);
    (0..total)
        .filter(|&idx| {
            let mut r = idx;
            (0..n).all(|_| {
                let d = r % fock_dim;
                r /= fock_dim;
                d + margin < fock_dim
            })
        })
        .collect()
}

pub fn connection(n: usize, hbar: f64, fock_dim: usize) -> Result<QuantumConnection> {
    if n == 0 {
        return Err(CqError::InvalidArgument("need at least one mode".into()));
    }
    let dim = 2 * n + 1;
    let ops = mode_ops(n, hbar, fock_dim)?;
    let total = fock_dim.pow(n as u32);
    let mut forms = vec![alpha(n)];
    let mut mats = vec![identity(total)];
    for (k, (sq, sp)) in ops.into_iter().enumerate() {
        forms.push(coord_form(dim, k));
        mats.push(-sp);
        forms.push(coord_form(dim, n + k));
        mats.push(sq);
    }
    let check = if n == 1 { CheckSet::Block(fock_dim - 1) } else { CheckSet::Indices(interior(n, fock_dim, 1)) };
    Ok(linear_connection(chart(n), hbar, check, forms, mats))
}

pub fn model(n: usize, hbar: f64, fock_dim: usize) -> Result<ModelInstance> {
    let conn = connection(n, hbar, fock_dim)?;
    Ok(ModelInstance {
        name: "darboux",
        chart: chart(n),
        alpha: alpha(n),
        coframe: Some(coframe(n)?),
        conn,
        family: Arc::new(move |h| connection(n, h, fock_dim)),
    })
}

/// Reeb field of the Darboux form, `-∂_t`.
pub fn reeb(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2 * n + 1];
    v[2 * n] = -1.0;
    v
}

/// The symplectic pairing in the chart: `dα = Σ dp_k ∧ dx^k`.
pub fn levi_matrix(n: usize) -> DMatrix<f64> {
    let dim = 2 * n + 1;
    let mut m = DMatrix::zeros(dim, dim);
    for k in 0..n {
        m[(n + k, k)] = 1.0;
        m[(k, n + k)] = -1.0;
    }
    m
}

