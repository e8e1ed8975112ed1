//! Strict quantization of the standard contact 3-sphere.
//!
//! Coordinates `(θ1, θ2, ψ)` with `ψ ∈ (0, π/2)`. The connection is
//! `(λ_i L_i + λ_j L_j + λ_k L_k)/(iħ)` with Holstein–Primakoff operators
//! `L_i = 1 - N - ħ/2`, `E = √(1 - (N+ħ)/2) a`, `L_k = (E + E†)/√2`,
//! `L_j = (E - E†)/(i√2)`.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::sync::Arc;

use super::{linear_connection, ModelInstance};
use crate::connection::{CheckSet, QuantumConnection};
use crate::geometry::{Chart, ChartField, Coframe, Rank};
use crate::operator_core::{commutator, fock_rep, identity, spectral_fn, SpectralFn};
use crate::{c, max_abs, CqError, Mat, Result};

pub fn chart() -> Chart {
    Chart::new(&["theta1", "theta2", "psi"], |p| p[2] > 0.0 && p[2] < FRAC_PI_2)
}

/// `λ_i = 2(cos²ψ dθ1 + sin²ψ dθ2)`.
pub fn lambda_i() -> ChartField {
    ChartField::new(Rank::OneForm, |p| {
        let (s, co) = p[2].sin_cos();
        vec![2.0 * co * co, 2.0 * s * s, 0.0]
    })
    .with_deriv(|p| {
        let s2 = (2.0 * p[2]).sin();
        vec![vec![0.0; 3], vec![0.0; 3], vec![-2.0 * s2, 2.0 * s2, 0.0]]
    })
}

/// `λ_j = 2cos(θ1+θ2)dψ + sin2ψ sin(θ1+θ2)(dθ1 - dθ2)`.
pub fn lambda_j() -> ChartField {
    ChartField::new(Rank::OneForm, |p| {
        let (ss, cs) = (p[0] + p[1]).sin_cos();
        let s2 = (2.0 * p[2]).sin();
        vec![s2 * ss, -s2 * ss, 2.0 * cs]
    })
    .with_deriv(|p| {
        let (ss, cs) = (p[0] + p[1]).sin_cos();
        let (s2, c2) = (2.0 * p[2]).sin_cos();
        let dt = vec![s2 * cs, -s2 * cs, -2.0 * ss];
        vec![dt.clone(), dt, vec![2.0 * c2 * ss, -2.0 * c2 * ss, 0.0]]
    })
}

/// `λ_k = 2sin(θ1+θ2)dψ - sin2ψ cos(θ1+θ2)(dθ1 - dθ2)`.
pub fn lambda_k() -> ChartField {
    ChartField::new(Rank::OneForm, |p| {
        let (ss, cs) = (p[0] + p[1]).sin_cos();
        let s2 = (2.0 * p[2]).sin();
        vec![-s2 * cs, s2 * cs, 2.0 * ss]
    })
    .with_deriv(|p| {
        let (ss, cs) = (p[0] + p[1]).sin_cos();
        let (s2, c2) = (2.0 * p[2]).sin_cos();
        let dt = vec![s2 * ss, -s2 * ss, 2.0 * cs];
        vec![dt.clone(), dt, vec![-2.0 * c2 * cs, 2.0 * c2 * cs, 0.0]]
    })
}

pub fn coframe() -> Result<Coframe> {
    Coframe::new(lambda_i(), vec![lambda_j(), lambda_k()], Coframe::standard_j(1))
}

/// Normalised Reeb field `½(∂θ1 + ∂θ2)`.
pub fn reeb() -> Vec<f64> {
    vec![0.5, 0.5, 0.0]
}

/// The vector field `∂θ1 + ∂θ2`, which has `λ_i`-length 2.
pub fn doubled_reeb() -> Vec<f64> {
    vec![1.0, 1.0, 0.0]
}

/// Sign under the square root of the lowering operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqrtSign {
    /// `√(1 - (N+ħ)/2)`: the su(2) solution.
    Minus,
    /// `√(1 + (N+ħ)/2)`: violates the algebra; kept as a control.
    Plus,
}

#[derive(Debug, Clone)]
pub struct Su2Ops {
    pub li: Mat,
    pub lj: Mat,
    pub lk: Mat,
    pub e: Mat,
    pub e_dag: Mat,
}

pub fn hp_ops(hbar: f64, dim: usize, clamp: bool, sign: SqrtSign) -> Result<Su2Ops> {
    let f = fock_rep(dim, hbar)?;
    let id = identity(dim);
    let li = &id * c(1.0 - 0.5 * hbar, 0.0) - &f.number;
    let shifted = (&f.number + &id * c(hbar, 0.0)) * c(0.5, 0.0);
    let arg = match sign {
        SqrtSign::Minus => &id - shifted,
        SqrtSign::Plus => &id + shifted,
    };
    let root = spectral_fn(&arg, SpectralFn::Sqrt, clamp)?;
    let e = &root * &f.a;
    let e_dag = e.adjoint();
    let lk = (&e + &e_dag) * c(1.0 / SQRT_2, 0.0);
    let lj = (&e - &e_dag) * c(0.0, -1.0 / SQRT_2);
    Ok(Su2Ops { li, lj, lk, e, e_dag })
}

/// `max(|iħL_i + [L_j, L_k]|, cyclic)`.
pub fn su2_residual(ops: &Su2Ops, hbar: f64) -> f64 {
    let ih = c(0.0, hbar);
    let r = |a: &Mat, b: &Mat, cc: &Mat| max_abs(&(a * ih + commutator(b, cc).expect("same shape")));
    r(&ops.li, &ops.lj, &ops.lk).max(r(&ops.lj, &ops.lk, &ops.li)).max(r(&ops.lk, &ops.li, &ops.lj))
}

/// `|L_i² + L_j² + L_k² - ħ²j(j+1)|` with `j = (dim-1)/2`.
pub fn casimir_residual(ops: &Su2Ops, hbar: f64) -> f64 {
    let dim = ops.li.nrows();
    let j = (dim as f64 - 1.0) / 2.0;
    let cas = &ops.li * &ops.li + &ops.lj * &ops.lj + &ops.lk * &ops.lk;
    max_abs(&(cas - identity(dim) * c(hbar * hbar * j * (j + 1.0), 0.0)))
}

pub fn connection(hbar: f64, dim: usize, clamp: bool, sign: SqrtSign) -> Result<QuantumConnection> {
    if !clamp && sign == SqrtSign::Minus && dim as f64 > (2.0 / hbar + 1e-9).floor() {
        return Err(CqError::Domain { level: dim - 1, value: 1.0 - dim as f64 * hbar / 2.0 });
    }
    let ops = hp_ops(hbar, dim, clamp, sign)?;
    Ok(linear_connection(
        chart(),
        hbar,
        CheckSet::Full,
        vec![lambda_i(), lambda_j(), lambda_k()],
        vec![ops.li, ops.lj, ops.lk],
    ))
}

/// Representation size where the Holstein–Primakoff ladder closes: `2/ħ`
/// when that is a positive integer.
pub fn exact_dim(hbar: f64) -> Option<usize> {
    let x = 2.0 / hbar;
    let n = x.round();
    ((x - n).abs() < 1e-9 && n >= 1.0).then_some(n as usize)
}

pub fn model(hbar: f64, dim: usize, clamp: bool) -> Result<ModelInstance> {
    Ok(ModelInstance {
        name: "s3-strict",
        chart: chart(),
        alpha: lambda_i(),
        coframe: Some(coframe()?),
        conn: connection(hbar, dim, clamp, SqrtSign::Minus)?,
        family: Arc::new(move |h| connection(h, exact_dim(h).unwrap_or(dim), true, SqrtSign::Minus)),
    })
}

/// Negative control with the `+` sign under the root.
pub fn model_plus_sign(hbar: f64, dim: usize) -> Result<ModelInstance> {
    Ok(ModelInstance {
        name: "s3-strict-plus",
        conn: connection(hbar, dim, false, SqrtSign::Plus)?,
        family: Arc::new(move |h| connection(h, dim, false, SqrtSign::Plus)),
        ..model(hbar, dim, true)?
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRow {
    pub hbar: f64,
    /// Lowest level annihilated by `E†`.
    pub level: Option<usize>,
    pub dim: Option<usize>,
    pub spin: Option<f64>,
    /// The commonly quoted closure condition: `1 - ħ/2` is a non-positive integer.
    pub quoted_condition: bool,
    /// `(ħ - 2)/4`, reported when the condition above holds.
    pub quoted_spin: Option<f64>,
    /// Norm of `E†|level⟩` from the operators themselves.
    pub oracle_norm: Option<f64>,
}

impl TruncationRow {
    pub fn agrees_with_quoted(&self) -> bool {
        self.quoted_condition == self.level.is_some()
            && match (self.spin, self.quoted_spin) {
                (Some(a), Some(b)) => (a - b).abs() < 1e-12,
                (None, None) => true,
                _ => false,
            }
    }
}

/// Finds exact closure of the ladder: the lowest `n` with `1 - ħ(n+1)/2 = 0`.
pub fn truncation_scan(hbars: &[f64]) -> Result<Vec<TruncationRow>> {
    hbars
        .iter()
        .map(|&hbar| {
            if !(hbar > 0.0 && hbar <= 4.0) {
                return Err(CqError::InvalidArgument(format!("hbar {hbar} outside (0, 4]")));
            }
            let mut level = None;
            let mut n = 0usize;
            loop {
                let arg = 1.0 - hbar * (n as f64 + 1.0) / 2.0;
                if arg.abs() < 1e-12 {
                    level = Some(n);
                    break;
                }
                if arg < 0.0 {
                    break;
                }
                n += 1;
            }
            let oracle_norm = match level {
                Some(n) => {
                    let ops = hp_ops(hbar, n + 2, true, SqrtSign::Minus)?;
                    Some((0..n + 2).map(|r| ops.e_dag[(r, n)].norm()).fold(0.0, f64::max))
                }
                None => None,
            };
            let x = 1.0 - hbar / 2.0;
            let quoted_condition = x <= 1e-12 && (x - x.round()).abs() < 1e-12;
            Ok(TruncationRow {
                hbar,
                level,
                dim: level.map(|n| n + 1),
                spin: level.map(|n| n as f64 / 2.0),
                quoted_condition,
                quoted_spin: quoted_condition.then_some((hbar - 2.0) / 4.0),
                oracle_norm,
            })
        })
        .collect()
}

/// `‖dλ_i - λ_j∧λ_k‖` and cyclic permutations, maximised over samples.
pub fn coframe_structure_residual(samples: &[Vec<f64>]) -> Result<f64> {
    use crate::geometry::{exterior_derivative, max_abs as vmax, sub, wedge11};
    let ch = chart();
    let l = [lambda_i(), lambda_j(), lambda_k()];
    let mut r: f64 = 0.0;
    for p in samples {
        let v: Vec<Vec<f64>> = l.iter().map(|f| f.eval(p)).collect();
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let d = exterior_derivative(&ch, &l[k], p)?;
            r = r.max(vmax(&sub(&d, &wedge11(&v[a], &v[b]))));
        }
    }
    Ok(r)
}

/// Embedding `(θ1, θ2, ψ) ↦ (cosψ cosθ1, cosψ sinθ1, sinψ cosθ2, sinψ sinθ2)`.
pub fn embed(p: &[f64]) -> [f64; 4] {
    let (s, co) = p[2].sin_cos();
    [co * p[0].cos(), co * p[0].sin(), s * p[1].cos(), s * p[1].sin()]
}

/// Jacobian `∂(x,y,z,w)/∂(θ1,θ2,ψ)`, rows indexed by ambient coordinate.
pub fn embed_jacobian(p: &[f64]) -> [[f64; 3]; 4] {
    let (s, co) = p[2].sin_cos();
    let (s1, c1) = p[0].sin_cos();
    let (s2, c2) = p[1].sin_cos();
    [
        [-co * s1, 0.0, -s * c1],
        [co * c1, 0.0, -s * s1],
        [0.0, -s * s2, co * c2],
        [0.0, s * c2, co * s2],
    ]
}
