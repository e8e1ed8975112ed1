//! Contactization of the symplectization of a 3-dimensional base.
//!
//! Chart `(μ, θ, z)` with `z` a base point and `A = e^{2μ}α + dθ`. Frames in
//! the order `(+, 1, 2, -)` are `E = (2e^{2μ}α, e^μ e^1, e^μ e^2, dμ)` and
//!
//! ```text
//! Ω = [ -dμ            e^μ e_b       2e^{2μ}α ]
//!     [ -e^{-μ} P^a    ω^a_b         e^μ e^a  ]
//!     [ ½e^{-2μ} Q     e^{-μ} P_b    dμ       ]
//! ```
//! with `e_b = j_bc e^c` and `P_b = j_bc P^c`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{darboux, r3, ModelInstance};
use crate::connection::{CheckSet, QuantumConnection};
use crate::contractor;
use crate::geometry::{
    self, add, exterior_derivative, fd_jacobian, levi_connection_solve, lstsq, scale, sub, wedge11, Chart,
    ChartField, Coframe, Rank,
};
use crate::operator_core::{fock_rep, identity, kron};
use crate::{c, Mat, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Darboux,
    R3,
}

impl Base {
    pub fn chart(&self) -> Chart {
        match self {
            Base::Darboux => darboux::chart(1),
            Base::R3 => r3::chart(),
        }
    }

    pub fn coframe(&self) -> Result<Coframe> {
        match self {
            Base::Darboux => darboux::coframe(1),
            Base::R3 => r3::coframe(),
        }
    }
}

pub fn chart(base: Base) -> Chart {
    let bc = base.chart();
    let mut names = vec!["mu".to_string(), "theta".to_string()];
    names.extend(bc.names.iter().cloned());
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    Chart::new(&refs, move |p| bc.contains(&p[2..]))
}

fn lift(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0, 0.0];
    out.extend_from_slice(v);
    out
}

/// Base data at a point: `α`, `e^a`, `ω^a_b`, `P^a`, `Q` as base 1-forms.
#[derive(Debug, Clone)]
pub struct BaseData {
    pub alpha: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    pub omega: Vec<Vec<Vec<f64>>>,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub j: DMatrix<f64>,
}

/// Solves the first-order structure equations on the base, then the
/// algebraic system `d^ω e^a = -2α∧P^a`, `e_a∧P^a = α∧Q`.
pub fn base_data(base: Base, z: &[f64]) -> Result<BaseData> {
    let bc = base.chart();
    let cf = base.coframe()?;
    let sol = levi_connection_solve(&bc, &cf, z)?;
    let n = bc.dim;
    let m = cf.frames.len();
    let alpha = cf.alpha.eval(z);
    let e: Vec<Vec<f64>> = cf.frames.iter().map(|f| f.eval(z)).collect();
    let omega: Vec<Vec<Vec<f64>>> =
        (0..m).map(|a| (0..m).map(|b| (0..n).map(|i| sol.mixed(i, &cf.j)[(a, b)]).collect()).collect()).collect();
    // d^ω e^a = de^a + ω^a_b∧e^b; solve -2α∧P^a = d^ω e^a for each a.
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    let wedge_rows = |left: &[f64]| -> DMatrix<f64> {
        DMatrix::from_fn(pairs.len(), n, |k, col| {
            let mut unit = vec![0.0; n];
            unit[col] = 1.0;
            let w = wedge11(left, &unit);
            w[pairs[k].0 * n + pairs[k].1]
        })
    };
    let mut p_forms = Vec::with_capacity(m);
    for a in 0..m {
        let mut de = exterior_derivative(&bc, &cf.frames[a], z)?;
        for b in 0..m {
            de = add(&de, &wedge11(&omega[a][b], &e[b]));
        }
        let rhs = DVector::from_iterator(pairs.len(), pairs.iter().map(|&(x, y)| de[x * n + y]));
        let (x, _, _) = lstsq(&(wedge_rows(&alpha) * -2.0), &rhs);
        p_forms.push(x.iter().cloned().collect::<Vec<f64>>());
    }
    let mut lhs = vec![0.0; n * n];
    for a in 0..m {
        for b in 0..m {
            lhs = add(&lhs, &scale(&wedge11(&e[b], &p_forms[a]), cf.j[(a, b)]));
        }
    }
    let rhs = DVector::from_iterator(pairs.len(), pairs.iter().map(|&(x, y)| lhs[x * n + y]));
    let (qx, _, _) = lstsq(&wedge_rows(&alpha), &rhs);
    Ok(BaseData { alpha, e, omega, p: p_forms, q: qx.iter().cloned().collect(), j: cf.j.clone() })
}

/// Residuals of the two algebraic constraints for the solved data.
pub fn constraint_residual(base: Base, z: &[f64]) -> Result<f64> {
    let bc = base.chart();
    let cf = base.coframe()?;
    let d = base_data(base, z)?;
    let m = d.e.len();
    let mut r: f64 = 0.0;
    for a in 0..m {
        let mut tot = exterior_derivative(&bc, &cf.frames[a], z)?;
        for b in 0..m {
            tot = add(&tot, &wedge11(&d.omega[a][b], &d.e[b]));
        }
        tot = add(&tot, &scale(&wedge11(&d.alpha, &d.p[a]), 2.0));
        r = r.max(geometry::max_abs(&tot));
    }
    let mut lhs = vec![0.0; bc.dim * bc.dim];
    for a in 0..m {
        for b in 0..m {
            lhs = add(&lhs, &scale(&wedge11(&d.e[b], &d.p[a]), d.j[(a, b)]));
        }
    }
    Ok(r.max(geometry::max_abs(&sub(&lhs, &wedge11(&d.alpha, &d.q)))))
}

pub fn contact_form(base: Base) -> ChartField {
    let cf = base.coframe().expect("shipped base");
    ChartField::new(Rank::OneForm, move |p| {
        let mut v = lift(&scale(&cf.alpha.eval(&p[2..]), (2.0 * p[0]).exp()));
        v[1] = 1.0;
        v
    })
}

pub fn mu_form(base: Base) -> ChartField {
    super::coord_form(base.chart().dim + 2, 0)
}

/// `E^A` in the order `(+, 1, 2, -)`.
pub fn frames(base: Base) -> Vec<ChartField> {
    let cf = base.coframe().expect("shipped base");
    let mut out = Vec::new();
    let a = cf.alpha.clone();
    out.push(ChartField::new(Rank::OneForm, move |p| lift(&scale(&a.eval(&p[2..]), 2.0 * (2.0 * p[0]).exp()))));
    for e in cf.frames.iter().cloned() {
        out.push(ChartField::new(Rank::OneForm, move |p| lift(&scale(&e.eval(&p[2..]), p[0].exp()))));
    }
    out.push(mu_form(base));
    out
}

pub fn pairing() -> DMatrix<f64> {
    super::ambient::pairing()
}

pub fn coframe(base: Base) -> Result<Coframe> {
    Coframe::new(contact_form(base), frames(base), pairing())
}

/// `Ω^A_B` at a chart point as 1-form components.
pub fn omega(base: Base, p: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let d = base_data(base, &p[2..])?;
    let n5 = p.len();
    let (em, e2m) = (p[0].exp(), (2.0 * p[0]).exp());
    let mut dmu = vec![0.0; n5];
    dmu[0] = 1.0;
    let zero = vec![0.0; n5];
    let m = d.e.len();
    let low = |v: &[Vec<f64>], b: usize| -> Vec<f64> {
        (0..v[0].len()).map(|i| (0..m).map(|cc| d.j[(b, cc)] * v[cc][i]).sum()).collect()
    };
    let mut om = vec![vec![zero.clone(); m + 2]; m + 2];
    om[0][0] = scale(&dmu, -1.0);
    for b in 0..m {
        om[0][b + 1] = lift(&scale(&low(&d.e, b), em));
    }
    om[0][m + 1] = lift(&scale(&d.alpha, 2.0 * e2m));
    for a in 0..m {
        om[a + 1][0] = lift(&scale(&d.p[a], -1.0 / em));
        for b in 0..m {
            om[a + 1][b + 1] = lift(&d.omega[a][b]);
        }
        om[a + 1][m + 1] = lift(&scale(&d.e[a], em));
    }
    om[m + 1][0] = lift(&scale(&d.q, 0.5 / e2m));
    for b in 0..m {
        om[m + 1][b + 1] = lift(&scale(&low(&d.p, b), 1.0 / em));
    }
    om[m + 1][m + 1] = dmu;
    Ok(om)
}

#[derive(Debug, Clone, Default)]
pub struct StructureChecks {
    /// `|d^Ω X^A - E^A|` with `X^A = (0, 0, 0, 1)`.
    pub dx_minus_e: f64,
    /// `|F^A_B X^B|`.
    pub fx: f64,
    /// `|dE^A + Ω^A_B∧E^B|`.
    pub de: f64,
    /// `|ℒ_X E^A - diag(2,1,1,0) E^A|` with `X = ∂_μ + 2θ∂_θ`.
    pub lie_x: f64,
    /// `|dA - ½J_AB E^A∧E^B|`.
    pub levi: f64,
}

pub fn homothety(base: Base) -> ChartField {
    let n = base.chart().dim + 2;
    ChartField::new(Rank::Vector, move |p| {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        v[1] = 2.0 * p[1];
        v
    })
    .with_deriv(move |_| {
        let mut d = vec![vec![0.0; n]; n];
        d[1][1] = 2.0;
        d
    })
}

pub fn structure_checks(base: Base, p: &[f64]) -> Result<StructureChecks> {
    let ch = chart(base);
    let n = ch.dim;
    let es = frames(base);
    let ev: Vec<Vec<f64>> = es.iter().map(|e| e.eval(p)).collect();
    let om = omega(base, p)?;
    let k = es.len();
    let mut out = StructureChecks::default();
    for a in 0..k {
        out.dx_minus_e = out.dx_minus_e.max(geometry::max_abs(&sub(&om[a][k - 1], &ev[a])));
        let mut de = exterior_derivative(&ch, &es[a], p)?;
        for b in 0..k {
            de = add(&de, &wedge11(&om[a][b], &ev[b]));
        }
        out.de = out.de.max(geometry::max_abs(&de));
        let lie = geometry::lie_derivative(&ch, &homothety(base), &es[a], p)?;
        let w = [2.0, 1.0, 1.0, 0.0][a];
        out.lie_x = out.lie_x.max(geometry::max_abs(&sub(&lie, &scale(&ev[a], w))));
    }
    // F^A_- = dΩ^A_- + Ω^A_C∧Ω^C_-
    let col = |q: &[f64]| -> Vec<f64> {
        omega(base, q).map(|o| (0..k).flat_map(|a| o[a][k - 1].clone()).collect()).unwrap_or_default()
    };
    let jac = fd_jacobian(&col, p, ch.h);
    for a in 0..k {
        let mut f = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                f[i * n + j] = jac[i][a * n + j] - jac[j][a * n + i];
            }
        }
        for cc in 0..k {
            f = add(&f, &wedge11(&om[a][cc], &om[cc][k - 1]));
        }
        out.fx = out.fx.max(geometry::max_abs(&f));
    }
    out.levi = geometry::structure_residual(&ch, &coframe(base)?, &[p.to_vec()])?;
    Ok(out)
}

/// `|dI^A + Ω^A_B I^B|` for `I^A = (e^μ, 0, 0, 0)`.
pub fn parallel_scale_residual(base: Base, p: &[f64]) -> Result<f64> {
    let om = omega(base, p)?;
    let k = om.len();
    let mut r: f64 = 0.0;
    for a in 0..k {
        let mut tot = scale(&om[a][0], p[0].exp());
        if a == 0 {
            tot[0] += p[0].exp();
        }
        r = r.max(geometry::max_abs(&tot));
    }
    Ok(r)
}

/// Ambient `D f = df - (A - ½X^♭) ℒ_R f` for `f = e^{wμ}F(z)` against the
/// intrinsic triple `(wF, d̄F, ½ℒ_ρF)` reassembled with `(e^{-μ}Y, ·, e^{-2μ}X^♭)`.
pub fn ambient_d_residual(base: Base, w: f64, f: &ChartField, p: &[f64]) -> Result<f64> {
    let ch = chart(base);
    let bc = base.chart();
    let cf = base.coframe()?;
    let (ff, wv) = (f.clone(), w);
    let lifted = ChartField::scalar(move |q| (wv * q[0]).exp() * ff.eval(&q[2..])[0]);
    let df = exterior_derivative(&ch, &lifted, p)?;
    // ℒ_R f with R = ∂_θ
    let lr = df[1];
    let a = contact_form(base).eval(p);
    let xflat = lift(&scale(&cf.alpha.eval(&p[2..]), 2.0 * (2.0 * p[0]).exp()));
    let ambient = sub(&df, &scale(&sub(&a, &scale(&xflat, 0.5)), lr));
    let z = &p[2..];
    let triple = contractor::d_operator(&bc, &cf.alpha, f, w, z)?;
    let em = p[0].exp();
    let mut y = vec![0.0; ch.dim];
    y[0] = em;
    let intrinsic = scale(
        &add(
            &add(&scale(&y, triple.bottom / em), &lift(&triple.middle_form)),
            &scale(&xflat, triple.top / (em * em)),
        ),
        (w * p[0]).exp(),
    );
    Ok(geometry::max_abs(&sub(&ambient, &intrinsic)))
}

/// Two-mode operators `S_A` in the order `(+, 1, 2, -)` with
/// `[S_A, S_B] = -iħ J_AB`.
pub fn heisenberg_ops(hbar: f64, fock: usize) -> Result<Vec<Mat>> {
    let f = fock_rep(fock, hbar)?;
    let id = identity(fock);
    let s1 = kron(&f.s1, &id);
    let s2 = kron(&f.s2, &id);
    let sp = kron(&id, &f.s2);
    let sm = kron(&id, &f.s1);
    Ok(vec![sp, s1, s2, sm])
}

pub fn interior(fock: usize, margin: usize) -> Vec<usize> {
    darboux::interior(2, fock, margin)
}

/// `Â = (A + E^A S_A + ½Ω^{AB} S_A S_B)/(iħ)`, `Ω^{AB} = Ω^A_C J_CB`.
pub fn connection(base: Base, hbar: f64, fock: usize) -> Result<QuantumConnection> {
    build_connection(base, hbar, fock, true)
}

/// The same connection without the quadratic `Ω^{AB}` term; not flat.
pub fn connection_without_omega_term(base: Base, hbar: f64, fock: usize) -> Result<QuantumConnection> {
    build_connection(base, hbar, fock, false)
}

fn build_connection(base: Base, hbar: f64, fock: usize, with_omega: bool) -> Result<QuantumConnection> {
    let s = heisenberg_ops(hbar, fock)?;
    let k = s.len();
    let dim = fock * fock;
    let prods: Arc<Vec<Vec<Mat>>> = Arc::new((0..k).map(|a| (0..k).map(|b| &s[a] * &s[b]).collect()).collect());
    let s = Arc::new(s);
    let j = pairing();
    let (a_form, es) = (contact_form(base), frames(base));
    let pre = c(0.0, -1.0 / hbar);
    Ok(QuantumConnection::new(chart(base), dim, hbar, CheckSet::Indices(interior(fock, 3)), move |p, i| {
        let om = match omega(base, p) {
            Ok(o) => o,
            Err(_) => return Mat::from_element(dim, dim, c(f64::NAN, 0.0)),
        };
        let mut m = identity(dim) * c(a_form.eval(p)[i], 0.0);
        for (a, e) in es.iter().enumerate() {
            m += &s[a] * c(e.eval(p)[i], 0.0);
        }
        let mixed = DMatrix::from_fn(k, k, |a, b| om[a][b][i]);
        let up = mixed * &j;
        for a in 0..k {
            for b in 0..k {
                if with_omega && up[(a, b)] != 0.0 {
                    m += &prods[a][b] * c(0.5 * up[(a, b)], 0.0);
                }
            }
        }
        m * pre
    }))
}

/// `Ω^{AB}` must be symmetric for the quadratic term to be well defined.
pub fn omega_up_asymmetry(base: Base, p: &[f64]) -> Result<f64> {
    let om = omega(base, p)?;
    let k = om.len();
    let j = pairing();
    let mut r: f64 = 0.0;
    for i in 0..p.len() {
        let up = DMatrix::from_fn(k, k, |a, b| om[a][b][i]) * &j;
        r = r.max((&up - up.transpose()).amax());
    }
    Ok(r)
}

pub fn model(base: Base, hbar: f64, fock: usize) -> Result<ModelInstance> {
    Ok(ModelInstance {
        name: "contactization",
        chart: chart(base),
        alpha: contact_form(base),
        coframe: Some(coframe(base)?),
        conn: connection(base, hbar, fock)?,
        family: Arc::new(move |h| connection(base, h, fock)),
    })
}

/// Coordinate fields along the base; these commute with the homothety.
pub fn homogeneous_directions(base: Base) -> Vec<(String, ChartField)> {
    let ch = chart(base);
    (2..ch.dim)
        .map(|i| {
            let mut v = vec![0.0; ch.dim];
            v[i] = 1.0;
            (format!("d/d{}", ch.names[i]), ChartField::constant(Rank::Vector, v))
        })
        .collect()
}

