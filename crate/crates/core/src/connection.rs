//! Operator-valued connection forms `d + Â`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::geometry::{pair, Chart, ChartField, Coframe};
use crate::operator_core::{commutator, grade_components, grading_derivative, HBarFamily, GRADE_FIT_FACTORS};
use crate::{block_max_abs, c, index_max_abs, max_abs, CVec, CqError, Mat, Result};

pub type CoeffFn = Arc<dyn Fn(&[f64], usize) -> Mat + Send + Sync>;
pub type CoeffDerivFn = Arc<dyn Fn(&[f64], usize, usize) -> Mat + Send + Sync>;

/// Where operator identities are asserted. Truncated representations corrupt
/// a corner of every product, so checks look at a block, an index set, or the
/// image of an orthonormal set of states.
#[derive(Debug, Clone)]
pub enum CheckSet {
    Full,
    Block(usize),
    Indices(Vec<usize>),
    Subspace(Mat),
}

impl CheckSet {
    pub fn norm(&self, m: &Mat) -> f64 {
        match self {
            CheckSet::Full => max_abs(m),
            CheckSet::Block(k) => block_max_abs(m, *k),
            CheckSet::Indices(idx) => index_max_abs(m, idx),
            CheckSet::Subspace(q) => max_abs(&(m * q)),
        }
    }
}

#[derive(Clone)]
pub struct QuantumConnection {
    pub chart: Chart,
    pub dim: usize,
    pub hbar: f64,
    pub check: CheckSet,
    coeff: CoeffFn,
    deriv: Option<CoeffDerivFn>,
}

impl std::fmt::Debug for QuantumConnection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuantumConnection")
            .field("chart", &self.chart)
            .field("dim", &self.dim)
            .field("hbar", &self.hbar)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivMethod {
    Analytic,
    FiniteDifference,
}

impl QuantumConnection {
    pub fn new(
        chart: Chart,
        dim: usize,
        hbar: f64,
        check: CheckSet,
        coeff: impl Fn(&[f64], usize) -> Mat + Send + Sync + 'static,
    ) -> Self {
        Self { chart, dim, hbar, check, coeff: Arc::new(coeff), deriv: None }
    }

    pub fn with_deriv(mut self, d: impl Fn(&[f64], usize, usize) -> Mat + Send + Sync + 'static) -> Self {
        self.deriv = Some(Arc::new(d));
        self
    }

    pub fn has_deriv(&self) -> bool {
        self.deriv.is_some()
    }

    /// The zero connection on a chart.
    pub fn trivial(chart: Chart, dim: usize, hbar: f64) -> Self {
        let d = dim;
        Self::new(chart, dim, hbar, CheckSet::Full, move |_, _| Mat::zeros(d, d))
            .with_deriv(move |_, _, _| Mat::zeros(d, d))
    }

    pub fn coeff(&self, p: &[f64], i: usize) -> Mat {
        (self.coeff)(p, i)
    }

    /// `Â(v) = Σ v^i Â_i`.
    pub fn along(&self, p: &[f64], v: &[f64]) -> Mat {
        let mut out = Mat::zeros(self.dim, self.dim);
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                out += self.coeff(p, i) * c(vi, 0.0);
            }
        }
        out
    }

    /// `∂_j Â_i`.
    pub fn partial(&self, p: &[f64], i: usize, j: usize, method: DerivMethod) -> Result<Mat> {
        match (&self.deriv, method) {
            (Some(d), DerivMethod::Analytic) => Ok(d(p, i, j)),
            (None, DerivMethod::Analytic) => Err(CqError::MissingDerivative("connection coefficients".into())),
            (_, DerivMethod::FiniteDifference) => {
                let h = self.chart.h;
                let mut up = p.to_vec();
                let mut dn = p.to_vec();
                up[j] += h;
                dn[j] -= h;
                self.chart.check(&up)?;
                self.chart.check(&dn)?;
                Ok((self.coeff(&up, i) - self.coeff(&dn, i)) * c(0.5 / h, 0.0))
            }
        }
    }

    pub fn best_method(&self) -> DerivMethod {
        if self.deriv.is_some() {
            DerivMethod::Analytic
        } else {
            DerivMethod::FiniteDifference
        }
    }

    /// Same coefficients with the analytic derivatives dropped.
    pub fn without_deriv(&self) -> Self {
        Self { deriv: None, ..self.clone() }
    }
}

/// `F_ij = ∂_iÂ_j - ∂_jÂ_i + [Â_i, Â_j]`.
pub fn curvature(conn: &QuantumConnection, p: &[f64], i: usize, j: usize, method: DerivMethod) -> Result<Mat> {
    if i == j {
        return Err(CqError::InvalidArgument("curvature needs distinct directions".into()));
    }
    conn.chart.check(p)?;
    let (ai, aj) = (conn.coeff(p, i), conn.coeff(p, j));
    Ok(conn.partial(p, j, i, method)? - conn.partial(p, i, j, method)? + commutator(&ai, &aj)?)
}

#[derive(Debug, Clone)]
pub struct CurvatureReport {
    /// `(i, j, max residual over samples)` for `i < j`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub max: f64,
    pub method: DerivMethod,
}

pub fn flatness_residual(conn: &QuantumConnection, samples: &[Vec<f64>], method: DerivMethod) -> Result<CurvatureReport> {
    let n = conn.chart.dim;
    let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let per_sample: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|p| {
            idx.iter()
                .map(|&(i, j)| curvature(conn, p, i, j, method).map(|f| conn.check.norm(&f)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize, f64)> = idx
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| (i, j, per_sample.iter().map(|v| v[k]).fold(0.0, f64::max)))
        .collect();
    let max = pairs.iter().map(|t| t.2).fold(0.0, f64::max);
    Ok(CurvatureReport { pairs, max, method })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarPart {
    /// Normalised trace over the check set.
    Trace,
    /// Expectation in the first basis state.
    Vacuum,
}

#[derive(Debug, Clone)]
pub struct ClassicalLimit {
    pub limit: Vec<f64>,
    pub alpha: Vec<f64>,
    pub error: f64,
    pub fit_residual: f64,
}

fn scalar_part(m: &Mat, mode: ScalarPart, check: &CheckSet) -> f64 {
    match mode {
        ScalarPart::Vacuum => m[(0, 0)].re,
        ScalarPart::Trace => {
            let idx: Vec<usize> = match check {
                CheckSet::Block(k) => (0..*k).collect(),
                CheckSet::Indices(v) => v.clone(),
                _ => (0..m.nrows()).collect(),
            };
            idx.iter().map(|&i| m[(i, i)].re).sum::<f64>() / idx.len() as f64
        }
    }
}

/// Fits `iħ·scalar(Â_i)` against `{1, √ħ, ħ}` and compares the constant term
/// with `α_i`.
pub fn classical_limit_check(
    family: &dyn Fn(f64) -> Result<QuantumConnection>,
    alpha: &ChartField,
    p: &[f64],
    hbars: &[f64],
    mode: ScalarPart,
) -> Result<ClassicalLimit> {
    if hbars.len() < 3 || hbars.iter().any(|&h| !(h > 0.0 && h <= 0.5)) {
        return Err(CqError::InvalidArgument("need at least three hbar values in (0, 0.5]".into()));
    }
    let conns: Vec<QuantumConnection> = hbars.iter().map(|&h| family(h)).collect::<Result<_>>()?;
    let n = conns[0].chart.dim;
    let v = DMatrix::from_fn(hbars.len(), 3, |r, k| hbars[r].powf(k as f64 / 2.0));
    let a = alpha.eval(p);
    let mut limit = Vec::with_capacity(n);
    let mut fit_residual: f64 = 0.0;
    for i in 0..n {
        let y = DVector::from_iterator(
            hbars.len(),
            conns.iter().map(|cn| {
                let m = cn.coeff(p, i) * c(0.0, cn.hbar);
                scalar_part(&m, mode, &cn.check)
            }),
        );
        let (x, r, _) = crate::geometry::lstsq(&v, &y);
        fit_residual = fit_residual.max(r);
        limit.push(x[0]);
    }
    let error = limit.iter().zip(&a).map(|(l, a)| (l - a).abs()).fold(0.0, f64::max);
    Ok(ClassicalLimit { limit, alpha: a, error, fit_residual })
}

/// Laurent coefficients in `√ħ`, powers `-2..=2`, of an ħ-dependent operator.
pub fn grade_parts_of(f: &dyn Fn(f64) -> Result<Mat>, hbar0: f64) -> Result<Vec<Mat>> {
    // HBarFamily needs 'static; evaluate eagerly on the fit nodes instead.
    let factors = GRADE_FIT_FACTORS;
    let vals: Vec<Mat> = factors.iter().map(|k| f(k * hbar0)).collect::<Result<_>>()?;
    let table = Arc::new(factors.iter().map(|k| k * hbar0).zip(vals).collect::<Vec<_>>());
    let hf = HBarFamily::new(0.0, f64::INFINITY, move |h| {
        table
            .iter()
            .find(|(x, _)| (x - h).abs() < 1e-14 * h.abs().max(1.0))
            .map(|(_, m)| m.clone())
            .ok_or_else(|| CqError::InvalidArgument("hbar not on fit grid".into()))
    });
    grade_components(&hf, hbar0, &[-2, -1, 0, 1, 2])
}

/// Laurent coefficients of `Â(v)` at `p`.
pub fn grade_parts(
    family: &(dyn Fn(f64) -> Result<QuantumConnection> + Sync),
    p: &[f64],
    v: &[f64],
    hbar0: f64,
) -> Result<Vec<Mat>> {
    grade_parts_of(&|h| family(h).map(|cn| cn.along(p, v)), hbar0)
}

/// Connection on the distribution induced by commuting the grade-zero part of
/// the quantum connection with the calibration `s`. Returns, per chart
/// direction `i`, the matrix `ω^a_b(∂_i)` with `∇_i E_b = ω^a_b(∂_i) E_a`
/// for the frame `E_a` dual to the coframe.
pub fn induced_xi_connection(
    family: &(dyn Fn(f64) -> Result<QuantumConnection> + Sync),
    cf: &Coframe,
    p: &[f64],
    hbar0: f64,
) -> Result<Vec<DMatrix<f64>>> {
    let conn = family(hbar0)?;
    let n = conn.chart.dim;
    let m = cf.frames.len();
    let dual = cf.dual(p)?;
    let h = conn.chart.h;
    let calib = |q: &[f64], a: usize| -> Result<Mat> {
        let d = cf.dual(q)?;
        let e: Vec<f64> = (0..n).map(|k| d[(k, a + 1)]).collect();
        Ok(grade_parts(family, q, &e, hbar0)?[1].clone())
    };
    let s_basis: Vec<Mat> = (0..m).map(|a| calib(p, a)).collect::<Result<_>>()?;
    // the calibration must be the grade -1 part, spanning an m-dimensional space
    let idx = interior_indices(&conn.check, conn.dim);
    let flat = |mat: &Mat| -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * idx.len() * idx.len());
        for &r in &idx {
            for &cc in &idx {
                v.push(mat[(r, cc)].re);
                v.push(mat[(r, cc)].im);
            }
        }
        v
    };
    let cols: Vec<Vec<f64>> = s_basis.iter().map(|s| flat(s)).collect();
    let design = DMatrix::from_fn(cols[0].len(), m, |r, k| cols[k][r]);
    if design.clone().svd(false, false).singular_values.min() < 1e-8 {
        return Err(CqError::Precondition("grade -1 part is not a calibration of the coframe".into()));
    }
    let mut out = vec![DMatrix::zeros(m, m); n];
    let frame = |q: &[f64], b: usize| -> Result<Vec<f64>> {
        let d = cf.dual(q)?;
        Ok((0..n).map(|k| d[(k, b + 1)]).collect())
    };
    for i in 0..n {
        let ei: Vec<f64> = (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect();
        let c0 = grade_parts(family, p, &ei, hbar0)?[2].clone();
        for b in 0..m {
            let mut up = p.to_vec();
            let mut dn = p.to_vec();
            up[i] += h;
            dn[i] -= h;
            let eb = frame(p, b)?;
            let deb: Vec<f64> = frame(&up, b)?.iter().zip(frame(&dn, b)?).map(|(x, y)| (x - y) / (2.0 * h)).collect();
            // ∂_i of Â(E_b), with analytic coefficient derivatives when the model has them
            let ds = grade_parts_of(
                &|hb| {
                    let cn = family(hb)?;
                    let method = cn.best_method();
                    let mut acc = cn.along(p, &deb);
                    for (k, ek) in eb.iter().enumerate() {
                        if *ek != 0.0 {
                            acc += cn.partial(p, k, i, method)? * c(*ek, 0.0);
                        }
                    }
                    Ok(acc)
                },
                hbar0,
            )?[1]
                .clone();
            let rhs = ds + commutator(&c0, &s_basis[b])?;
            let y = DVector::from_vec(flat(&rhs));
            let (x, _, _) = crate::geometry::lstsq(&design, &y);
            for a in 0..m {
                out[i][(a, b)] = x[a];
            }
        }
    }
    let _ = dual;
    Ok(out)
}

fn interior_indices(check: &CheckSet, dim: usize) -> Vec<usize> {
    match check {
        CheckSet::Block(k) => (0..*k).collect(),
        CheckSet::Indices(v) => v.clone(),
        _ => (0..dim).collect(),
    }
}

#[derive(Clone)]
pub struct PathSpec {
    pub curve: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

pub const DEFAULT_STEPS_PER_UNIT: usize = 4096;

impl PathSpec {
    pub fn new(curve: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static, t0: f64, t1: f64) -> Self {
        let steps = (((t1 - t0).abs() * DEFAULT_STEPS_PER_UNIT as f64).ceil() as usize).max(16);
        Self { curve: Arc::new(curve), t0, t1, steps }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps.max(16);
        self
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        (self.curve)(t)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let h = 1e-6 * (1.0 + t.abs());
        let (a, b) = (self.point(t + h), self.point(t - h));
        a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect()
    }
}

/// Straight segment between two chart points.
pub fn segment(a: Vec<f64>, b: Vec<f64>) -> PathSpec {
    PathSpec::new(move |t| a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect(), 0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct Transport {
    pub psi: CVec,
    pub drift: f64,
}

/// RK4 for `dψ/dt = -Â(γ'(t)) ψ`.
pub fn parallel_transport(conn: &QuantumConnection, path: &PathSpec, psi0: &CVec) -> Result<Transport> {
    let n0 = psi0.norm();
    if !(n0 > 0.0) {
        return Err(CqError::InvalidArgument("initial state has zero norm".into()));
    }
    let gen = |t: f64| -> Result<Mat> {
        let p = path.point(t);
        conn.chart.check(&p)?;
        Ok(-conn.along(&p, &path.velocity(t)))
    };
    let dt = (path.t1 - path.t0) / path.steps as f64;
    let mut psi = psi0.clone();
    let mut a_next = gen(path.t0)?;
    for k in 0..path.steps {
        let t = path.t0 + k as f64 * dt;
        let a0 = a_next;
        let am = gen(t + 0.5 * dt)?;
        a_next = gen(t + dt)?;
        let k1 = &a0 * &psi;
        let k2 = &am * (&psi + &k1 * c(0.5 * dt, 0.0));
        let k3 = &am * (&psi + &k2 * c(0.5 * dt, 0.0));
        let k4 = &a_next * (&psi + &k3 * c(dt, 0.0));
        psi += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
    }
    let drift = ((psi.norm() - n0) / n0).abs();
    if drift > 1e-3 {
        return Err(CqError::NonUnitary(drift));
    }
    Ok(Transport { psi, drift })
}

/// `|⟨ψ_f| P exp(-∫Â) |ψ_i⟩|²`.
pub fn transition_probability(conn: &QuantumConnection, path: &PathSpec, psi_i: &CVec, psi_f: &CVec) -> Result<f64> {
    let t = parallel_transport(conn, path, psi_i)?;
    Ok(psi_f.dotc(&t.psi).norm_sqr())
}

pub type OpField = Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>;
pub type OpFieldDeriv = Arc<dyn Fn(&[f64], usize) -> Mat + Send + Sync>;

/// `max |∂_iQ̂ + [Â_i, Q̂]|` over samples and directions.
pub fn charge_commutation_check(
    conn: &QuantumConnection,
    q: &OpField,
    dq: &OpFieldDeriv,
    samples: &[Vec<f64>],
) -> Result<f64> {
    let n = conn.chart.dim;
    let r: Vec<f64> = samples
        .par_iter()
        .map(|p| {
            let qp = q(p);
            (0..n)
                .map(|i| Ok(conn.check.norm(&(dq(p, i) + commutator(&conn.coeff(p, i), &qp)?))))
                .collect::<Result<Vec<f64>>>()
                .map(|v| v.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(r.into_iter().fold(0.0, f64::max))
}

const K_STEP: f64 = 1e-2;

/// `[∇⁰_X + gr, ∇_U]` for a homogeneous `U` at a point of the cone `A(X) = 0`,
/// measured on the connection's check set.
pub fn equivariance_residual(
    family: &(dyn Fn(f64) -> Result<QuantumConnection> + Sync),
    x: &ChartField,
    u: &ChartField,
    contact: &ChartField,
    p: &[f64],
    hbar0: f64,
) -> Result<f64> {
    let conn = family(hbar0)?;
    let chart = conn.chart.clone();
    chart.check(p)?;
    let xv = x.eval(p);
    let lie = crate::geometry::bracket(&chart, x, u, p);
    if crate::geometry::max_abs(&lie) > 1e-6 {
        return Err(CqError::Precondition(format!("U not homogeneous: |L_X U| = {:.2e}", crate::geometry::max_abs(&lie))));
    }
    let ax = pair(&contact.eval(p), &xv);
    if ax.abs() > 1e-10 {
        return Err(CqError::Precondition(format!("point off the cone: A(X) = {ax:.2e}")));
    }
    let nodes: Vec<(f64, QuantumConnection)> =
        GRADE_FIT_FACTORS.iter().map(|f| family(f * hbar0).map(|cn| (f * hbar0, cn))).collect::<Result<_>>()?;
    let k_at = |q: &[f64]| -> Result<Mat> {
        let xq = x.eval(q);
        let at = |hb: f64| -> Result<Mat> {
            let (_, cn) = nodes.iter().find(|(n, _)| *n == hb).ok_or_else(|| CqError::InvalidArgument("hbar not on fit grid".into()))?;
            Ok(cn.along(q, &xq))
        };
        Ok(grade_parts_of(&at, hbar0)?[2].clone())
    };
    let a_u = |cn: &QuantumConnection, q: &[f64]| cn.along(q, &u.eval(q));
    let h = chart.h;
    let shift = |v: &[f64], s: f64| -> Vec<f64> { p.iter().zip(v).map(|(a, b)| a + s * b).collect() };
    let uv = u.eval(p);
    let x_of_au = (a_u(&conn, &shift(&xv, h)) - a_u(&conn, &shift(&xv, -h))) * c(0.5 / h, 0.0);
    // The fitted K carries round-off amplified by the Laurent fit, so its
    // U-derivative uses a wide fourth-order stencil instead of the chart step.
    let hk = K_STEP;
    let u_of_k = (k_at(&shift(&uv, -2.0 * hk))? - k_at(&shift(&uv, -hk))? * c(8.0, 0.0) + k_at(&shift(&uv, hk))? * c(8.0, 0.0)
        - k_at(&shift(&uv, 2.0 * hk))?)
        * c(1.0 / (12.0 * hk), 0.0);
    let k = k_at(p)?;
    let au = a_u(&conn, p);
    let (pp, uu) = (p.to_vec(), uv.clone());
    let fam_cell: Vec<(f64, Mat)> = [1.0 + 1e-4, 1.0 - 1e-4]
        .iter()
        .map(|f| family(f * hbar0).map(|cn| (f * hbar0, cn.along(&pp, &uu))))
        .collect::<Result<_>>()?;
    let fam = HBarFamily::new(0.0, f64::INFINITY, move |hb| {
        fam_cell
            .iter()
            .find(|(x, _)| (x - hb).abs() < 1e-14)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| CqError::InvalidArgument("hbar not tabulated".into()))
    });
    let gr = grading_derivative(&fam, hbar0, 1e-4)?;
    let r = x_of_au - u_of_k + commutator(&k, &au)? + gr;
    Ok(conn.check.norm(&r))
}
