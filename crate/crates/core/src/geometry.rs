//! Chart-based exterior calculus.
//!
//! Components are plain `Vec<f64>`. A 1-form on an `n`-dimensional chart has
//! `n` entries, a 2-form is an antisymmetric `n*n` array with
//! `F[i*n + j] = F(∂_i, ∂_j)`, and a 3-form is the analogous `n^3` array.
//! Wedge products carry no combinatorial prefactor: `(a∧b)_ij = a_i b_j - a_j b_i`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::{CqError, Result};

pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const COND_WARN: f64 = 1e8;

type Domain = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct Chart {
    pub dim: usize,
    pub names: Vec<String>,
    pub h: f64,
    domain: Domain,
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Chart").field("dim", &self.dim).field("names", &self.names).finish()
    }
}

impl Chart {
    pub fn new(names: &[&str], domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Self {
            dim: names.len(),
            names: names.iter().map(|s| s.to_string()).collect(),
            h: DEFAULT_FD_STEP,
            domain: Arc::new(domain),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim && (self.domain)(p)
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(CqError::OutsideDomain)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    OneForm,
    TwoForm,
    Vector,
}

pub type Eval = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type Deriv = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// A tensor field given by its components in chart coordinates.
/// `deriv(p)[j]` holds the partial derivatives `∂_j` of all components.
#[derive(Clone)]
pub struct ChartField {
    pub rank: Rank,
    eval: Eval,
    deriv: Option<Deriv>,
}

impl ChartField {
    pub fn new(rank: Rank, eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self { rank, eval: Arc::new(eval), deriv: None }
    }

    pub fn with_deriv(mut self, d: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static) -> Self {
        self.deriv = Some(Arc::new(d));
        self
    }

    pub fn scalar(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(Rank::Scalar, move |p| vec![f(p)])
    }

    pub fn constant(rank: Rank, v: Vec<f64>) -> Self {
        let len = v.len();
        Self::new(rank, move |_| v.clone()).with_deriv(move |p: &[f64]| vec![vec![0.0; len]; p.len()])
    }

    pub fn has_deriv(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        (self.eval)(p)
    }

    /// Partial derivatives, analytic when available.
    pub fn partials(&self, p: &[f64], h: f64) -> Vec<Vec<f64>> {
        match &self.deriv {
            Some(d) => {
                let out = d(p);
                let len = self.eval(p).len();
                out.into_iter()
                    .map(|v| if v.len() == len { v } else { vec![0.0; len] })
                    .collect()
            }
            None => fd_jacobian(&*self.eval, p, h),
        }
    }

    pub fn fd_partials(&self, p: &[f64], h: f64) -> Vec<Vec<f64>> {
        fd_jacobian(&*self.eval, p, h)
    }

    /// Drops analytic derivative data, forcing finite differences.
    pub fn without_deriv(&self) -> Self {
        Self { rank: self.rank, eval: self.eval.clone(), deriv: None }
    }
}

/// Central-difference partials: `out[j]` is `∂_j f`.
pub fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, p: &[f64], h: f64) -> Vec<Vec<f64>> {
    let mut q = p.to_vec();
    (0..p.len())
        .map(|j| {
            q[j] = p[j] + h;
            let up = f(&q);
            q[j] = p[j] - h;
            let dn = f(&q);
            q[j] = p[j];
            up.iter().zip(&dn).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect()
}

pub fn wedge11(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = a[i] * b[j] - a[j] * b[i];
        }
    }
    out
}

/// `(a∧F)_ijk = a_i F_jk + a_j F_ki + a_k F_ij`.
pub fn wedge12(a: &[f64], f: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[(i * n + j) * n + k] =
                    a[i] * f[j * n + k] + a[j] * f[k * n + i] + a[k] * f[i * n + j];
            }
        }
    }
    out
}

pub fn pair(a: &[f64], v: &[f64]) -> f64 {
    a.iter().zip(v).map(|(x, y)| x * y).sum()
}

/// `(ι_v F)_j = v^i F_ij`.
pub fn interior2(v: &[f64], f: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|j| (0..n).map(|i| v[i] * f[i * n + j]).sum()).collect()
}

/// `F(u, v)`.
pub fn eval2(f: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += u[i] * f[i * n + j] * v[j];
        }
    }
    s
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

fn d_from_partials(rank: Rank, d: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
    match rank {
        Rank::Scalar => Ok((0..n).map(|i| d[i][0]).collect()),
        Rank::OneForm => {
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = d[i][j] - d[j][i];
                }
            }
            Ok(out)
        }
        Rank::TwoForm => {
            let mut out = vec![0.0; n * n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out[(i * n + j) * n + k] =
                            d[i][j * n + k] + d[j][k * n + i] + d[k][i * n + j];
                    }
                }
            }
            Ok(out)
        }
        Rank::Vector => Err(CqError::InvalidArgument("exterior derivative of a vector".into())),
    }
}

/// `d(field)` at `p`, analytic when the field carries derivative data.
pub fn exterior_derivative(chart: &Chart, field: &ChartField, p: &[f64]) -> Result<Vec<f64>> {
    chart.check(p)?;
    d_from_partials(field.rank, &field.partials(p, chart.h), chart.dim)
}

/// Finite-difference `d(field)` regardless of analytic data.
pub fn exterior_derivative_fd(chart: &Chart, field: &ChartField, p: &[f64]) -> Result<Vec<f64>> {
    chart.check(p)?;
    d_from_partials(field.rank, &field.fd_partials(p, chart.h), chart.dim)
}

fn raise(rank: Rank) -> Result<Rank> {
    match rank {
        Rank::Scalar => Ok(Rank::OneForm),
        Rank::OneForm => Ok(Rank::TwoForm),
        _ => Err(CqError::InvalidArgument("d of this rank is not a field here".into())),
    }
}

/// The field `p ↦ d(field)(p)`.
pub fn d_field(chart: &Chart, field: &ChartField) -> Result<ChartField> {
    let rank = raise(field.rank)?;
    let (c, f) = (chart.clone(), field.clone());
    Ok(ChartField::new(rank, move |p| {
        d_from_partials(f.rank, &f.partials(p, c.h), c.dim).unwrap_or_default()
    }))
}

/// `max |d(d field)|`: inner derivative analytic when available, outer by
/// central differences.
pub fn dd_residual(chart: &Chart, field: &ChartField, p: &[f64]) -> Result<f64> {
    let df = d_field(chart, field)?;
    Ok(max_abs(&exterior_derivative(chart, &df, p)?))
}

/// Lie bracket `[u, v]^i = u^j ∂_j v^i - v^j ∂_j u^i`.
pub fn bracket(chart: &Chart, u: &ChartField, v: &ChartField, p: &[f64]) -> Vec<f64> {
    let (uu, vv) = (u.eval(p), v.eval(p));
    let (du, dv) = (u.partials(p, chart.h), v.partials(p, chart.h));
    let n = chart.dim;
    (0..n)
        .map(|i| (0..n).map(|j| uu[j] * dv[j][i] - vv[j] * du[j][i]).sum())
        .collect()
}

/// Lie derivative along a vector field by Cartan's formula (forms) or the
/// bracket (vectors).
pub fn lie_derivative(chart: &Chart, v: &ChartField, form: &ChartField, p: &[f64]) -> Result<Vec<f64>> {
    chart.check(p)?;
    if v.rank != Rank::Vector {
        return Err(CqError::InvalidArgument("lie derivative needs a vector field".into()));
    }
    let vv = v.eval(p);
    match form.rank {
        Rank::Scalar => Ok(vec![pair(&exterior_derivative(chart, form, p)?, &vv)]),
        Rank::Vector => Ok(bracket(chart, v, form, p)),
        Rank::OneForm => {
            let da = exterior_derivative(chart, form, p)?;
            let (vf, af) = (v.clone(), form.clone());
            let contracted = ChartField::scalar(move |q| pair(&af.eval(q), &vf.eval(q)));
            Ok(add(&interior2(&vv, &da), &exterior_derivative(chart, &contracted, p)?))
        }
        Rank::TwoForm => {
            let df = exterior_derivative(chart, form, p)?;
            let n = chart.dim;
            let mut i_df = vec![0.0; n * n];
            for j in 0..n {
                for k in 0..n {
                    i_df[j * n + k] = (0..n).map(|i| vv[i] * df[(i * n + j) * n + k]).sum();
                }
            }
            let (vf, ff) = (v.clone(), form.clone());
            let contracted = ChartField::new(Rank::OneForm, move |q| interior2(&vf.eval(q), &ff.eval(q)));
            Ok(add(&i_df, &exterior_derivative(chart, &contracted, p)?))
        }
    }
}

/// Least squares with SVD; returns the solution, the relative residual and
/// the condition number over the nonzero singular values.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64, f64) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-12 * a.nrows().max(a.ncols()) as f64;
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .filter(|s| *s > tol)
        .fold(f64::INFINITY, f64::min);
    let x = svd.solve(b, tol).unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let r = (a * &x - b).amax();
    (x, r, smax / smin)
}

#[derive(Debug, Clone)]
pub struct ReebResult {
    pub rho: Vec<f64>,
    pub cond: f64,
    pub warn: bool,
}

/// Solves `ι_ρ dα = 0`, `α(ρ) = 1`.
pub fn reeb_vector(chart: &Chart, alpha: &ChartField, p: &[f64]) -> Result<ReebResult> {
    let n = chart.dim;
    let da = exterior_derivative(chart, alpha, p)?;
    let a = alpha.eval(p);
    let mut m = DMatrix::zeros(n + 1, n);
    for j in 0..n {
        for i in 0..n {
            m[(j, i)] = da[i * n + j];
        }
        m[(n, j)] = a[j];
    }
    let mut b = DVector::zeros(n + 1);
    b[n] = 1.0;
    let svd = m.clone().svd(false, false);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if smin < 1e-10 * smax {
        return Err(CqError::Degenerate("contact form degenerate at point".into()));
    }
    let (x, r, _) = lstsq(&m, &b);
    if r > 1e-8 {
        return Err(CqError::Degenerate(format!("reeb system inconsistent, residual {r:.2e}")));
    }
    let cond = smax / smin;
    Ok(ReebResult { rho: x.iter().cloned().collect(), cond, warn: cond > COND_WARN })
}

/// `v ↦ ι_v dα`, defined for `v` in the distribution.
pub fn flat(chart: &Chart, alpha: &ChartField, v: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let a = alpha.eval(p);
    if pair(&a, v).abs() > 1e-8 * (1.0 + max_abs(v)) {
        return Err(CqError::Precondition("vector not in distribution".into()));
    }
    Ok(interior2(v, &exterior_derivative(chart, alpha, p)?))
}

/// Solves `dα(v, ·) = ups` with `α(v) = 0`; `ups` must annihilate the Reeb vector.
pub fn sharp(chart: &Chart, alpha: &ChartField, ups: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let n = chart.dim;
    let rho = reeb_vector(chart, alpha, p)?.rho;
    if pair(ups, &rho).abs() > 1e-8 * (1.0 + max_abs(ups)) {
        return Err(CqError::Precondition("covector does not annihilate the Reeb vector".into()));
    }
    let da = exterior_derivative(chart, alpha, p)?;
    let a = alpha.eval(p);
    let mut m = DMatrix::zeros(n + 1, n);
    let mut b = DVector::zeros(n + 1);
    for j in 0..n {
        for i in 0..n {
            m[(j, i)] = da[i * n + j];
        }
        m[(n, j)] = a[j];
        b[j] = ups[j];
    }
    let (x, r, _) = lstsq(&m, &b);
    if r > 1e-8 * (1.0 + max_abs(ups)) {
        return Err(CqError::Precondition(format!("sharp system inconsistent, residual {r:.2e}")));
    }
    Ok(x.iter().cloned().collect())
}

/// Contact form with a symplectic coframe of its distribution.
#[derive(Clone)]
pub struct Coframe {
    pub alpha: ChartField,
    pub frames: Vec<ChartField>,
    pub j: DMatrix<f64>,
}

impl Coframe {
    pub fn new(alpha: ChartField, frames: Vec<ChartField>, j: DMatrix<f64>) -> Result<Self> {
        let m = frames.len();
        if j.nrows() != m || j.ncols() != m || m % 2 != 0 {
            return Err(CqError::InvalidArgument("pairing shape".into()));
        }
        if (&j + j.transpose()).amax() > 1e-14 || (j.determinant().abs() - 1.0).abs() > 1e-12 {
            return Err(CqError::InvalidArgument("pairing must be antisymmetric with |det| = 1".into()));
        }
        Ok(Self { alpha, frames, j })
    }

    pub fn standard_j(n: usize) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            j[(2 * k, 2 * k + 1)] = 1.0;
            j[(2 * k + 1, 2 * k)] = -1.0;
        }
        j
    }

    /// Rows `(α, e^1, ..., e^2n)` at `p`.
    pub fn theta(&self, p: &[f64]) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> =
            std::iter::once(self.alpha.eval(p)).chain(self.frames.iter().map(|e| e.eval(p))).collect();
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, k| rows[i][k])
    }

    /// Columns `(T, E_1, ..., E_2n)` dual to `theta`.
    pub fn dual(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.theta(p)
            .try_inverse()
            .ok_or_else(|| CqError::Degenerate("coframe not independent".into()))
    }

    /// Rank test for pointwise independence.
    pub fn independent(&self, p: &[f64]) -> bool {
        let t = self.theta(p);
        let sv = t.svd(false, false).singular_values;
        sv.min() > 1e-10 * sv.max()
    }

    /// `½ j_ab e^a∧e^b` at `p`.
    pub fn levi_from_frames(&self, p: &[f64]) -> Vec<f64> {
        let es: Vec<Vec<f64>> = self.frames.iter().map(|e| e.eval(p)).collect();
        let n = es[0].len();
        let mut out = vec![0.0; n * n];
        for a in 0..es.len() {
            for b in 0..es.len() {
                let jab = self.j[(a, b)];
                if jab != 0.0 {
                    for i in 0..n {
                        for k in 0..n {
                            out[i * n + k] += jab * es[a][i] * es[b][k];
                        }
                    }
                }
            }
        }
        out
    }
}

/// `max_p |dα - ½ j_ab e^a∧e^b|`.
pub fn structure_residual(chart: &Chart, cf: &Coframe, samples: &[Vec<f64>]) -> Result<f64> {
    let mut r: f64 = 0.0;
    for p in samples {
        let da = exterior_derivative(chart, &cf.alpha, p)?;
        r = r.max(max_abs(&sub(&da, &cf.levi_from_frames(p))));
    }
    Ok(r)
}

/// Chart components to coframe components of a 2-form: `Θ^{-T} F Θ^{-1}`.
pub fn two_form_in_basis(f: &[f64], dual: &DMatrix<f64>) -> DMatrix<f64> {
    let n = dual.nrows();
    let fm = DMatrix::from_fn(n, n, |i, j| f[i * n + j]);
    dual.transpose() * fm * dual
}

/// Levi-compatible connection on the distribution: `ω^{ab}` symmetric with
/// `de^a + ω^{ab}∧e_b = 0`, `e_b = j_bc e^c`.
#[derive(Debug, Clone)]
pub struct LeviSolution {
    /// `omega[i][(a, b)]` is the `dx^i` component of `ω^{ab}`.
    pub omega: Vec<DMatrix<f64>>,
    /// Coframe-basis coefficients: `coeffs[C][(a, b)]` multiplies `θ^C`,
    /// `θ = (α, e^1, ...)`.
    pub coeffs: Vec<DMatrix<f64>>,
    pub residual: f64,
}

impl LeviSolution {
    /// `ω^a_c = ω^{ab} j_bc` along chart direction `i`.
    pub fn mixed(&self, i: usize, j: &DMatrix<f64>) -> DMatrix<f64> {
        &self.omega[i] * j
    }

    pub fn apply(&self, v: &[f64]) -> DMatrix<f64> {
        let m = self.omega[0].nrows();
        let mut out = DMatrix::zeros(m, m);
        for (i, w) in self.omega.iter().enumerate() {
            out += w * v[i];
        }
        out
    }
}

/// Solves the first-order structure equation, preferring `ω` that commutes
/// with `j` and falling back to the minimum-norm solution.
pub fn levi_connection_solve(chart: &Chart, cf: &Coframe, p: &[f64]) -> Result<LeviSolution> {
    let n = chart.dim;
    let m = cf.frames.len();
    let sr = structure_residual(chart, cf, &[p.to_vec()])?;
    if sr > 1e-6 {
        return Err(CqError::Precondition(format!("structure residual {sr:.2e}")));
    }
    let theta = cf.theta(p);
    let dual = cf.dual(p)?;
    // -de^a in the coframe basis; only upper-triangular entries are independent.
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    let mut rhs = DVector::zeros(m * pairs.len());
    for a in 0..m {
        let de = exterior_derivative(chart, &cf.frames[a], p)?;
        let fb = two_form_in_basis(&de, &dual);
        for (k, &(x, y)) in pairs.iter().enumerate() {
            rhs[a * pairs.len() + k] = -fb[(x, y)];
        }
    }
    // Unknowns: W^{ab}_C for a ≤ b, C over the n coframe slots.
    let sym: Vec<(usize, usize)> = (0..m).flat_map(|a| (a..m).map(move |b| (a, b))).collect();
    let nu = sym.len() * n;
    let mut mat = DMatrix::zeros(m * pairs.len(), nu);
    for (s, &(a0, b0)) in sym.iter().enumerate() {
        for cc in 0..n {
            let col = s * n + cc;
            let entries: Vec<(usize, usize)> = if a0 == b0 { vec![(a0, b0)] } else { vec![(a0, b0), (b0, a0)] };
            for (a, b) in entries {
                // θ^C ∧ j_bd θ^{d+1}
                for d in 0..m {
                    let jbd = cf.j[(b, d)];
                    if jbd == 0.0 {
                        continue;
                    }
                    let dd = d + 1;
                    for (k, &(x, y)) in pairs.iter().enumerate() {
                        let w = (if x == cc && y == dd { 1.0 } else { 0.0 }) - (if x == dd && y == cc { 1.0 } else { 0.0 });
                        mat[(a * pairs.len() + k, col)] += jbd * w;
                    }
                }
            }
        }
    }
    // Prefer the solution commuting with j when the frame admits one.
    let nc = n * m * m;
    let mut gauge = DMatrix::zeros(m * pairs.len() + nc, nu);
    gauge.rows_mut(0, m * pairs.len()).copy_from(&mat);
    for (s, &(a0, b0)) in sym.iter().enumerate() {
        let mut w = DMatrix::<f64>::zeros(m, m);
        w[(a0, b0)] = 1.0;
        w[(b0, a0)] = 1.0;
        let e = &w * &cf.j * &cf.j - &cf.j * &w * &cf.j;
        for cc in 0..n {
            for r in 0..m {
                for q in 0..m {
                    gauge[(m * pairs.len() + cc * m * m + r * m + q, s * n + cc)] = e[(r, q)];
                }
            }
        }
    }
    let mut grhs = DVector::zeros(m * pairs.len() + nc);
    grhs.rows_mut(0, m * pairs.len()).copy_from(&rhs);
    let (xg, rg, _) = lstsq(&gauge, &grhs);
    let (x, r) = if rg < 1e-10 {
        (xg, rg)
    } else {
        let (x, r, _) = lstsq(&mat, &rhs);
        (x, r)
    };
    if r > 1e-8 {
        return Err(CqError::Degenerate(format!("inconsistent frame, residual {r:.2e}")));
    }
    let mut coeffs = vec![DMatrix::zeros(m, m); n];
    for (s, &(a, b)) in sym.iter().enumerate() {
        for cc in 0..n {
            coeffs[cc][(a, b)] = x[s * n + cc];
            coeffs[cc][(b, a)] = x[s * n + cc];
        }
    }
    let omega: Vec<DMatrix<f64>> = (0..n)
        .map(|i| {
            let mut w = DMatrix::zeros(m, m);
            for cc in 0..n {
                w += &coeffs[cc] * theta[(cc, i)];
            }
            w
        })
        .collect();
    let sol = LeviSolution { omega, coeffs, residual: 0.0 };
    let residual = levi_residual(chart, cf, &sol, p)?;
    if residual > 1e-8 {
        return Err(CqError::Degenerate(format!("inconsistent frame, residual {residual:.2e}")));
    }
    Ok(LeviSolution { residual, ..sol })
}

/// `max_a |de^a + ω^a_c ∧ e^c|` in chart components.
pub fn levi_residual(chart: &Chart, cf: &Coframe, sol: &LeviSolution, p: &[f64]) -> Result<f64> {
    let n = chart.dim;
    let m = cf.frames.len();
    let es: Vec<Vec<f64>> = cf.frames.iter().map(|e| e.eval(p)).collect();
    let mut r: f64 = 0.0;
    for a in 0..m {
        let mut tot = exterior_derivative(chart, &cf.frames[a], p)?;
        for cidx in 0..m {
            let w: Vec<f64> = (0..n).map(|i| sol.mixed(i, &cf.j)[(a, cidx)]).collect();
            tot = add(&tot, &wedge11(&w, &es[cidx]));
        }
        r = r.max(max_abs(&tot));
    }
    Ok(r)
}

/// `d log Ω = Υ + χ α` with `Υ(ρ) = 0`.
pub fn rescale_decompose(chart: &Chart, omega: &ChartField, alpha: &ChartField, p: &[f64]) -> Result<(Vec<f64>, f64)> {
    let w = omega.eval(p)[0];
    if !(w > 0.0) {
        return Err(CqError::InvalidArgument("rescaling must be positive".into()));
    }
    let dl = scale(&exterior_derivative(chart, omega, p)?, 1.0 / w);
    let rho = reeb_vector(chart, alpha, p)?.rho;
    let chi = pair(&dl, &rho);
    let ups = sub(&dl, &scale(&alpha.eval(p), chi));
    Ok((ups, chi))
}
