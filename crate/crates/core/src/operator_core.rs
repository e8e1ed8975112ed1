//! Heisenberg-algebra representations, Weyl ordering and the ħ-grading.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::{c, CqError, Mat, Result, C64};

pub const MAX_FOCK_DIM: usize = 256;
pub const MAX_GRID_DIM: usize = 2048;
pub const MAX_WEYL_DEGREE: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepKind {
    Fock,
    Grid { x_min: f64, x_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HilbertRep {
    pub kind: RepKind,
    pub dim: usize,
    pub hbar: f64,
}

impl HilbertRep {
    pub fn fock(dim: usize, hbar: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_FOCK_DIM {
            return Err(CqError::InvalidArgument(format!("fock dim {dim}")));
        }
        if !(hbar > 0.0) {
            return Err(CqError::InvalidArgument(format!("hbar {hbar}")));
        }
        Ok(Self { kind: RepKind::Fock, dim, hbar })
    }

    pub fn grid(dim: usize, hbar: f64, x_min: f64, x_max: f64) -> Result<Self> {
        if dim < 8 || dim > MAX_GRID_DIM {
            return Err(CqError::InvalidArgument(format!("grid dim {dim}")));
        }
        if !(x_min < x_max) {
            return Err(CqError::InvalidArgument("x_min must be below x_max".into()));
        }
        if !(hbar > 0.0) {
            return Err(CqError::InvalidArgument(format!("hbar {hbar}")));
        }
        Ok(Self { kind: RepKind::Grid { x_min, x_max }, dim, hbar })
    }

    /// Grid sample points, endpoints included.
    pub fn points(&self) -> Vec<f64> {
        match self.kind {
            RepKind::Fock => (0..self.dim).map(|n| n as f64).collect(),
            RepKind::Grid { x_min, x_max } => {
                let h = (x_max - x_min) / (self.dim - 1) as f64;
                (0..self.dim).map(|j| x_min + h * j as f64).collect()
            }
        }
    }
}

/// Ladder and quadrature operators of one oscillator mode.
#[derive(Debug, Clone)]
pub struct FockOps {
    pub a: Mat,
    pub a_dag: Mat,
    pub s1: Mat,
    pub s2: Mat,
    pub number: Mat,
}

/// `a|n> = sqrt(n hbar)|n-1>`, `s2 = (a + a†)/√2`, `s1 = (a - a†)/(i√2)`.
pub fn fock_rep(dim: usize, hbar: f64) -> Result<FockOps> {
    let rep = HilbertRep::fock(dim, hbar)?;
    let mut a = Mat::zeros(rep.dim, rep.dim);
    for n in 1..dim {
        a[(n - 1, n)] = c((n as f64 * hbar).sqrt(), 0.0);
    }
    let a_dag = a.adjoint();
    let r2 = std::f64::consts::SQRT_2;
    let s2 = (&a + &a_dag).unscale(r2);
    let s1 = (&a - &a_dag) * c(0.0, -1.0 / r2);
    // a†a has exact diagonal n*hbar up to rounding; build it directly.
    let number = Mat::from_diagonal(&nalgebra::DVector::from_fn(dim, |n, _| c(n as f64 * hbar, 0.0)));
    Ok(FockOps { a, a_dag, s1, s2, number })
}

#[derive(Debug, Clone)]
pub struct GridOps {
    pub rep: HilbertRep,
    pub position: Mat,
    pub momentum: Mat,
    /// Real spectral differentiation matrix, `momentum = -i hbar D`.
    pub deriv: DMatrix<f64>,
}

/// Fourier differentiation matrix for `n` periodic samples of spacing `h`.
pub fn fourier_diff_matrix(n: usize, h: f64) -> DMatrix<f64> {
    let period = n as f64 * h;
    let scale = 2.0 * PI / period;
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            return 0.0;
        }
        let d = j as isize - k as isize;
        let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let arg = PI * d as f64 / n as f64;
        let v = if n % 2 == 0 { 1.0 / arg.tan() } else { 1.0 / arg.sin() };
        0.5 * scale * sign * v
    })
}

/// Position and momentum on a uniform grid; momentum uses the periodic
/// Fourier differentiation matrix.
pub fn grid_rep(dim: usize, hbar: f64, x_min: f64, x_max: f64) -> Result<GridOps> {
    let rep = HilbertRep::grid(dim, hbar, x_min, x_max)?;
    let xs = rep.points();
    let h = (x_max - x_min) / (dim - 1) as f64;
    let deriv = fourier_diff_matrix(dim, h);
    let position = Mat::from_diagonal(&nalgebra::DVector::from_fn(dim, |j, _| c(xs[j], 0.0)));
    let momentum = deriv.map(|v| c(0.0, -hbar * v));
    Ok(GridOps { rep, position, momentum, deriv })
}

pub const GRID_DERIVATIVE_SCHEME: &str = "fourier";

pub fn commutator(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(CqError::RepMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(a * b - b * a)
}

pub fn anticommutator(a: &Mat, b: &Mat) -> Mat {
    a * b + b * a
}

pub fn identity(dim: usize) -> Mat {
    Mat::identity(dim, dim)
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// Polynomial in (q, p) with complex coefficients keyed by `(deg_q, deg_p)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolynomialObservable {
    pub terms: BTreeMap<(u32, u32), C64>,
}

impl PolynomialObservable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: &[((u32, u32), f64)]) -> Self {
        let mut p = Self::new();
        for &(k, v) in terms {
            p.add(k, c(v, 0.0));
        }
        p
    }

    pub fn add(&mut self, key: (u32, u32), v: C64) {
        let e = self.terms.entry(key).or_insert(C64::new(0.0, 0.0));
        *e += v;
        if e.norm() == 0.0 {
            self.terms.remove(&key);
        }
    }

    /// `(q^2 + p^2)/2`.
    pub fn harmonic() -> Self {
        Self::from_terms(&[((2, 0), 0.5), ((0, 2), 0.5)])
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(m, n)| m + n).max().unwrap_or(0)
    }

    pub fn evaluate(&self, q: f64, p: f64) -> C64 {
        self.terms
            .iter()
            .map(|(&(m, n), &v)| v * q.powi(m as i32) * p.powi(n as i32))
            .sum()
    }

    pub fn d_dq(&self) -> Self {
        let mut out = Self::new();
        for (&(m, n), &v) in &self.terms {
            if m > 0 {
                out.add((m - 1, n), v * m as f64);
            }
        }
        out
    }

    pub fn d_dp(&self) -> Self {
        let mut out = Self::new();
        for (&(m, n), &v) in &self.terms {
            if n > 0 {
                out.add((m, n - 1), v * n as f64);
            }
        }
        out
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|v| v.im == 0.0)
    }
}

/// Operators substituted for the symbols q and p.
#[derive(Debug, Clone)]
pub struct Substitution {
    pub q: Mat,
    pub p: Mat,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Weyl (fully symmetric) ordering: q^m p^n becomes the average of all
/// orderings of m copies of Q and n copies of P.
pub fn weyl_quantize(poly: &PolynomialObservable, sub: &Substitution) -> Result<Mat> {
    let deg = poly.degree();
    if deg > MAX_WEYL_DEGREE {
        return Err(CqError::Unsupported(format!("degree {deg} above {MAX_WEYL_DEGREE}")));
    }
    commutator(&sub.q, &sub.p)?;
    let dim = sub.q.nrows();
    let mq = poly.terms.keys().map(|k| k.0).max().unwrap_or(0) as usize;
    let mp = poly.terms.keys().map(|k| k.1).max().unwrap_or(0) as usize;
    // sym[m][n] = sum over all words with m Q's and n P's.
    let mut sym: Vec<Vec<Option<Mat>>> = vec![vec![None; mp + 1]; mq + 1];
    sym[0][0] = Some(identity(dim));
    for m in 0..=mq {
        for n in 0..=mp {
            if m == 0 && n == 0 {
                continue;
            }
            let mut acc = Mat::zeros(dim, dim);
            if m > 0 {
                acc += &sub.q * sym[m - 1][n].as_ref().unwrap();
            }
            if n > 0 {
                acc += &sub.p * sym[m][n - 1].as_ref().unwrap();
            }
            sym[m][n] = Some(acc);
        }
    }
    let mut out = Mat::zeros(dim, dim);
    for (&(m, n), &v) in &poly.terms {
        let norm = binomial(m + n, m);
        out += sym[m as usize][n as usize].as_ref().unwrap() * (v / norm);
    }
    Ok(out)
}

/// `table[m][n]` is the Weyl-ordered `q^m p^n` for all `m + n <= max_degree`.
pub fn weyl_table(sub: &Substitution, max_degree: u32) -> Result<Vec<Vec<Mat>>> {
    if max_degree > MAX_WEYL_DEGREE {
        return Err(CqError::Unsupported(format!("degree {max_degree} above {MAX_WEYL_DEGREE}")));
    }
    commutator(&sub.q, &sub.p)?;
    let dim = sub.q.nrows();
    let d = max_degree as usize;
    let mut sym: Vec<Vec<Mat>> = Vec::with_capacity(d + 1);
    for m in 0..=d {
        let mut row: Vec<Mat> = Vec::with_capacity(d + 1 - m);
        for n in 0..=(d - m) {
            let w = if m == 0 && n == 0 {
                identity(dim)
            } else {
                let mut acc = Mat::zeros(dim, dim);
                if m > 0 {
                    acc += &sub.q * &sym[m - 1][n];
                }
                if n > 0 {
                    acc += &sub.p * &row[n - 1];
                }
                acc
            };
            row.push(w);
        }
        sym.push(row);
    }
    for (m, row) in sym.iter_mut().enumerate() {
        for (n, w) in row.iter_mut().enumerate() {
            *w /= c(binomial((m + n) as u32, m as u32), 0.0);
        }
    }
    Ok(sym)
}

pub enum SpectralFn<'a> {
    Sqrt,
    Map(&'a dyn Fn(f64) -> f64),
}

/// Applies `f` to the diagonal of an operator that commutes with the number
/// operator. Square roots of negative entries are a domain error unless
/// `clamp_negative` is set, in which case they map to zero.
pub fn spectral_fn(op: &Mat, f: SpectralFn<'_>, clamp_negative: bool) -> Result<Mat> {
    let n = op.nrows();
    let scale = crate::max_abs(op).max(1.0);
    for i in 0..n {
        for j in 0..n {
            if i != j && op[(i, j)].norm() > 1e-12 * scale {
                return Err(CqError::Precondition(format!(
                    "operator not diagonal in number basis at ({i},{j})"
                )));
            }
        }
    }
    let mut out = Mat::zeros(n, n);
    for k in 0..n {
        let x = op[(k, k)].re;
        out[(k, k)] = c(
            match f {
                SpectralFn::Sqrt => {
                    if x.abs() < 1e-12 {
                        0.0
                    } else if x < 0.0 {
                        if clamp_negative {
                            0.0
                        } else {
                            return Err(CqError::Domain { level: k, value: x });
                        }
                    } else {
                        x.sqrt()
                    }
                }
                SpectralFn::Map(g) => g(x),
            },
            0.0,
        );
    }
    Ok(out)
}

/// A rule producing an operator for each ħ in `[lo, hi]`.
#[derive(Clone)]
pub struct HBarFamily {
    pub lo: f64,
    pub hi: f64,
    rule: Arc<dyn Fn(f64) -> Result<Mat> + Send + Sync>,
}

impl HBarFamily {
    pub fn new(lo: f64, hi: f64, rule: impl Fn(f64) -> Result<Mat> + Send + Sync + 'static) -> Self {
        Self { lo, hi, rule: Arc::new(rule) }
    }

    pub fn eval(&self, hbar: f64) -> Result<Mat> {
        if hbar < self.lo || hbar > self.hi {
            return Err(CqError::InvalidArgument(format!("hbar {hbar} outside family range")));
        }
        (self.rule)(hbar)
    }
}

/// `gr F = 2ħ ∂F/∂ħ` by central difference with relative step `rel_step`.
pub fn grading_derivative(family: &HBarFamily, hbar0: f64, rel_step: f64) -> Result<Mat> {
    let up = family.eval(hbar0 * (1.0 + rel_step))?;
    let dn = family.eval(hbar0 * (1.0 - rel_step))?;
    Ok((up - dn) * c(2.0 * hbar0 / (2.0 * hbar0 * rel_step), 0.0))
}

/// Relative ħ nodes used by [`grade_components`].
pub const GRADE_FIT_FACTORS: [f64; 9] = [0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4];

/// Fits `F(ħ) ≈ Σ_k C_k ħ^{k/2}` over `powers` from samples around `hbar0`
/// and returns the coefficients in the order of `powers`.
pub fn grade_components(family: &HBarFamily, hbar0: f64, powers: &[i32]) -> Result<Vec<Mat>> {
    let hs: Vec<f64> = GRADE_FIT_FACTORS.iter().map(|f| f * hbar0).collect();
    let vals: Vec<Mat> = hs.iter().map(|&h| family.eval(h)).collect::<Result<_>>()?;
    let v = DMatrix::from_fn(hs.len(), powers.len(), |i, j| hs[i].powf(powers[j] as f64 / 2.0));
    let svd = v.clone().svd(true, true);
    let pinv = svd
        .pseudo_inverse(1e-13)
        .map_err(|e| CqError::Degenerate(e.to_string()))?;
    let (r, cdim) = vals[0].shape();
    let mut out = vec![Mat::zeros(r, cdim); powers.len()];
    for (j, o) in out.iter_mut().enumerate() {
        for (i, val) in vals.iter().enumerate() {
            *o += val * c(pinv[(j, i)], 0.0);
        }
    }
    Ok(out)
}
