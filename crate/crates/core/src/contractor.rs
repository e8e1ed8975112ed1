//! Contractor triples `(v⁺, v, v⁻)` in a chosen scale.
//!
//! Middle slots are frame coefficients `v = v^a E_a` for a symplectic coframe
//! with `φ(u, v) = uᵀ j v`. Sharp is `φ(Υ^♯, ·) = Υ`, so `Υ^♯ = j^{-T} Υ`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::geometry::{
    exterior_derivative, levi_connection_solve, max_abs, pair, reeb_vector, rescale_decompose, scale, sub, Chart,
    ChartField, Coframe, Rank,
};
use crate::{c, CqError, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Contractor {
    pub scale: String,
    pub v_plus: f64,
    pub v_mid: Vec<f64>,
    pub v_minus: f64,
    pub weight: f64,
}

impl Contractor {
    pub fn new(scale: &str, v_plus: f64, v_mid: Vec<f64>, v_minus: f64, weight: f64) -> Result<Self> {
        if !v_plus.is_finite() || !v_minus.is_finite() || v_mid.iter().any(|x| !x.is_finite()) {
            return Err(CqError::InvalidArgument("non-finite contractor entry".into()));
        }
        Ok(Self { scale: scale.to_string(), v_plus, v_mid, v_minus, weight })
    }

    /// The canonical tractor `X = (0, 0, 1)` of weight 1.
    pub fn canonical(scale: &str, n2: usize) -> Self {
        Self { scale: scale.to_string(), v_plus: 0.0, v_mid: vec![0.0; n2], v_minus: 1.0, weight: 1.0 }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let mid = self.v_mid.iter().zip(&other.v_mid).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (self.v_plus - other.v_plus).abs().max((self.v_minus - other.v_minus).abs()).max(mid)
    }

    pub fn norm(&self) -> f64 {
        self.v_plus.abs().max(self.v_minus.abs()).max(max_abs(&self.v_mid))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    pub value: f64,
    pub weight: f64,
}

impl Density {
    pub fn rescale(&self, omega: f64) -> Self {
        Self { value: self.value * omega.powf(self.weight), weight: self.weight }
    }
}

pub fn sharp(j: &DMatrix<f64>, ups: &[f64]) -> Vec<f64> {
    let jt = j.transpose().try_inverse().expect("pairing invertible");
    (jt * DVector::from_column_slice(ups)).iter().cloned().collect()
}

pub fn flat(j: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (j.transpose() * DVector::from_column_slice(v)).iter().cloned().collect()
}

pub fn phi(j: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    (DVector::from_column_slice(u).transpose() * j * DVector::from_column_slice(v))[(0, 0)]
}

#[derive(Debug, Clone)]
pub struct RescaleData {
    pub omega: f64,
    pub upsilon: Vec<f64>,
    pub upsilon_sharp: Vec<f64>,
    pub chi: f64,
    pub m: DMatrix<f64>,
    pub j: DMatrix<f64>,
}

impl RescaleData {
    pub fn new(omega: f64, upsilon: Vec<f64>, chi: f64, m: DMatrix<f64>, j: DMatrix<f64>) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(CqError::InvalidArgument("Ω must be positive".into()));
        }
        if upsilon.len() != j.nrows() || m.shape() != j.shape() {
            return Err(CqError::InvalidArgument("rescale data shapes".into()));
        }
        if (m.transpose() * &j * &m - &j).amax() > 1e-10 {
            return Err(CqError::InvalidArgument("M is not symplectic".into()));
        }
        let upsilon_sharp = sharp(&j, &upsilon);
        Ok(Self { omega, upsilon, upsilon_sharp, chi, m, j })
    }

    pub fn trivial(j: DMatrix<f64>) -> Self {
        let n2 = j.nrows();
        Self::new(1.0, vec![0.0; n2], 0.0, DMatrix::identity(n2, n2), j).expect("identity data")
    }

    /// Builds `(Υ, χ)` from `d log Ω = Υ + χα` at `p`, with `Υ` expressed on
    /// the distribution vectors given as columns of `frame_vectors`.
    pub fn at_point(
        chart: &Chart,
        alpha: &ChartField,
        frame_vectors: &DMatrix<f64>,
        omega: &ChartField,
        m: DMatrix<f64>,
        j: DMatrix<f64>,
        p: &[f64],
    ) -> Result<Self> {
        let (ups, chi) = rescale_decompose(chart, omega, alpha, p)?;
        let comps: Vec<f64> =
            (0..frame_vectors.ncols()).map(|a| pair(&ups, frame_vectors.column(a).as_slice())).collect();
        Self::new(omega.eval(p)[0], comps, chi, m, j)
    }
}

/// `(Ωv⁺, M(v − v⁺Υ^♯), Ω⁻¹(v⁻ − Υ(v) − ½v⁺χ))`, times `Ω^w`.
pub fn rescale_contractor(cv: &Contractor, d: &RescaleData) -> Result<Contractor> {
    if (d.m.transpose() * &d.j * &d.m - &d.j).amax() > 1e-10 {
        return Err(CqError::InvalidArgument("M is not symplectic".into()));
    }
    if cv.v_mid.len() != d.upsilon.len() {
        return Err(CqError::InvalidArgument("middle slot length".into()));
    }
    let mid: Vec<f64> = cv.v_mid.iter().zip(&d.upsilon_sharp).map(|(v, s)| v - cv.v_plus * s).collect();
    let mid = &d.m * DVector::from_vec(mid);
    let lower = cv.v_minus - pair(&d.upsilon, &cv.v_mid) - 0.5 * cv.v_plus * d.chi;
    let wf = d.omega.powf(cv.weight);
    Ok(Contractor {
        scale: format!("{}'", cv.scale),
        v_plus: wf * d.omega * cv.v_plus,
        v_mid: mid.iter().map(|x| wf * x).collect(),
        v_minus: wf * lower / d.omega,
        weight: cv.weight,
    })
}

/// `u⁺v⁻ − u⁻v⁺ − φ(u, v)`.
pub fn pairing_j(u: &Contractor, v: &Contractor, j: &DMatrix<f64>) -> Result<Density> {
    if u.scale != v.scale {
        return Err(CqError::InvalidArgument(format!("scale mismatch: {} vs {}", u.scale, v.scale)));
    }
    Ok(Density {
        value: u.v_plus * v.v_minus - u.v_minus * v.v_plus - phi(j, &u.v_mid, &v.v_mid),
        weight: u.weight + v.weight,
    })
}

/// Output of the D-operator, a cocontractor of weight `w − 1`.
#[derive(Debug, Clone)]
pub struct DOperator {
    /// `½ℒ_ρ ν`
    pub top: f64,
    /// `d^α ν = dν − (ℒ_ρ ν) α` as a chart covector.
    pub middle_form: Vec<f64>,
    /// `wν`
    pub bottom: f64,
    pub weight: f64,
}

pub fn d_operator(chart: &Chart, alpha: &ChartField, nu: &ChartField, w: f64, p: &[f64]) -> Result<DOperator> {
    let rho = reeb_vector(chart, alpha, p)?.rho;
    let dnu = exterior_derivative(chart, nu, p)?;
    let lr = pair(&dnu, &rho);
    Ok(DOperator {
        top: 0.5 * lr,
        middle_form: sub(&dnu, &scale(&alpha.eval(p), lr)),
        bottom: w * nu.eval(p)[0],
        weight: w - 1.0,
    })
}

impl DOperator {
    /// Raises the index: `(a, β, b) ↦ (−b, β^♯, a)`. `J` carries no weight.
    pub fn raise(&self, cf: &Coframe, p: &[f64], scale_label: &str) -> Result<Contractor> {
        let dual = cf.dual(p)?;
        let beta: Vec<f64> = (1..dual.ncols()).map(|a| pair(&self.middle_form, dual.column(a).as_slice())).collect();
        Contractor::new(scale_label, -self.bottom, sharp(&cf.j, &beta), self.top, self.weight)
    }
}

type PointMats = Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;
type PointMat = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type PointVec = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// `(α, ∇^α, P, Q)` on a chart.
#[derive(Clone)]
pub struct ContractorConnectionData {
    pub chart: Chart,
    pub coframe: Coframe,
    /// `ω^a_b(∂_i)` for each chart direction.
    pub omega: PointMats,
    /// `P^a_i`, shape `2n × dim`.
    pub p: PointMat,
    /// `Q_i`.
    pub q: PointVec,
}

impl ContractorConnectionData {
    /// Levi-solved `∇^α` with `P = Q = 0`.
    pub fn from_levi(chart: Chart, cf: Coframe) -> Self {
        let (ch, cfc) = (chart.clone(), cf.clone());
        let m = cf.frames.len();
        let n = chart.dim;
        Self {
            chart,
            coframe: cf,
            omega: Arc::new(move |p| match levi_connection_solve(&ch, &cfc, p) {
                Ok(sol) => (0..ch.dim).map(|i| sol.mixed(i, &cfc.j)).collect(),
                Err(_) => vec![DMatrix::from_element(m, m, f64::NAN); ch.dim],
            }),
            p: Arc::new(move |_| DMatrix::zeros(m, n)),
            q: Arc::new(move |_| vec![0.0; n]),
        }
    }

    pub fn with_pq(
        mut self,
        p: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        q: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.p = Arc::new(p);
        self.q = Arc::new(q);
        self
    }
}

/// A weight-0 contractor field given by scalar component fields.
#[derive(Clone)]
pub struct ContractorField {
    pub plus: ChartField,
    pub mid: Vec<ChartField>,
    pub minus: ChartField,
}

impl ContractorField {
    pub fn constant(plus: f64, mid: Vec<f64>, minus: f64) -> Self {
        Self {
            plus: ChartField::constant(Rank::Scalar, vec![plus]),
            mid: mid.into_iter().map(|m| ChartField::constant(Rank::Scalar, vec![m])).collect(),
            minus: ChartField::constant(Rank::Scalar, vec![minus]),
        }
    }
}

fn directional(f: &ChartField, z: &[f64], p: &[f64], h: f64) -> f64 {
    f.partials(p, h).iter().zip(z).map(|(d, zi)| d[0] * zi).sum()
}

/// `∇_z V` as the triple
/// `(ℒ_z v⁺ + φ(v, z̄) + 2v⁻α(z); ∇_z v − v⁺P_z + v⁻z̄; ℒ_z v⁻ + ½Q_z v⁺ + φ(v, P_z))`.
pub fn connection_apply(data: &ContractorConnectionData, z: &[f64], v: &ContractorField, p: &[f64]) -> Result<Contractor> {
    let ch = &data.chart;
    ch.check(p)?;
    let cf = &data.coframe;
    let h = ch.h;
    let m = cf.frames.len();
    if v.mid.len() != m {
        return Err(CqError::InvalidArgument("middle slot length".into()));
    }
    let vp = v.plus.eval(p)[0];
    let vm = v.minus.eval(p)[0];
    let vmid: Vec<f64> = v.mid.iter().map(|f| f.eval(p)[0]).collect();
    let rho = reeb_vector(ch, &cf.alpha, p)?.rho;
    let az = pair(&cf.alpha.eval(p), z);
    let zbar = sub(z, &scale(&rho, az));
    let zf: Vec<f64> = cf.frames.iter().map(|e| pair(&e.eval(p), &zbar)).collect();
    let om = (data.omega)(p);
    let omz = om.iter().zip(z).fold(DMatrix::zeros(m, m), |acc, (o, zi)| acc + o * *zi);
    let pm = (data.p)(p);
    let pz: Vec<f64> = (pm * DVector::from_column_slice(z)).iter().cloned().collect();
    let qz = pair(&(data.q)(p), z);
    let top = directional(&v.plus, z, p, h) + phi(&cf.j, &vmid, &zf) + 2.0 * vm * az;
    let omv = &omz * DVector::from_column_slice(&vmid);
    let mid: Vec<f64> =
        (0..m).map(|a| directional(&v.mid[a], z, p, h) + omv[a] - vp * pz[a] + vm * zf[a]).collect();
    let bottom = directional(&v.minus, z, p, h) + 0.5 * qz * vp + phi(&cf.j, &vmid, &pz);
    Contractor::new("conn", top, mid, bottom, 0.0)
}

/// The raised D-operator of a weight-1 scale `σ` as a contractor field.
pub fn scale_tractor(data: &ContractorConnectionData, sigma: &ChartField) -> ContractorField {
    let comp = |k: usize| {
        let (ch, cf, s) = (data.chart.clone(), data.coframe.clone(), sigma.clone());
        ChartField::scalar(move |p| {
            let d = d_operator(&ch, &cf.alpha, &s, 1.0, p).and_then(|d| d.raise(&cf, p, "s"));
            match d {
                Ok(t) => match k {
                    0 => t.v_plus,
                    1 => t.v_minus,
                    a => t.v_mid[a - 2],
                },
                Err(_) => f64::NAN,
            }
        })
    };
    let m = data.coframe.frames.len();
    ContractorField { plus: comp(0), mid: (0..m).map(|a| comp(a + 2)).collect(), minus: comp(1) }
}

/// Max over samples and chart directions of `|∇_{∂_i} D^A σ|`.
pub fn parallel_scale_check(data: &ContractorConnectionData, sigma: &ChartField, samples: &[Vec<f64>]) -> Result<f64> {
    let field = scale_tractor(data, sigma);
    let n = data.chart.dim;
    let mut worst: f64 = 0.0;
    for p in samples {
        if !(sigma.eval(p)[0] > 0.0) {
            return Err(CqError::Precondition("scale must be positive".into()));
        }
        for i in 0..n {
            let mut z = vec![0.0; n];
            z[i] = 1.0;
            worst = worst.max(connection_apply(data, &z, &field, p)?.norm());
        }
    }
    Ok(worst)
}

/// Data of the parabolic lift for `n = 1`: `Ω`, `π₁, π₂` (halves of `Υ^♯`), `χ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolicData {
    pub omega: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub chi: f64,
}

impl ParabolicData {
    pub fn trivial() -> Self {
        Self { omega: 1.0, pi1: 0.0, pi2: 0.0, chi: 0.0 }
    }

    pub fn from_rescale(d: &RescaleData) -> Result<Self> {
        if d.upsilon_sharp.len() != 2 {
            return Err(CqError::Unsupported("parabolic lift implemented for n = 1".into()));
        }
        Ok(Self { omega: d.omega, pi1: d.upsilon_sharp[0], pi2: d.upsilon_sharp[1], chi: d.chi })
    }

    /// Data with `lift(self.then_after(b)) = lift(self) ∘ lift(b)`.
    pub fn compose(&self, b: &Self) -> Self {
        let (a, w2) = (self, b.omega);
        Self {
            omega: a.omega * w2,
            pi1: b.pi1 + a.pi1 / w2,
            pi2: b.pi2 + a.pi2 / w2,
            chi: b.chi + a.chi / (w2 * w2) + 2.0 * (a.pi1 * b.pi2 - a.pi2 * b.pi1) / w2,
        }
    }
}

/// Samples `Ψ(y_i, x_k)` on a uniform rectangular grid.
#[derive(Debug, Clone)]
pub struct ParabolicWavefunction {
    pub y0: f64,
    pub hy: f64,
    pub x0: f64,
    pub hx: f64,
    pub data: DMatrix<C64>,
}

impl ParabolicWavefunction {
    pub fn from_fn(n: usize, half_width: f64, f: impl Fn(f64, f64) -> C64 + Sync) -> Self {
        let h = 2.0 * half_width / n as f64;
        let x0 = -half_width;
        let data = DMatrix::from_fn(n, n, |i, k| f(x0 + i as f64 * h, x0 + k as f64 * h));
        Self { y0: x0, hy: h, x0, hx: h, data }
    }

    pub fn y(&self, i: usize) -> f64 {
        self.y0 + i as f64 * self.hy
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.hx
    }

    pub fn norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.hx * self.hy).sqrt()
    }

    /// Max pointwise difference after rotating `self` onto the phase of
    /// `reference` at its largest-modulus sample.
    pub fn distance_up_to_phase(&self, reference: &Self) -> f64 {
        let (imax, _) = reference.data.iter().enumerate().fold((0, 0.0), |acc, (i, z)| {
            if z.norm() > acc.1 {
                (i, z.norm())
            } else {
                acc
            }
        });
        let (r, s) = (reference.data.as_slice()[imax], self.data.as_slice()[imax]);
        let rot = if s.norm() > 0.0 { (r / s) / (r / s).norm() } else { c(1.0, 0.0) };
        self.data.iter().zip(reference.data.iter()).map(|(a, b)| (a * rot - b).norm()).fold(0.0, f64::max)
    }
}

/// Trigonometric interpolant of uniform samples, zero outside the sample range.
pub struct TrigInterpolant {
    coeffs: Vec<C64>,
    x0: f64,
    h: f64,
}

impl TrigInterpolant {
    pub fn new(samples: &[C64], x0: f64, h: f64) -> Self {
        let n = samples.len();
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let inv = 1.0 / n as f64;
        Self { coeffs: buf.into_iter().map(|z| z * inv).collect(), x0, h }
    }

    pub fn eval(&self, x: f64) -> C64 {
        let n = self.coeffs.len();
        let t = (x - self.x0) / self.h;
        if t < -1e-9 || t > (n - 1) as f64 + 1e-9 {
            return c(0.0, 0.0);
        }
        let w = 2.0 * std::f64::consts::PI * t / n as f64;
        let mut acc = self.coeffs[0];
        for k in 1..n {
            let kk = if 2 * k < n { k as f64 } else if 2 * k == n { 0.0 } else { k as f64 - n as f64 };
            if 2 * k == n {
                acc += self.coeffs[k] * (std::f64::consts::PI * t).cos();
            } else {
                acc += self.coeffs[k] * C64::from_polar(1.0, kk * w);
            }
        }
        acc
    }
}

/// Largest phase gradient of the lift over the grid against `π / h`.
pub fn nyquist_margin(d: &ParabolicData, psi: &ParabolicWavefunction) -> f64 {
    let (ny, nx) = psi.data.shape();
    let ymax = psi.y(0).abs().max(psi.y(ny - 1).abs());
    let xmax = psi.x(0).abs().max(psi.x(nx - 1).abs());
    let s = d.omega * ymax;
    let gy = d.omega * ((d.chi / 2.0 + d.pi1 * d.pi2).abs() * s + d.pi2.abs() * xmax);
    let gx = d.pi2.abs() * s;
    (gy * psi.hy).max(gx * psi.hx) / std::f64::consts::PI
}

/// `Ψ(y, x) ↦ √Ω e^{−iΩy(χΩy/4 + π₂(x + Ωyπ₁/2))} Ψ(Ωy, x + Ωyπ₁)` as
/// translation, then chirp, then dilation.
pub fn parabolic_lift(d: &ParabolicData, psi: &ParabolicWavefunction) -> Result<ParabolicWavefunction> {
    let margin = nyquist_margin(d, psi);
    if margin >= 0.5 {
        return Err(CqError::Resolution(format!("phase gradient at {:.2} of the grid Nyquist bound", margin)));
    }
    if !(d.omega > 0.0) {
        return Err(CqError::InvalidArgument("Ω must be positive".into()));
    }
    let (ny, nx) = psi.data.shape();
    // translation x ↦ x + yπ₁ with the π₂ phase, row by row
    let rows: Vec<Vec<C64>> = (0..ny)
        .into_par_iter()
        .map(|i| {
            let y = psi.y(i);
            let row: Vec<C64> = (0..nx).map(|k| psi.data[(i, k)]).collect();
            let it = TrigInterpolant::new(&row, psi.x0, psi.hx);
            (0..nx)
                .map(|k| {
                    let x = psi.x(k);
                    let ph = -y * d.pi2 * (x + y * d.pi1 / 2.0) - d.chi * y * y / 4.0;
                    it.eval(x + y * d.pi1) * C64::from_polar(1.0, ph)
                })
                .collect()
        })
        .collect();
    // dilation y ↦ Ωy, column by column
    let cols: Vec<Vec<C64>> = (0..nx)
        .into_par_iter()
        .map(|k| {
            let col: Vec<C64> = (0..ny).map(|i| rows[i][k]).collect();
            let it = TrigInterpolant::new(&col, psi.y0, psi.hy);
            (0..ny).map(|i| it.eval(d.omega * psi.y(i)) * d.omega.sqrt()).collect()
        })
        .collect();
    let data = DMatrix::from_fn(ny, nx, |i, k| cols[k][i]);
    Ok(ParabolicWavefunction { data, ..psi.clone() })
}
