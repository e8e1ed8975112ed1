//! Ambient `R^5` model of the 3-sphere: coordinates `(x, y, z, w, u)`,
//! `A = λ_I + du`, homothety `X = x∂_x + y∂_y + z∂_z + w∂_w + 2u∂_u`.
//!
//! The `(+)`-mode operator `Ŝ₊` acts diagonally on a grid so that square
//! roots of `(1 + Ŝ₊)²` are plain spectral functions; `Ŝ₋ = -i√ħ ∂`. The
//! `(1,2)`-mode is a Fock space.

use std::f64::consts::SQRT_2;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use super::{s3, ModelInstance};
use crate::connection::{CheckSet, QuantumConnection};
use crate::geometry::{self, add, eval2, exterior_derivative, pair, scale, wedge11, Chart, ChartField, Coframe, Rank};
use crate::operator_core::{fock_rep, fourier_diff_matrix, identity, kron};
use crate::{c, CqError, Mat, Result, C64};

pub fn chart() -> Chart {
    Chart::new(&["x", "y", "z", "w", "u"], |p| p[..4].iter().map(|v| v * v).sum::<f64>() > 1e-12)
}

pub fn radius(p: &[f64]) -> f64 {
    p[..4].iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn linear_form(rows: [[f64; 4]; 4]) -> ChartField {
    // component i is Σ_j rows[i][j] x_j
    ChartField::new(Rank::OneForm, move |p| {
        let mut v: Vec<f64> = (0..4).map(|i| (0..4).map(|j| rows[i][j] * p[j]).sum()).collect();
        v.push(0.0);
        v
    })
    .with_deriv(move |_| {
        (0..5)
            .map(|j| {
                let mut v: Vec<f64> = (0..4).map(|i| if j < 4 { rows[i][j] } else { 0.0 }).collect();
                v.push(0.0);
                v
            })
            .collect()
    })
}

/// `λ_I = 2(x dy - y dx + z dw - w dz)`.
pub fn lambda_ii() -> ChartField {
    linear_form([[0.0, -2.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, -2.0], [0.0, 0.0, 2.0, 0.0]])
}

/// `λ_J = 2(x dz - z dx - y dw + w dy)`.
pub fn lambda_jj() -> ChartField {
    linear_form([[0.0, 0.0, -2.0, 0.0], [0.0, 0.0, 0.0, 2.0], [2.0, 0.0, 0.0, 0.0], [0.0, -2.0, 0.0, 0.0]])
}

/// `λ_K = 2(x dw - w dx + y dz - z dy)`.
pub fn lambda_kk() -> ChartField {
    linear_form([[0.0, 0.0, 0.0, -2.0], [0.0, 0.0, -2.0, 0.0], [0.0, 2.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0]])
}

pub fn du() -> ChartField {
    super::coord_form(5, 4)
}

pub fn contact_form() -> ChartField {
    let l = lambda_ii();
    let l2 = l.clone();
    ChartField::new(Rank::OneForm, move |p| {
        let mut v = l.eval(p);
        v[4] = 1.0;
        v
    })
    .with_deriv(move |p| l2.partials(p, 1e-5))
}

/// `Y = d log r`.
pub fn y_form() -> ChartField {
    ChartField::new(Rank::OneForm, |p| {
        let r2 = radius(p).powi(2);
        let mut v: Vec<f64> = p[..4].iter().map(|x| x / r2).collect();
        v.push(0.0);
        v
    })
    .with_deriv(|p| {
        let r2 = radius(p).powi(2);
        (0..5)
            .map(|j| {
                let mut v: Vec<f64> = (0..4)
                    .map(|i| {
                        if j == 4 {
                            0.0
                        } else {
                            (if i == j { 1.0 / r2 } else { 0.0 }) - 2.0 * p[i] * p[j] / (r2 * r2)
                        }
                    })
                    .collect();
                v.push(0.0);
                v
            })
            .collect()
    })
}

pub fn homothety() -> ChartField {
    ChartField::new(Rank::Vector, |p| vec![p[0], p[1], p[2], p[3], 2.0 * p[4]])
        .with_deriv(|_| (0..5).map(|j| (0..5).map(|i| if i == j { if j == 4 { 2.0 } else { 1.0 } } else { 0.0 }).collect()).collect())
}

/// Linear vector field `x ↦ M x` on the `(x, y, z, w)` block.
pub fn linear_vector(m: [[f64; 4]; 4]) -> ChartField {
    ChartField::new(Rank::Vector, move |p| {
        let mut v: Vec<f64> = (0..4).map(|i| (0..4).map(|j| m[i][j] * p[j]).sum()).collect();
        v.push(0.0);
        v
    })
    .with_deriv(move |_| {
        (0..5)
            .map(|j| {
                let mut v: Vec<f64> = (0..4).map(|i| if j < 4 { m[i][j] } else { 0.0 }).collect();
                v.push(0.0);
                v
            })
            .collect()
    })
}

/// Three rotations commuting with the homothety: the `θ1` and `θ2` circle
/// actions and a rotation mixing the two planes.
pub fn homogeneous_directions() -> Vec<(&'static str, ChartField)> {
    vec![
        ("theta1-rotation", linear_vector([[0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0; 4], [0.0; 4]])),
        ("theta2-rotation", linear_vector([[0.0; 4], [0.0; 4], [0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 0.0]])),
        ("mixing-rotation", linear_vector([[0.0, 0.0, -1.0, 0.0], [0.0, 0.0, 0.0, -1.0], [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])),
    ]
}

/// `f · r^k` with analytic derivatives.
fn times_r_pow(f: ChartField, k: f64) -> ChartField {
    let g = f.clone();
    ChartField::new(f.rank, move |p| scale(&f.eval(p), radius(p).powf(k))).with_deriv(move |p| {
        let r = radius(p);
        let v = g.eval(p);
        let d = g.partials(p, 1e-5);
        (0..5)
            .map(|j| {
                let dr = if j < 4 { k * r.powf(k - 2.0) * p[j] } else { 0.0 };
                d[j].iter().zip(&v).map(|(dv, vv)| dv * r.powf(k) + vv * dr).collect()
            })
            .collect()
    })
}

/// Frames `E^A = (2λ_I, λ_J/r, λ_K/r, Y)` in the order `(+, 1, 2, -)`.
pub fn frames() -> Vec<ChartField> {
    vec![
        times_r_pow(lambda_ii(), 0.0).pipe_scale(2.0),
        times_r_pow(lambda_jj(), -1.0),
        times_r_pow(lambda_kk(), -1.0),
        y_form(),
    ]
}

trait PipeScale {
    fn pipe_scale(self, s: f64) -> ChartField;
}

impl PipeScale for ChartField {
    fn pipe_scale(self, s: f64) -> ChartField {
        let (f, g) = (self.clone(), self);
        ChartField::new(f.rank, move |p| scale(&f.eval(p), s))
            .with_deriv(move |p| g.partials(p, 1e-5).into_iter().map(|v| scale(&v, s)).collect())
    }
}

/// `J_AB` with `dA = ½ J_AB E^A∧E^B = E^-∧E^+ + E^1∧E^2`.
pub fn pairing() -> DMatrix<f64> {
    let mut j = DMatrix::zeros(4, 4);
    j[(3, 0)] = 1.0;
    j[(0, 3)] = -1.0;
    j[(1, 2)] = 1.0;
    j[(2, 1)] = -1.0;
    j
}

pub fn coframe() -> Result<Coframe> {
    Coframe::new(contact_form(), frames(), pairing())
}

/// Entries of `Ω^A_B` as 1-form fields.
pub fn omega_fields() -> Vec<Vec<ChartField>> {
    let zero = || super::const_form(vec![0.0; 5]);
    let y = y_form();
    let neg = |f: ChartField| f.pipe_scale(-1.0);
    vec![
        vec![neg(y.clone()), times_r_pow(lambda_kk(), -1.0), neg(times_r_pow(lambda_jj(), -1.0)), lambda_ii().pipe_scale(2.0)],
        vec![zero(), zero(), times_r_pow(lambda_ii(), -2.0), times_r_pow(lambda_jj(), -1.0)],
        vec![zero(), neg(times_r_pow(lambda_ii(), -2.0)), zero(), times_r_pow(lambda_kk(), -1.0)],
        vec![zero(), zero(), zero(), y],
    ]
}

/// `max_A |dE^A + Ω^A_B∧E^B|`.
pub fn frame_parallel_residual(p: &[f64]) -> Result<f64> {
    let ch = chart();
    let es = frames();
    let om = omega_fields();
    let ev: Vec<Vec<f64>> = es.iter().map(|e| e.eval(p)).collect();
    let mut r: f64 = 0.0;
    for a in 0..4 {
        let mut tot = exterior_derivative(&ch, &es[a], p)?;
        for b in 0..4 {
            tot = add(&tot, &wedge11(&om[a][b].eval(p), &ev[b]));
        }
        r = r.max(geometry::max_abs(&tot));
    }
    Ok(r)
}

/// `F^A_B = dΩ^A_B + Ω^A_C∧Ω^C_B` as flattened 2-forms.
pub fn curvature(p: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let ch = chart();
    let om = omega_fields();
    let ov: Vec<Vec<Vec<f64>>> = om.iter().map(|row| row.iter().map(|f| f.eval(p)).collect()).collect();
    (0..4)
        .map(|a| {
            (0..4)
                .map(|b| {
                    let mut f = exterior_derivative(&ch, &om[a][b], p)?;
                    for cc in 0..4 {
                        f = add(&f, &wedge11(&ov[a][cc], &ov[cc][b]));
                    }
                    Ok(f)
                })
                .collect()
        })
        .collect()
}

/// Deviation of `F^Ξ` from `λ_J∧λ_K/r⁴` in the `(1,2)` slot (and its
/// negative in `(2,1)`, zero elsewhere).
pub fn curvature_shape_residual(p: &[f64]) -> Result<f64> {
    let f = curvature(p)?;
    let r4 = radius(p).powi(4);
    let jk = scale(&wedge11(&lambda_jj().eval(p), &lambda_kk().eval(p)), 1.0 / r4);
    let mut r: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let want = match (a, b) {
                (1, 2) => jk.clone(),
                (2, 1) => scale(&jk, -1.0),
                _ => vec![0.0; 25],
            };
            r = r.max(geometry::max_abs(&geometry::sub(&f[a][b], &want)));
        }
    }
    Ok(r)
}

/// `max |ι_X F^A_B|`.
pub fn curvature_x_residual(p: &[f64]) -> Result<f64> {
    let f = curvature(p)?;
    let x = homothety().eval(p);
    Ok(f.iter().flatten().map(|g| geometry::max_abs(&geometry::interior2(&x, g))).fold(0.0, f64::max))
}

/// `∇^Ξ I` for `I^A = (r, 0, 0, 0)`.
pub fn parallel_tractor_residual(p: &[f64]) -> Result<f64> {
    let om = omega_fields();
    let r = radius(p);
    let mut dr: Vec<f64> = p[..4].iter().map(|x| x / r).collect();
    dr.push(0.0);
    let i_a = [r, 0.0, 0.0, 0.0];
    let mut res: f64 = 0.0;
    for a in 0..4 {
        let mut tot = if a == 0 { dr.clone() } else { vec![0.0; 5] };
        for b in 0..4 {
            tot = add(&tot, &scale(&om[a][b].eval(p), i_a[b]));
        }
        res = res.max(geometry::max_abs(&tot));
    }
    Ok(res)
}

/// `|ℒ_X A - 2A|`.
pub fn homothety_residual(p: &[f64]) -> Result<f64> {
    let l = geometry::lie_derivative(&chart(), &homothety(), &contact_form(), p)?;
    Ok(geometry::max_abs(&geometry::sub(&l, &scale(&contact_form().eval(p), 2.0))))
}

/// Grid and Fock sizes for the two-mode representation.
#[derive(Debug, Clone, Copy)]
pub struct AmbientRep {
    pub grid: usize,
    pub half_width: f64,
    pub fock: usize,
    /// Width of the localized test states, in grid units of `ỹ`.
    pub sigma: f64,
    pub states: usize,
}

impl Default for AmbientRep {
    fn default() -> Self {
        Self { grid: 64, half_width: 0.3, fock: 3, sigma: 0.03, states: 4 }
    }
}

/// Operators as explicit inputs so that `Ŝ₊` can be substituted.
#[derive(Debug, Clone)]
pub struct AmbientOps {
    pub hbar: f64,
    /// Diagonal of `Ŝ₊`.
    pub sp_diag: Vec<f64>,
    pub sm: Mat,
    pub a: Mat,
    pub a_dag: Mat,
    /// Diagonal of `Ĥ = ½(Ŝ₁² + Ŝ₂²)`.
    pub h_diag: Vec<f64>,
    /// Fock level of each basis index.
    pub level: Vec<usize>,
    pub fock: usize,
    /// `Ŝ₋ + ½{Ŝ₊, Ŝ₋}`.
    pub y_op: Mat,
}

impl AmbientOps {
    pub fn dim(&self) -> usize {
        self.sp_diag.len()
    }

    pub fn build(hbar: f64, rep: &AmbientRep) -> Result<Self> {
        let f = fock_rep(rep.fock, hbar)?;
        let hh = (&f.s1 * &f.s1 + &f.s2 * &f.s2) * c(0.5, 0.0);
        let n = rep.grid;
        let h = 2.0 * rep.half_width / (n - 1) as f64;
        let ys: Vec<f64> = (0..n).map(|j| -rep.half_width + h * j as f64).collect();
        let d = fourier_diff_matrix(n, h).map(|v| c(v, 0.0));
        let idf = identity(rep.fock);
        let idg = identity(n);
        let sm = kron(&(d * c(0.0, -hbar.sqrt())), &idf);
        let sp_diag: Vec<f64> = ys.iter().flat_map(|y| std::iter::repeat(hbar.sqrt() * y).take(rep.fock)).collect();
        let h_diag: Vec<f64> = (0..n).flat_map(|_| (0..rep.fock).map(|k| hh[(k, k)].re)).collect();
        let level: Vec<usize> = (0..n).flat_map(|_| 0..rep.fock).collect();
        Ok(Self::assemble(hbar, sp_diag, sm, kron(&idg, &f.a), kron(&idg, &f.a_dag), h_diag, level, rep.fock))
    }

    /// Fock-only operators with `Ŝ₊ = ε` and `Ŝ₋ = 0`.
    pub fn substituted(hbar: f64, fock: usize, eps: f64) -> Result<Self> {
        let f = fock_rep(fock, hbar)?;
        let hh = (&f.s1 * &f.s1 + &f.s2 * &f.s2) * c(0.5, 0.0);
        let h_diag = (0..fock).map(|k| hh[(k, k)].re).collect();
        Ok(Self::assemble(hbar, vec![eps; fock], Mat::zeros(fock, fock), f.a, f.a_dag, h_diag, (0..fock).collect(), fock))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(hbar: f64, sp_diag: Vec<f64>, sm: Mat, a: Mat, a_dag: Mat, h_diag: Vec<f64>, level: Vec<usize>, fock: usize) -> Self {
        let sp = Mat::from_diagonal(&nalgebra::DVector::from_iterator(sp_diag.len(), sp_diag.iter().map(|v| c(*v, 0.0))));
        let y_op = &sm + (&sp * &sm + &sm * &sp) * c(0.5, 0.0);
        Self { hbar, sp_diag, sm, a, a_dag, h_diag, level, fock, y_op }
    }

    /// Diagonal of `√((1+Ŝ₊)² - (Ĥ + ħ/2)/(2r²))`. Negative arguments are only
    /// tolerated on the top Fock level, which the adjacent ladder operators
    /// annihilate, or at rounding level where the ladder closes.
    pub fn root_diag(&self, r: f64) -> Result<Vec<f64>> {
        self.sp_diag
            .iter()
            .zip(&self.h_diag)
            .zip(&self.level)
            .enumerate()
            .map(|(k, ((s, h), lvl))| {
                let arg = (1.0 + s).powi(2) - (h + 0.5 * self.hbar) / (2.0 * r * r);
                if arg >= 0.0 {
                    Ok(arg.sqrt())
                } else if arg > -1e-12 {
                    Ok(0.0)
                } else if *lvl + 1 == self.fock {
                    Ok(0.0)
                } else {
                    Err(CqError::Domain { level: k, value: arg })
                }
            })
            .collect()
    }

    /// `iħ Â_μ` at `p` for all five directions.
    pub fn coefficients(&self, p: &[f64]) -> Result<Vec<Mat>> {
        let n = self.dim();
        let r = radius(p);
        let root = self.root_diag(r)?;
        let li_diag: Vec<f64> = self.sp_diag.iter().zip(&self.h_diag).map(|(s, h)| (1.0 + s).powi(2) - h / (r * r)).collect();
        // A†√M and √M A by column and row scaling.
        let mut up = self.a_dag.clone();
        let mut dn = self.a.clone();
        for j in 0..n {
            for i in 0..n {
                up[(i, j)] *= root[j];
                dn[(i, j)] *= root[i];
            }
        }
        let (li, lj, lk, y) = (lambda_ii().eval(p), lambda_jj().eval(p), lambda_kk().eval(p), y_form().eval(p));
        Ok((0..5)
            .map(|mu| {
                let lam = C64::new(lk[mu], lj[mu]) / SQRT_2;
                let mut m = &up * (lam / r) + &dn * (lam.conj() / r);
                if y[mu] != 0.0 {
                    m += &self.y_op * c(y[mu], 0.0);
                }
                for k in 0..n {
                    m[(k, k)] += c(li[mu] * li_diag[k] + if mu == 4 { 1.0 } else { 0.0 }, 0.0);
                }
                m
            })
            .collect())
    }
}

/// Orthonormal localized states: Hermite functions in `ỹ` of width `σ`
/// tensored with Fock levels below the top one.
pub fn localized_states(rep: &AmbientRep) -> Mat {
    let n = rep.grid;
    let h = 2.0 * rep.half_width / (n - 1) as f64;
    let ys: Vec<f64> = (0..n).map(|j| (-rep.half_width + h * j as f64) / rep.sigma).collect();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for k in 0..rep.states {
        let hk: Vec<f64> = ys
            .iter()
            .map(|&t| {
                let (mut h0, mut h1) = (1.0, 2.0 * t);
                if k == 0 {
                    return (-t * t / 2.0).exp();
                }
                for m in 1..k {
                    let h2 = 2.0 * t * h1 - 2.0 * m as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
                h1 * (-t * t / 2.0).exp()
            })
            .collect();
        cols.push(hk);
    }
    let g = DMatrix::from_fn(n, cols.len(), |i, k| cols[k][i]);
    let q = g.qr().q();
    let total = n * rep.fock;
    let levels = rep.fock - 1;
    let mut out = Mat::zeros(total, cols.len() * levels);
    for k in 0..cols.len() {
        for l in 0..levels {
            for i in 0..n {
                out[(i * rep.fock + l, k * levels + l)] = c(q[(i, k)], 0.0);
            }
        }
    }
    out
}

pub fn connection(hbar: f64, rep: AmbientRep) -> Result<QuantumConnection> {
    let ops = Arc::new(AmbientOps::build(hbar, &rep)?);
    let dim = ops.dim();
    let k = c(0.0, -1.0 / hbar);
    // `along` asks for all five directions at one point in a row
    let last: Mutex<Option<(Vec<f64>, Arc<Vec<Mat>>)>> = Mutex::new(None);
    Ok(QuantumConnection::new(chart(), dim, hbar, CheckSet::Subspace(localized_states(&rep)), move |p, i| {
        let mut cache = last.lock().unwrap_or_else(|e| e.into_inner());
        let hit = cache.as_ref().filter(|(q, _)| q.as_slice() == p).map(|(_, v)| v.clone());
        let coeffs = match hit {
            Some(v) => v,
            None => match ops.coefficients(p) {
                Ok(v) => {
                    let v = Arc::new(v.into_iter().map(|m| m * k).collect::<Vec<_>>());
                    *cache = Some((p.to_vec(), v.clone()));
                    v
                }
                Err(_) => return Mat::from_element(dim, dim, c(f64::NAN, 0.0)),
            },
        };
        coeffs[i].clone()
    }))
}

pub fn model(hbar: f64, rep: AmbientRep) -> Result<ModelInstance> {
    Ok(ModelInstance {
        name: "s3-ambient",
        chart: chart(),
        alpha: contact_form(),
        coframe: Some(coframe()?),
        conn: connection(hbar, rep)?,
        family: Arc::new(move |h| connection(h, rep)),
    })
}

/// Points on the cone `u = 0` with `r` in `[r_lo, r_hi]`.
pub fn cone_samples(n: usize, r_lo: f64, r_hi: f64, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
            let r = rng.gen_range(r_lo..r_hi);
            let mut p: Vec<f64> = v.iter().map(|x| x * r / norm).collect();
            p.push(0.0);
            p
        })
        .collect()
}

/// Pull back of the reduced ambient coefficients to the 3-sphere chart at
/// `q`, with `Ŝ₊ = eps`.
pub fn reduced_coefficients(hbar: f64, fock: usize, eps: f64, q: &[f64]) -> Result<Vec<Mat>> {
    let ops = AmbientOps::substituted(hbar, fock, eps)?;
    let e = s3::embed(q);
    let p = [e[0], e[1], e[2], e[3], 0.0];
    let coeffs = ops.coefficients(&p)?;
    let jac = s3::embed_jacobian(q);
    let k = c(0.0, -1.0 / hbar);
    Ok((0..3)
        .map(|a| {
            let mut m = Mat::zeros(fock, fock);
            for mu in 0..4 {
                m += &coeffs[mu] * c(jac[mu][a], 0.0);
            }
            m * k
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct ReductionReport {
    pub hbar: f64,
    pub max_difference: f64,
    /// Largest pulled-back coefficient of `Y` and `du` (zero on the sphere).
    pub y_pullback: f64,
    /// Difference growth for `Ŝ₊ = ε` at `ε = 1e-3` and `1e-4`.
    pub eps_differences: (f64, f64),
}

/// Compares the reduced ambient connection on `{u = 0, r = 1}` with the
/// strict model at the same `ħ` (requires `2/ħ` integral).
pub fn reduce_to_strict(hbar: f64, samples: &[Vec<f64>]) -> Result<ReductionReport> {
    let dim = s3::exact_dim(hbar).ok_or_else(|| CqError::InvalidArgument("2/hbar must be a positive integer".into()))?;
    let strict = s3::connection(hbar, dim, false, s3::SqrtSign::Minus)?;
    let fock = dim + 1;
    let mut diff: f64 = 0.0;
    let mut y_pb: f64 = 0.0;
    let mut eps_d = (0.0f64, 0.0f64);
    for q in samples {
        let red = reduced_coefficients(hbar, fock, 0.0, q)?;
        let r1 = reduced_coefficients(hbar, fock, 1e-3, q)?;
        let r2 = reduced_coefficients(hbar, fock, 1e-4, q)?;
        for a in 0..3 {
            let s = strict.coeff(q, a);
            diff = diff.max(crate::block_max_abs(&(&red[a].view((0, 0), (dim, dim)).into_owned() - &s), dim));
            eps_d.0 = eps_d.0.max(crate::block_max_abs(&(&r1[a] - &red[a]), dim));
            eps_d.1 = eps_d.1.max(crate::block_max_abs(&(&r2[a] - &red[a]), dim));
        }
        let e = s3::embed(q);
        let p = [e[0], e[1], e[2], e[3], 0.0];
        let jac = s3::embed_jacobian(q);
        let y = y_form().eval(&p);
        for a in 0..3 {
            let tangent: Vec<f64> = (0..4).map(|mu| jac[mu][a]).chain(std::iter::once(0.0)).collect();
            y_pb = y_pb.max(pair(&y, &tangent).abs()).max(pair(&du().eval(&p), &tangent).abs());
        }
    }
    Ok(ReductionReport { hbar, max_difference: diff, y_pullback: y_pb, eps_differences: eps_d })
}

/// `|λ_I(J ∂_a) - λ_i(∂_a)|` over samples: the contact form pulls back to
/// the standard one.
pub fn pullback_residual(samples: &[Vec<f64>]) -> f64 {
    let li = s3::lambda_i();
    let mut r: f64 = 0.0;
    for q in samples {
        let e = s3::embed(q);
        let p = [e[0], e[1], e[2], e[3], 0.0];
        let lam = lambda_ii().eval(&p);
        let jac = s3::embed_jacobian(q);
        let want = li.eval(q);
        for a in 0..3 {
            let got: f64 = (0..4).map(|mu| lam[mu] * jac[mu][a]).sum();
            r = r.max((got - want[a]).abs());
        }
    }
    r
}

/// `Φ(u, v)` for the ambient Levi form.
pub fn levi(p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
    Ok(eval2(&exterior_derivative(&chart(), &contact_form(), p)?, u, v))
}
