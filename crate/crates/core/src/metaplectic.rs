//! Projective metaplectic action of Sp(2) on sampled wavefunctions.
//!
//! Free matrices act by direct quadrature of the generalized Fourier
//! transform. Lower-triangular matrices act by chirp and dilation. Phases
//! are never tracked: every comparison aligns a global phase first.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::connection::CheckSet;
use crate::contractor::TrigInterpolant;
use crate::operator_core::{commutator, fock_rep, grid_rep, HilbertRep, RepKind};
use crate::{c, CqError, Mat, Result, C64};

pub const MAX_QUADRATURE_POINTS: usize = 2048;

/// A 2×2 real matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sp2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sp2 {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    /// `J = [[0, 1], [−1, 0]]`, the matrix `S` of the shear example.
    pub const fn j() -> Self {
        Self::new(0.0, 1.0, -1.0, 0.0)
    }

    /// Shear `T = [[1, t], [0, 1]]`.
    pub const fn shear(t: f64) -> Self {
        Self::new(1.0, t, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    /// Inverse of a determinant-one matrix.
    pub fn inverse(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn apply(&self, u: [f64; 2]) -> [f64; 2] {
        [self.a * u[0] + self.b * u[1], self.c * u[0] + self.d * u[1]]
    }

    pub fn is_free(&self) -> bool {
        (self.det() - 1.0).abs() <= 1e-10 && self.b.abs() > 1e-8
    }

    pub fn product(word: &[Sp2]) -> Self {
        word.iter().fold(Self::identity(), |acc, g| acc.mul(g))
    }
}

/// A symplectic matrix with invertible upper-right block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSymplectic(Sp2);

impl FreeSymplectic {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::try_from(Sp2::new(a, b, c, d))
    }

    pub fn matrix(&self) -> Sp2 {
        self.0
    }

    /// `a_F(x, x̃) = ½(A/B)x̃² + ½(D/B)x² − x x̃/B`.
    pub fn generating_function(&self, x: f64, xt: f64) -> f64 {
        let Sp2 { a, b, d, .. } = self.0;
        0.5 * a / b * xt * xt + 0.5 * d / b * x * x - x * xt / b
    }
}

impl TryFrom<Sp2> for FreeSymplectic {
    type Error = CqError;

    fn try_from(g: Sp2) -> Result<Self> {
        if ![g.a, g.b, g.c, g.d].iter().all(|v| v.is_finite()) {
            return Err(CqError::InvalidArgument("non-finite matrix entry".into()));
        }
        if (g.det() - 1.0).abs() > 1e-10 {
            return Err(CqError::Precondition(format!("not symplectic: det = {}", g.det())));
        }
        if g.b.abs() <= 1e-8 {
            return Err(CqError::Precondition(format!("not free: B = {:e}", g.b)));
        }
        Ok(Self(g))
    }
}

/// Samples `ψ(x_k)` at `x_k = x0 + k h`, treated as one period.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub x0: f64,
    pub h: f64,
    pub samples: Vec<C64>,
}

impl GridWavefunction {
    /// `n` points on `[−half_width, half_width)`.
    pub fn from_fn(n: usize, half_width: f64, f: impl Fn(f64) -> C64) -> Self {
        let h = 2.0 * half_width / n as f64;
        let x0 = -half_width;
        Self { x0, h, samples: (0..n).map(|k| f(x0 + k as f64 * h)).collect() }
    }

    /// `e^{−(x−x_c)²/(2σ²)} e^{i k x}`.
    pub fn gaussian(n: usize, half_width: f64, center: f64, sigma: f64, k: f64) -> Self {
        Self::from_fn(n, half_width, |x| {
            let g = (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp();
            C64::from_polar(g, k * x)
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.h
    }

    pub fn with_samples(&self, samples: Vec<C64>) -> Self {
        Self { x0: self.x0, h: self.h, samples }
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| a.conj() * b).sum::<C64>() * self.h
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn scale(&self, z: C64) -> Self {
        self.with_samples(self.samples.iter().map(|v| v * z).collect())
    }

    /// `‖self − e^{iφ} reference‖ / ‖reference‖`, minimized over `φ`.
    pub fn distance_up_to_phase(&self, reference: &Self) -> f64 {
        let ov = reference.inner(self);
        let rot = if ov.norm() > 0.0 { ov / ov.norm() } else { c(1.0, 0.0) };
        let diff: f64 = self.samples.iter().zip(&reference.samples).map(|(a, b)| (a - b * rot).norm_sqr()).sum();
        (diff * self.h).sqrt() / reference.norm()
    }

    /// Angular frequencies of the FFT bins.
    fn frequencies(&self) -> Vec<f64> {
        let n = self.len();
        let period = n as f64 * self.h;
        (0..n)
            .map(|k| {
                let kk = if 2 * k < n { k as f64 } else if 2 * k == n { 0.0 } else { k as f64 - n as f64 };
                2.0 * PI * kk / period
            })
            .collect()
    }

    /// Applies the Fourier multiplier `m(k)` spectrally.
    pub fn fourier_multiply(&self, m: impl Fn(f64) -> C64) -> Self {
        let n = self.len();
        let mut planner = FftPlanner::new();
        let mut buf = self.samples.clone();
        planner.plan_fft_forward(n).process(&mut buf);
        for (z, k) in buf.iter_mut().zip(self.frequencies()) {
            *z *= m(k);
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        let inv = 1.0 / n as f64;
        // the global offset x0 only contributes a phase that cancels
        self.with_samples(buf.into_iter().map(|z| z * inv).collect())
    }

    /// Spectral `∂_x`.
    pub fn derivative(&self) -> Self {
        self.fourier_multiply(|k| c(0.0, k))
    }

    /// Smallest frequency below which all but `1e−24` of the spectral
    /// energy lies.
    pub fn bandwidth(&self) -> f64 {
        let n = self.len();
        let mut buf = self.samples.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let mut e: Vec<(f64, f64)> = self.frequencies().into_iter().zip(buf.iter().map(|z| z.norm_sqr())).collect();
        e.sort_by(|a, b| b.0.abs().partial_cmp(&a.0.abs()).unwrap());
        let total: f64 = e.iter().map(|p| p.1).sum();
        let mut tail = 0.0;
        for (k, w) in &e {
            tail += w;
            if tail > 1e-24 * total {
                return k.abs();
            }
        }
        0.0
    }

    /// Half-width of the region outside which `|ψ| < 1e−12 max|ψ|`, about the origin.
    pub fn support_radius(&self) -> f64 {
        let peak = self.samples.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        (0..self.len())
            .filter(|&k| self.samples[k].norm() >= 1e-12 * peak)
            .map(|k| self.x(k).abs())
            .fold(0.0, f64::max)
    }
}

/// Largest integrand frequency plus the bandwidth of `ψ`, as a fraction of
/// the sampling frequency `2π/h`. Quadrature is trusted below 1.
pub fn quadrature_margin(f: &FreeSymplectic, psi: &GridWavefunction) -> f64 {
    let Sp2 { a, b, .. } = f.matrix();
    let n = psi.len();
    let xmax = psi.x(0).abs().max(psi.x(n - 1).abs());
    let r = psi.support_radius();
    let k = (a / b).abs() * r + xmax / b.abs();
    (k + psi.bandwidth()) * psi.h / (2.0 * PI)
}

/// `(2π)^{−1/2} |B|^{−1/2} Σ_j e^{i a_F(x, x̃_j)} ψ(x̃_j) h`, on the same grid.
pub fn free_metaplectic_apply(f: &FreeSymplectic, psi: &GridWavefunction) -> Result<GridWavefunction> {
    let n = psi.len();
    if n < 8 || n > MAX_QUADRATURE_POINTS {
        return Err(CqError::InvalidArgument(format!("grid size {n}")));
    }
    let margin = quadrature_margin(f, psi);
    if margin >= 1.0 {
        return Err(CqError::Resolution(format!("integrand frequency at {margin:.2} of the sampling rate")));
    }
    let pref = psi.h / (2.0 * PI * f.matrix().b.abs()).sqrt();
    let live: Vec<(f64, C64)> = (0..n).filter(|&j| psi.samples[j] != c(0.0, 0.0)).map(|j| (psi.x(j), psi.samples[j])).collect();
    let out: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let x = psi.x(k);
            let s: C64 = live.iter().map(|&(xt, v)| C64::from_polar(1.0, f.generating_function(x, xt)) * v).sum();
            s * pref
        })
        .collect();
    Ok(psi.with_samples(out))
}

/// Action of `[[a, 0], [c, 1/a]]`: `ψ ↦ |a|^{−1/2} e^{i(c/a)y²/2} ψ(y/a)`.
pub fn lower_triangular_apply(g: &Sp2, psi: &GridWavefunction) -> Result<GridWavefunction> {
    if g.b.abs() > 1e-12 || (g.det() - 1.0).abs() > 1e-10 {
        return Err(CqError::Precondition("matrix is not lower triangular symplectic".into()));
    }
    let a = g.a;
    let chirp = g.c / a;
    let n = psi.len();
    let resampled: Vec<C64> = if (a - 1.0).abs() < 1e-15 {
        psi.samples.clone()
    } else {
        let interp = TrigInterpolant::new(&psi.samples, psi.x0, psi.h);
        (0..n).into_par_iter().map(|k| interp.eval(psi.x(k) / a)).collect()
    };
    let amp = a.abs().sqrt().recip();
    let out = resampled.into_iter().enumerate().map(|(k, v)| {
        let y = psi.x(k);
        v * C64::from_polar(amp, 0.5 * chirp * y * y)
    });
    Ok(psi.with_samples(out.collect()))
}

/// Free matrices by quadrature, lower-triangular ones by chirp and dilation.
pub fn metaplectic_apply(g: &Sp2, psi: &GridWavefunction) -> Result<GridWavefunction> {
    if g.b.abs() > 1e-8 {
        free_metaplectic_apply(&FreeSymplectic::try_from(*g)?, psi)
    } else {
        lower_triangular_apply(g, psi)
    }
}

/// Applies a word `g₁g₂⋯g_k` right to left.
pub fn word_apply(word: &[Sp2], psi: &GridWavefunction) -> Result<GridWavefunction> {
    word.iter().rev().try_fold(psi.clone(), |acc, g| metaplectic_apply(g, &acc))
}

fn inverse_word(word: &[Sp2]) -> Vec<Sp2> {
    word.iter().rev().map(Sp2::inverse).collect()
}

/// `‖𝓛_{F1} 𝓛_{F2} ψ − e^{iφ} 𝓜(F1F2) ψ‖ / ‖ψ‖` with the best `φ`.
pub fn compose_up_to_phase(f1: &FreeSymplectic, f2: &FreeSymplectic, psi: &GridWavefunction) -> Result<f64> {
    let two_step = free_metaplectic_apply(f1, &free_metaplectic_apply(f2, psi)?)?;
    let direct = metaplectic_apply(&f1.matrix().mul(&f2.matrix()), psi)?;
    Ok(two_step.distance_up_to_phase(&direct))
}

/// `s(u)ψ = u²·yψ + u¹·(1/i)∂_yψ`.
pub fn heisenberg_apply(u: [f64; 2], psi: &GridWavefunction) -> GridWavefunction {
    let d = psi.derivative();
    let out = (0..psi.len()).map(|k| psi.samples[k] * (u[1] * psi.x(k)) + d.samples[k] * c(0.0, -u[0])).collect();
    psi.with_samples(out)
}

/// Action on `u` under which `𝓜(g) s(u) 𝓜(g)⁻¹ = s(g⋆u)` for the
/// convention of [`heisenberg_apply`]: `g⋆ = R g R`, `R = diag(1, −1)`.
pub fn heisenberg_action(g: &Sp2, u: [f64; 2]) -> [f64; 2] {
    Sp2::new(g.a, -g.b, -g.c, g.d).apply(u)
}

/// Phase-aligned residual of `𝓜(g) s(u) 𝓜(g⁻¹) ψ` against `s(g⋆u) ψ`,
/// `g` given as a word of free or lower-triangular factors.
pub fn conjugation_check(word: &[Sp2], u: [f64; 2], psi: &GridWavefunction) -> Result<f64> {
    conjugation_check_with(word, u, psi, heisenberg_action)
}

/// As [`conjugation_check`] with a caller-supplied action on `u`.
pub fn conjugation_check_with(
    word: &[Sp2],
    u: [f64; 2],
    psi: &GridWavefunction,
    action: impl Fn(&Sp2, [f64; 2]) -> [f64; 2],
) -> Result<f64> {
    let g = Sp2::product(word);
    let back = word_apply(&inverse_word(word), psi)?;
    let lhs = word_apply(word, &heisenberg_apply(u, &back))?;
    let rhs = heisenberg_apply(action(&g, u), psi);
    Ok(lhs.distance_up_to_phase(&rhs))
}

/// Quadratic generators built from `s₊ = y` and `s₋ = ∂_y` (or their Fock
/// images with `[s₋, s₊] = 1`).
#[derive(Debug, Clone)]
pub struct Sp2Generators {
    pub m_pp: Mat,
    pub m_mm: Mat,
    pub m_pm: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sp2Residuals {
    /// `[m₋₋, m₊₊] − 2m₊₋`
    pub mm_pp: f64,
    /// `[m₊₋, m₊₊] − 4m₊₊`
    pub pm_pp: f64,
    /// `[m₊₋, m₋₋] + 4m₋₋`
    pub pm_mm: f64,
}

impl Sp2Residuals {
    pub fn max(&self) -> f64 {
        self.mm_pp.max(self.pm_pp).max(self.pm_mm)
    }
}

pub fn sp2_generators(rep: &HilbertRep) -> Result<Sp2Generators> {
    let (sp, sm) = match rep.kind {
        RepKind::Fock => {
            let f = fock_rep(rep.dim, rep.hbar)?;
            let r = rep.hbar.sqrt();
            (f.s2.unscale(r), f.s1 * c(0.0, 1.0 / r))
        }
        RepKind::Grid { x_min, x_max } => {
            let g = grid_rep(rep.dim, rep.hbar, x_min, x_max)?;
            (g.position, g.deriv.map(|v| c(v, 0.0)))
        }
    };
    Ok(Sp2Generators { m_pp: &sp * &sp, m_mm: &sm * &sm, m_pm: &sp * &sm + &sm * &sp })
}

impl Sp2Generators {
    pub fn residuals(&self, check: &CheckSet) -> Result<Sp2Residuals> {
        let r1 = commutator(&self.m_mm, &self.m_pp)? - &self.m_pm * c(2.0, 0.0);
        let r2 = commutator(&self.m_pm, &self.m_pp)? - &self.m_pp * c(4.0, 0.0);
        let r3 = commutator(&self.m_pm, &self.m_mm)? + &self.m_mm * c(4.0, 0.0);
        Ok(Sp2Residuals { mm_pp: check.norm(&r1), pm_pp: check.norm(&r2), pm_mm: check.norm(&r3) })
    }
}

/// Projected central-difference derivative of `t ↦ 𝓛_{T(t)}ψ` at `t = 0`
/// against `(i/2) m₋₋ ψ = (i/2)∂²ψ`, fourth order in `step`.
///
/// Each sample is phase-aligned to `ψ`, and both sides are compared on the
/// complement of `ψ`, which removes the untracked phase.
pub fn shear_linearization_residual(psi: &GridWavefunction, step: f64, sign: f64) -> Result<f64> {
    let aligned = |t: f64| -> Result<GridWavefunction> {
        let out = free_metaplectic_apply(&FreeSymplectic::try_from(Sp2::shear(t))?, psi)?;
        let ov = psi.inner(&out);
        Ok(out.scale(ov.conj() / ov.norm()))
    };
    let pts = [2.0 * step, step, -step, -2.0 * step];
    let w = [-1.0, 8.0, -8.0, 1.0];
    let mut fd = vec![c(0.0, 0.0); psi.len()];
    for (t, wt) in pts.iter().zip(w) {
        let s = aligned(*t)?;
        for (acc, v) in fd.iter_mut().zip(&s.samples) {
            *acc += v * (wt / (12.0 * step));
        }
    }
    let d2 = psi.derivative().derivative();
    let expect = d2.scale(c(0.0, 0.5 * sign));
    let project = |v: &GridWavefunction| {
        let ov = psi.inner(v) / psi.inner(psi).re;
        v.with_samples(v.samples.iter().zip(&psi.samples).map(|(a, p)| a - p * ov).collect())
    };
    let (a, b) = (project(&psi.with_samples(fd)), project(&expect));
    let diff: f64 = a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * psi.h;
    Ok(diff.sqrt() / b.norm())
}
