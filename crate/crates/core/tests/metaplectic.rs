use contactq::connection::CheckSet;
use contactq::metaplectic::*;
use contactq::operator_core::HilbertRep;
use contactq::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gauss() -> GridWavefunction {
    GridWavefunction::gaussian(1024, 20.0, 0.0, 1.0, 0.0)
}

fn random_free(rng: &mut ChaCha8Rng) -> Sp2 {
    let b = rng.gen_range(0.6..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let a = rng.gen_range(-1.0..1.0);
    let d = rng.gen_range(-1.0..1.0);
    Sp2::new(a, b, (a * d - 1.0) / b, d)
}

#[test]
fn free_symplectic_validation() {
    assert!(FreeSymplectic::new(0.0, 1.0, -1.0, 0.0).is_ok());
    assert!(FreeSymplectic::new(1.0, 0.0, 0.3, 1.0).is_err());
    assert!(FreeSymplectic::new(1.0, 1.0, 1.0, 1.0).is_err());
    assert!(FreeSymplectic::new(f64::NAN, 1.0, -1.0, 0.0).is_err());
    let f = FreeSymplectic::try_from(Sp2::shear(0.5)).unwrap();
    assert!((f.generating_function(1.0, 0.2) - 0.64).abs() < 1e-14);
}

#[test]
fn fourier_transform_fixes_gaussian() {
    let psi = gauss();
    let j = FreeSymplectic::try_from(Sp2::j()).unwrap();
    let out = free_metaplectic_apply(&j, &psi).unwrap();
    assert!(out.distance_up_to_phase(&psi) < 1e-6);
    // with these normalizations the prefactor makes J exact, not just projective
    let direct: f64 = out.samples.iter().zip(&psi.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(direct < 1e-10, "{direct}");
}

#[test]
fn fourier_transform_of_shifted_gaussian() {
    // ∫ e^{−iyỹ} e^{−(ỹ−c)²/2} dỹ / √(2π) = e^{−icy} e^{−y²/2}
    let psi = GridWavefunction::gaussian(1024, 20.0, 1.5, 1.0, 0.0);
    let j = FreeSymplectic::try_from(Sp2::j()).unwrap();
    let out = free_metaplectic_apply(&j, &psi).unwrap();
    let oracle = GridWavefunction::gaussian(1024, 20.0, 0.0, 1.0, -1.5);
    assert!(out.distance_up_to_phase(&oracle) < 1e-9);
}

#[test]
fn fourth_power_of_j_is_identity() {
    let psi = GridWavefunction::gaussian(1024, 20.0, 0.7, 1.3, 0.4);
    let j = Sp2::j();
    let out = word_apply(&[j, j, j, j], &psi).unwrap();
    assert!(out.distance_up_to_phase(&psi) < 1e-5);
    let two = word_apply(&[j, j], &psi).unwrap();
    let parity = psi.with_samples((0..psi.len()).map(|k| {
        let y = -psi.x(k);
        let g = (-(y - 0.7f64).powi(2) / (2.0 * 1.69)).exp();
        C64::from_polar(g, 0.4 * y)
    }).collect());
    assert!(two.distance_up_to_phase(&parity) < 1e-6);
}

#[test]
fn shear_matches_spectral_propagator() {
    for &t in &[0.3, 1.0, -0.7] {
        let psi = GridWavefunction::gaussian(1024, 20.0, -1.0, 0.8, 1.2);
        let f = FreeSymplectic::try_from(Sp2::shear(t)).unwrap();
        let quad = free_metaplectic_apply(&f, &psi).unwrap();
        let oracle = psi.fourier_multiply(|k| C64::from_polar(1.0, -0.5 * t * k * k));
        assert!(quad.distance_up_to_phase(&oracle) < 1e-6, "t={t}");
    }
}

#[test]
fn nyquist_violation_is_reported() {
    let psi = GridWavefunction::gaussian(256, 20.0, 0.0, 1.0, 0.0);
    let f = FreeSymplectic::try_from(Sp2::shear(0.05)).unwrap();
    assert!(quadrature_margin(&f, &psi) >= 1.0);
    assert!(matches!(free_metaplectic_apply(&f, &psi), Err(contactq::CqError::Resolution(_))));
}

#[test]
fn sts_identity() {
    let t = 0.3;
    let s = Sp2::j();
    let f1 = FreeSymplectic::try_from(s.inverse().mul(&Sp2::shear(t))).unwrap();
    let f2 = FreeSymplectic::try_from(s).unwrap();
    let psi = gauss();
    assert!(compose_up_to_phase(&f1, &f2, &psi).unwrap() < 1e-5);
    let two = free_metaplectic_apply(&f1, &free_metaplectic_apply(&f2, &psi).unwrap()).unwrap();
    let chirp = psi.with_samples((0..psi.len()).map(|k| psi.samples[k] * C64::from_polar(1.0, -0.15 * psi.x(k).powi(2))).collect());
    assert!(two.distance_up_to_phase(&chirp) < 1e-5);
    // the opposite chirp is far away
    let wrong = psi.with_samples((0..psi.len()).map(|k| psi.samples[k] * C64::from_polar(1.0, 0.15 * psi.x(k).powi(2))).collect());
    assert!(two.distance_up_to_phase(&wrong) > 0.1);
}

#[test]
fn vanishing_shear_composes_to_identity() {
    let s = Sp2::j();
    let psi = gauss();
    for &t in &[0.0, 1e-6] {
        let f1 = FreeSymplectic::try_from(s.inverse().mul(&Sp2::shear(t))).unwrap();
        let f2 = FreeSymplectic::try_from(s).unwrap();
        assert!(compose_up_to_phase(&f1, &f2, &psi).unwrap() < 1e-7, "t={t}");
    }
}

#[test]
fn random_free_pairs_compose() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let psi = GridWavefunction::gaussian(1024, 20.0, 0.5, 1.0, -0.3);
    let mut done = 0;
    while done < 6 {
        let (g1, g2) = (random_free(&mut rng), random_free(&mut rng));
        let prod = g1.mul(&g2);
        if prod.b.abs() < 0.5 {
            continue;
        }
        let r = compose_up_to_phase(&g1.try_into().unwrap(), &g2.try_into().unwrap(), &psi).unwrap();
        assert!(r < 1e-4, "{g1:?} {g2:?} {r}");
        done += 1;
    }
}

#[test]
fn lower_triangular_dilation() {
    // [[2, 0], [0, ½]] sends ψ(y) to ψ(y/2)/√2
    let psi = GridWavefunction::gaussian(1024, 20.0, 0.0, 1.0, 0.0);
    let out = lower_triangular_apply(&Sp2::new(2.0, 0.0, 0.0, 0.5), &psi).unwrap();
    let oracle = GridWavefunction::gaussian(1024, 20.0, 0.0, 2.0, 0.0).scale(C64::new(0.5f64.sqrt(), 0.0));
    let err: f64 = out.samples.iter().zip(&oracle.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
    assert!((out.norm() - psi.norm()).abs() < 1e-9);
    assert!(lower_triangular_apply(&Sp2::shear(1.0), &psi).is_err());
}

#[test]
fn conjugation_by_identity_word() {
    let psi = gauss();
    assert!(conjugation_check(&[], [0.3, -1.1], &psi).unwrap() < 1e-12);
}

#[test]
fn fourier_conjugation_of_position() {
    let psi = GridWavefunction::gaussian(1024, 20.0, 0.4, 1.0, 0.2);
    let e_plus = [0.0, 1.0];
    assert!(conjugation_check(&[Sp2::j()], e_plus, &psi).unwrap() < 1e-5);
    assert!(conjugation_check(&[Sp2::j()], [1.0, 0.0], &psi).unwrap() < 1e-5);
}

#[test]
fn random_conjugations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let psi = GridWavefunction::gaussian(1024, 20.0, 0.3, 1.0, 0.5);
    for _ in 0..10 {
        let g = random_free(&mut rng);
        let u = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let r = conjugation_check(&[g], u, &psi).unwrap();
        assert!(r < 1e-4, "{g:?} {u:?} {r}");
    }
}

#[test]
fn conjugation_with_plain_action_fails() {
    // s(u) = u²y + u¹(1/i)∂ pairs with R g R, not g itself
    let psi = GridWavefunction::gaussian(1024, 20.0, 0.3, 1.0, 0.5);
    let g = Sp2::shear(0.8);
    let r = conjugation_check_with(&[g], [0.2, 1.0], &psi, |g, u| g.apply(u)).unwrap();
    assert!(r > 0.1, "{r}");
}

#[test]
fn sp2_algebra_fock() {
    for &hbar in &[1.0, 0.5] {
        let g = sp2_generators(&HilbertRep::fock(32, hbar).unwrap()).unwrap();
        let r = g.residuals(&CheckSet::Block(28)).unwrap();
        assert!(r.mm_pp < 1e-10, "{r:?}");
        assert!(r.max() < 1e-10, "{r:?}");
    }
}

#[test]
fn sp2_algebra_grid() {
    let rep = HilbertRep::grid(512, 1.0, -12.0, 12.0).unwrap();
    let g = sp2_generators(&rep).unwrap();
    let xs = rep.points();
    let psi = contactq::Mat::from_fn(512, 1, |k, _| C64::new((-xs[k] * xs[k] / 2.0).exp(), 0.0));
    let r = g.residuals(&CheckSet::Subspace(psi)).unwrap();
    assert!(r.max() < 1e-6, "{r:?}");
}

#[test]
fn shear_linearization() {
    let psi = GridWavefunction::gaussian(2048, 10.0, 0.5, 1.0, 0.3);
    let r = shear_linearization_residual(&psi, 0.03, 1.0).unwrap();
    assert!(r < 1e-4, "{r}");
    let wrong = shear_linearization_residual(&psi, 0.03, -1.0).unwrap();
    assert!(wrong > 0.5, "{wrong}");
}

#[test]
fn norm_preserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let g = random_free(&mut rng);
        let psi = GridWavefunction::gaussian(1024, 20.0, rng.gen_range(-2.0..2.0), rng.gen_range(0.7..1.5), rng.gen_range(-1.0..1.0));
        let out = metaplectic_apply(&g, &psi).unwrap();
        assert!((out.norm() / psi.norm() - 1.0).abs() < 1e-5);
    }
}

#[test]
fn deterministic() {
    let g = FreeSymplectic::new(0.3, 1.1, (0.3 * 0.4 - 1.0) / 1.1, 0.4).unwrap();
    let psi = gauss();
    assert_eq!(free_metaplectic_apply(&g, &psi).unwrap(), free_metaplectic_apply(&g, &psi).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn global_phase_does_not_matter(phase in 0.0..std::f64::consts::TAU, t in 0.2f64..1.0) {
        let psi = GridWavefunction::gaussian(512, 16.0, 0.0, 1.0, 0.0);
        let rot = C64::from_polar(1.0, phase);
        let s = Sp2::j();
        let f1 = FreeSymplectic::try_from(s.inverse().mul(&Sp2::shear(t))).unwrap();
        let f2 = FreeSymplectic::try_from(s).unwrap();
        let a = compose_up_to_phase(&f1, &f2, &psi).unwrap();
        let b = compose_up_to_phase(&f1, &f2, &psi.scale(rot)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let c1 = conjugation_check(&[f1.matrix()], [0.4, 0.9], &psi).unwrap();
        let c2 = conjugation_check(&[f1.matrix()], [0.4, 0.9], &psi.scale(rot)).unwrap();
        prop_assert!((c1 - c2).abs() < 1e-12);
    }

    #[test]
    fn quadrature_is_unitary(a in -1.0f64..1.0, d in -1.0f64..1.0, b in 0.7f64..1.4, x0 in -2.0f64..2.0) {
        let g = Sp2::new(a, b, (a * d - 1.0) / b, d);
        let psi = GridWavefunction::gaussian(1024, 20.0, x0, 1.0, 0.0);
        let out = metaplectic_apply(&g, &psi).unwrap();
        prop_assert!((out.norm() / psi.norm() - 1.0).abs() < 1e-5);
    }
}
