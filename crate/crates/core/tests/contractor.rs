use std::f64::consts::PI;

use contactq::contractor::*;
use contactq::geometry::{ChartField, Coframe, Rank};
use contactq::models::contactization::{self as ctz, Base};
use contactq::models::{darboux, r3, sample_box};
use contactq::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn j1() -> DMatrix<f64> {
    Coframe::standard_j(1)
}

fn sl2(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a: f64 = rng.gen_range(0.5..1.5);
    let (b, cc): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    DMatrix::from_row_slice(2, 2, &[a, b, cc, (1.0 + b * cc) / a])
}

fn r3_frame_vectors(p: &[f64]) -> DMatrix<f64> {
    let dual = r3::coframe().unwrap().dual(p).unwrap();
    dual.columns(1, 2).into_owned()
}

fn scaled_form(f: ChartField, s: ChartField) -> ChartField {
    ChartField::new(Rank::OneForm, move |p| {
        let k = s.eval(p)[0];
        f.eval(p).iter().map(|v| v * k).collect()
    })
}

fn omega1() -> ChartField {
    ChartField::scalar(|p| p[2].exp())
}

fn omega2() -> ChartField {
    ChartField::scalar(|p| (p[0] * p[0] / 4.0).exp())
}

fn random_contractor(rng: &mut ChaCha8Rng, weight: f64) -> Contractor {
    Contractor::new(
        "a",
        rng.gen_range(-2.0..2.0),
        vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
        rng.gen_range(-2.0..2.0),
        weight,
    )
    .unwrap()
}

struct Cocycle {
    step1: RescaleData,
    step2: RescaleData,
    composite: RescaleData,
}

/// Rescales by `Ω₁ = e^z` then by `Ω₂ = e^{r²/4}` relative to `Ω₁²α`,
/// against the single rescale by `Ω₁Ω₂`.
fn cocycle_data(p: &[f64], m1: DMatrix<f64>, m2: DMatrix<f64>) -> Cocycle {
    let (ch, alpha) = (r3::chart(), r3::alpha());
    let e = r3_frame_vectors(p);
    let (o1, o2) = (omega1(), omega2());
    let step1 = RescaleData::at_point(&ch, &alpha, &e, &o1, m1.clone(), j1(), p).unwrap();
    let sq = o1.clone();
    let alpha1 = scaled_form(alpha.clone(), ChartField::scalar(move |q| sq.eval(q)[0].powi(2)));
    let e1 = &e * m1.clone().try_inverse().unwrap() / o1.eval(p)[0];
    let step2 = RescaleData::at_point(&ch, &alpha1, &e1, &o2, m2.clone(), j1(), p).unwrap();
    let prod = ChartField::scalar(move |q| o1.eval(q)[0] * o2.eval(q)[0]);
    let composite = RescaleData::at_point(&ch, &alpha, &e, &prod, m2 * m1, j1(), p).unwrap();
    Cocycle { step1, step2, composite }
}

#[test]
fn trivial_rescale_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = random_contractor(&mut rng, 0.7);
    let out = rescale_contractor(&v, &RescaleData::trivial(j1())).unwrap();
    assert_eq!(out.distance(&v), 0.0);
}

#[test]
fn canonical_tractor_is_invariant() {
    let x = Contractor::canonical("a", 2);
    assert_eq!((x.v_plus, x.v_minus, x.weight), (0.0, 1.0, 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = RescaleData::new(1.7, vec![0.3, -0.4], 0.9, sl2(&mut rng), j1()).unwrap();
    let y = rescale_contractor(&x, &d).unwrap();
    assert!(y.distance(&x) < 1e-15, "{y:?}");
}

#[test]
fn rescale_rejects_bad_data() {
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
    assert!(RescaleData::new(1.0, vec![0.0; 2], 0.0, m, j1()).is_err());
    assert!(RescaleData::new(-1.0, vec![0.0; 2], 0.0, DMatrix::identity(2, 2), j1()).is_err());
    assert!(Contractor::new("a", f64::NAN, vec![0.0; 2], 0.0, 0.0).is_err());
}

#[test]
fn cocycle_on_r3() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = [rng.gen_range(0.5..2.0), rng.gen_range(-PI..PI), rng.gen_range(-1.0..1.0)];
        let d = cocycle_data(&p, sl2(&mut rng), sl2(&mut rng));
        let w = [0.0, 1.0, -1.0, 0.5][rng.gen_range(0..4)];
        let v = random_contractor(&mut rng, w);
        let two = rescale_contractor(&rescale_contractor(&v, &d.step1).unwrap(), &d.step2).unwrap();
        let one = rescale_contractor(&v, &d.composite).unwrap();
        worst = worst.max(two.distance(&one));
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn pairing_examples() {
    let u = Contractor::new("a", 1.0, vec![0.0, 0.0], 0.0, 1.0).unwrap();
    let v = Contractor::new("a", 0.0, vec![0.0, 0.0], 1.0, -1.0).unwrap();
    let d = pairing_j(&u, &v, &j1()).unwrap();
    assert_eq!((d.value, d.weight), (1.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w = random_contractor(&mut rng, 0.3);
    assert_eq!(pairing_j(&w, &w, &j1()).unwrap().value, 0.0);
    let other = Contractor { scale: "b".into(), ..w.clone() };
    assert!(pairing_j(&w, &other, &j1()).is_err());
}

#[test]
fn pairing_invariant_under_rescale() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = [rng.gen_range(0.5..2.0), rng.gen_range(-PI..PI), rng.gen_range(-1.0..1.0)];
        let d = cocycle_data(&p, sl2(&mut rng), sl2(&mut rng)).composite;
        let (u, v) = (random_contractor(&mut rng, 0.5), random_contractor(&mut rng, -1.0));
        let before = pairing_j(&u, &v, &j1()).unwrap().rescale(d.omega);
        let after = pairing_j(&rescale_contractor(&u, &d).unwrap(), &rescale_contractor(&v, &d).unwrap(), &j1()).unwrap();
        worst = worst.max((before.value - after.value).abs());
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn d_operator_examples() {
    let (ch, alpha) = (r3::chart(), r3::alpha());
    let p = [1.3, 0.4, -0.2];
    let d = d_operator(&ch, &alpha, &ChartField::scalar(|_| 2.5), 0.0, &p).unwrap();
    assert!(d.top.abs() < 1e-12 && d.bottom == 0.0 && d.middle_form.iter().all(|v| v.abs() < 1e-12));
    let d = d_operator(&ch, &alpha, &ChartField::scalar(|q| q[2]), 0.0, &p).unwrap();
    assert!((d.top + 0.5).abs() < 1e-9, "{d:?}");
    let want = [0.0, 0.5 * p[0] * p[0], 0.0];
    assert!(d.middle_form.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-9), "{d:?}");
    assert_eq!(d.bottom, 0.0);
    let d = d_operator(&ch, &alpha, &ChartField::scalar(|_| 2.5), 1.5, &p).unwrap();
    assert!((d.bottom - 3.75).abs() < 1e-15 && d.weight == 0.5);
}

#[test]
fn d_operator_is_covariant() {
    let (ch, alpha) = (r3::chart(), r3::alpha());
    let cf = r3::coframe().unwrap();
    let nu = ChartField::scalar(|q| (q[2] + 0.3 * q[1].sin()) * q[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let p = [rng.gen_range(0.5..2.0), rng.gen_range(-PI..PI), rng.gen_range(-1.0..1.0)];
        let w: f64 = rng.gen_range(-1.0..2.0);
        let om = omega2();
        let d = RescaleData::at_point(&ch, &alpha, &r3_frame_vectors(&p), &om, DMatrix::identity(2, 2), j1(), &p).unwrap();
        let lhs = rescale_contractor(&d_operator(&ch, &alpha, &nu, w, &p).unwrap().raise(&cf, &p, "a").unwrap(), &d).unwrap();
        let (o2, o3, o4, n2) = (om.clone(), om.clone(), om.clone(), nu.clone());
        let alpha2 = scaled_form(alpha.clone(), ChartField::scalar(move |q| o2.eval(q)[0].powi(2)));
        let frames2 = cf.frames.iter().cloned().map(|e| scaled_form(e, o3.clone())).collect();
        let cf2 = Coframe::new(alpha2.clone(), frames2, j1()).unwrap();
        let nu2 = ChartField::scalar(move |q| o4.eval(q)[0].powf(w) * n2.eval(q)[0]);
        let rhs = d_operator(&ch, &alpha2, &nu2, w, &p).unwrap().raise(&cf2, &p, "a'").unwrap();
        assert!(lhs.distance(&rhs) < 1e-7, "{lhs:?} {rhs:?}");
    }
}

#[test]
fn connection_apply_examples() {
    let data = ContractorConnectionData::from_levi(r3::chart(), r3::coframe().unwrap());
    let p = [1.2, 0.3, 0.1];
    let x = ContractorField::constant(0.0, vec![0.0, 0.0], 1.0);
    let z = [0.3, -0.7, 0.5];
    let out = connection_apply(&data, &z, &x, &p).unwrap();
    let az: f64 = r3::alpha().eval(&p).iter().zip(&z).map(|(a, b)| a * b).sum();
    assert!((out.v_plus - 2.0 * az).abs() < 1e-12);
    // z̄ = z − α(z)ρ in frame components (dr, r dθ)
    let rho = r3::reeb();
    let zbar: Vec<f64> = z.iter().zip(&rho).map(|(a, b)| a - az * b).collect();
    assert!((out.v_mid[0] - zbar[0]).abs() < 1e-9 && (out.v_mid[1] - p[0] * zbar[1]).abs() < 1e-9, "{out:?}");
    assert!(out.v_minus.abs() < 1e-12);
    // a distribution vector
    let zd = [0.4, 0.0, 0.0];
    let out = connection_apply(&data, &zd, &x, &p).unwrap();
    assert!(out.v_plus.abs() < 1e-12 && (out.v_mid[0] - 0.4).abs() < 1e-12 && out.v_mid[1].abs() < 1e-12);
    let bad = ContractorField::constant(0.0, vec![0.0], 1.0);
    assert!(connection_apply(&data, &z, &bad, &p).is_err());
}

#[test]
fn scale_tractors() {
    let one = ChartField::scalar(|_| 1.0);
    let dd = ContractorConnectionData::from_levi(darboux::chart(1), darboux::coframe(1).unwrap());
    let samples = sample_box(&dd.chart, &[-1.0; 3], &[1.0; 3], 10, 7);
    assert!(parallel_scale_check(&dd, &one, &samples).unwrap() < 1e-9);
    let rd = ContractorConnectionData::from_levi(r3::chart(), r3::coframe().unwrap());
    let rs = sample_box(&rd.chart, &[0.5, -PI, -1.0], &[2.0, PI, 1.0], 10, 8);
    assert!(parallel_scale_check(&rd, &one, &rs).unwrap() < 1e-8);
    // Q ≠ 0 is detected through the bottom slot
    let q = ContractorConnectionData::from_levi(darboux::chart(1), darboux::coframe(1).unwrap())
        .with_pq(|_| DMatrix::zeros(2, 3), |_| vec![0.0, 0.0, 0.7]);
    assert!(parallel_scale_check(&q, &one, &samples).unwrap() >= 0.35 - 1e-12);
    assert!(parallel_scale_check(&dd, &ChartField::scalar(|_| -1.0), &samples).is_err());
}

#[test]
fn contactization_scale_is_parallel() {
    for base in [Base::Darboux, Base::R3] {
        // base data with the solved (P, Q); σ = e^μ on the slice μ = 0
        let bch = base.chart();
        let data = ContractorConnectionData::from_levi(bch.clone(), base.coframe().unwrap()).with_pq(
            move |z| {
                let d = ctz::base_data(base, z).unwrap();
                DMatrix::from_fn(d.p.len(), z.len(), |a, i| d.p[a][i])
            },
            move |z| ctz::base_data(base, z).unwrap().q,
        );
        let samples = sample_box(&bch, &[0.5, -1.0, -1.0], &[1.5, 1.0, 1.0], 6, 9);
        let sigma = ChartField::scalar(|_| 0f64.exp());
        let r = parallel_scale_check(&data, &sigma, &samples).unwrap();
        assert!(r < 1e-8, "{base:?}: {r}");
        for z in &samples {
            let p: Vec<f64> = [0.2, 0.1].iter().chain(z).cloned().collect();
            assert!(ctz::parallel_scale_residual(base, &p).unwrap() < 1e-8);
        }
    }
}

fn gaussian(n: usize, hw: f64) -> ParabolicWavefunction {
    ParabolicWavefunction::from_fn(n, hw, |y, x| C64::new((-(y * y + x * x) / 2.0).exp(), 0.0) * C64::from_polar(1.0, 0.2 * x))
}

#[test]
fn parabolic_trivial_and_chirp() {
    let psi = gaussian(64, 6.0);
    let out = parabolic_lift(&ParabolicData::trivial(), &psi).unwrap();
    assert!(out.distance_up_to_phase(&psi) < 1e-12);
    let d = ParabolicData { omega: 1.0, pi1: 0.0, pi2: 0.0, chi: 0.3 };
    let out = parabolic_lift(&d, &psi).unwrap();
    let r = out.data.iter().zip(psi.data.iter()).map(|(a, b)| (a.norm() - b.norm()).abs()).fold(0.0, f64::max);
    assert!(r < 1e-10, "{r}");
    for i in [3usize, 20, 40] {
        let y = psi.y(i);
        let want = psi.data[(i, 10)] * C64::from_polar(1.0, -0.3 * y * y / 4.0);
        assert!((out.data[(i, 10)] - want).norm() < 1e-12);
    }
}

#[test]
fn parabolic_group_law_and_norm() {
    let psi = gaussian(256, 8.0);
    let a = ParabolicData { omega: 1.2, pi1: 0.3, pi2: -0.2, chi: 0.4 };
    let b = ParabolicData { omega: 0.9, pi1: -0.1, pi2: 0.25, chi: -0.3 };
    let two = parabolic_lift(&a, &parabolic_lift(&b, &psi).unwrap()).unwrap();
    let one = parabolic_lift(&a.compose(&b), &psi).unwrap();
    let r = two.distance_up_to_phase(&one);
    assert!(r < 1e-4, "{r}");
    let n = parabolic_lift(&a, &psi).unwrap().norm();
    assert!((n - psi.norm()).abs() < 1e-6 * psi.norm(), "{n} {}", psi.norm());
}

#[test]
fn parabolic_from_rescale_and_nyquist() {
    let d = RescaleData::new(1.1, vec![0.2, -0.3], 0.5, DMatrix::identity(2, 2), j1()).unwrap();
    let pd = ParabolicData::from_rescale(&d).unwrap();
    assert_eq!((pd.omega, pd.pi1, pd.pi2, pd.chi), (1.1, d.upsilon_sharp[0], d.upsilon_sharp[1], 0.5));
    let psi = gaussian(32, 6.0);
    let wild = ParabolicData { omega: 1.0, pi1: 0.0, pi2: 0.0, chi: 40.0 };
    assert!(nyquist_margin(&wild, &psi) >= 0.5);
    assert!(parabolic_lift(&wild, &psi).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unipotent_rescale_inverts(u1 in -2.0f64..2.0, u2 in -2.0f64..2.0, chi in -2.0f64..2.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_contractor(&mut rng, 0.4);
        let fwd = RescaleData::new(1.0, vec![u1, u2], chi, DMatrix::identity(2, 2), j1()).unwrap();
        let back = RescaleData::new(1.0, vec![-u1, -u2], -chi, DMatrix::identity(2, 2), j1()).unwrap();
        let out = rescale_contractor(&rescale_contractor(&v, &fwd).unwrap(), &back).unwrap();
        prop_assert!(out.distance(&v) < 1e-10);
    }

    #[test]
    fn density_weights_compose(w in -2.0f64..2.0, a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let d = Density { value: 1.3, weight: w };
        prop_assert!((d.rescale(a).rescale(b).value - d.rescale(a * b).value).abs() < 1e-12 * (1.0 + d.rescale(a * b).value.abs()));
    }

    #[test]
    fn lift_norm_is_preserved(om in 0.8f64..1.25, p1 in -0.3f64..0.3, p2 in -0.3f64..0.3, chi in -0.5f64..0.5) {
        let psi = gaussian(128, 8.0);
        let d = ParabolicData { omega: om, pi1: p1, pi2: p2, chi };
        let n = parabolic_lift(&d, &psi).unwrap().norm();
        prop_assert!((n - psi.norm()).abs() < 1e-6 * psi.norm());
    }
}
