use std::f64::consts::{FRAC_1_SQRT_2, PI};

use contactq::connection::*;
use contactq::geometry::{self, ChartField, Rank};
use contactq::models::contactization::{self as ctz, Base};
use contactq::models::{ambient, darboux, hamsys, r3, s3, sample_box};
use contactq::operator_core::{fock_rep, identity, PolynomialObservable};
use contactq::{block_max_abs, max_abs, C64};
use proptest::prelude::*;

fn cz(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn s3_samples(n: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_box(&s3::chart(), &[0.0, 0.0, 0.05], &[2.0 * PI, 2.0 * PI, 1.5], n, seed)
}

// --- darboux, r3, hamsys ---

#[test]
fn darboux_induced_connection_vanishes() {
    let m = darboux::model(1, 1.0, 12).unwrap();
    let cf = m.coframe.clone().unwrap();
    let w = induced_xi_connection(&*m.family, &cf, &[0.2, -0.4, 0.9], 0.5).unwrap();
    for o in w {
        assert!(o.amax() < 1e-9, "{o}");
    }
}

#[test]
fn r3_calibration_rotates_with_theta() {
    let f = fock_rep(8, 0.5).unwrap();
    let (th, h) = (0.83, 1e-5);
    let (sm0, sp0) = r3::s_pm(th, &f.s1, &f.s2);
    let (smp, spp) = r3::s_pm(th + h, &f.s1, &f.s2);
    let (smm, spm) = r3::s_pm(th - h, &f.s1, &f.s2);
    let dsm = (smp - smm) * cz(0.5 / h, 0.0);
    let dsp = (spp - spm) * cz(0.5 / h, 0.0);
    assert!(max_abs(&(dsm + &sp0)) < 1e-7);
    assert!(max_abs(&(dsp - &sm0)) < 1e-7);
}

#[test]
fn r3_flat_on_interior_block() {
    let conn = r3::connection(0.5, 16, true).unwrap();
    let samples = sample_box(&conn.chart, &[0.3, -PI, -1.0], &[2.0, PI, 1.0], 50, 3);
    let rep = flatness_residual(&conn, &samples, DerivMethod::Analytic).unwrap();
    assert!(rep.max < 1e-8, "{}", rep.max);
    assert!(r3::connection(0.5, 16, true).unwrap().chart.check(&[-0.1, 0.0, 0.0]).is_err());
}

#[test]
fn hamsys_time_coefficient_at_origin() {
    let h = PolynomialObservable::harmonic();
    let conn = hamsys::connection(&h, 1.0, 16).unwrap();
    let f = fock_rep(16, 1.0).unwrap();
    let want = (&f.s1 * &f.s1 + &f.s2 * &f.s2) * cz(0.0, 0.5);
    assert!(max_abs(&(conn.coeff(&[0.0, 0.0, 0.4], 2) - want)) < 1e-12);
}

#[test]
fn hamsys_cubic_is_flat() {
    let h = PolynomialObservable::from_terms(&[((3, 0), 1.0)]);
    let conn = hamsys::connection(&h, 1.0, 24).unwrap();
    let samples = sample_box(&conn.chart, &[-1.0; 3], &[1.0; 3], 20, 11);
    let rep = flatness_residual(&conn, &samples, DerivMethod::Analytic).unwrap();
    assert!(rep.max < 1e-8, "{}", rep.max);
}

#[test]
fn hamsys_charges_commute() {
    for h in [PolynomialObservable::harmonic(), PolynomialObservable::from_terms(&[((3, 0), 1.0), ((0, 1), 1.0)])] {
        let conn = hamsys::connection(&h, 1.0, 24).unwrap();
        let (q, dq) = hamsys::charge(&h, 1.0, 24).unwrap();
        let samples = sample_box(&conn.chart, &[-1.0; 3], &[1.0; 3], 20, 5);
        let r = charge_commutation_check(&conn, &q, &dq, &samples).unwrap();
        assert!(r < 1e-8, "{r}");
    }
}

#[test]
fn hamsys_degree_guard() {
    let h = PolynomialObservable::from_terms(&[((13, 0), 1.0)]);
    assert!(hamsys::connection(&h, 1.0, 8).is_err());
}

// --- strict S³ ---

#[test]
fn s3_spin_half() {
    let ops = s3::hp_ops(1.0, 2, false, s3::SqrtSign::Minus).unwrap();
    assert!(s3::su2_residual(&ops, 1.0) < 1e-12);
    assert!((ops.li[(0, 0)] - cz(0.5, 0.0)).norm() < 1e-15);
    assert!((ops.li[(1, 1)] - cz(-0.5, 0.0)).norm() < 1e-15);
    assert!((ops.e[(0, 1)] - cz(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    let cas = &ops.li * &ops.li + &ops.lj * &ops.lj + &ops.lk * &ops.lk;
    assert!(max_abs(&(cas - identity(2) * cz(0.75, 0.0))) < 1e-12);
}

#[test]
fn s3_spin_zero() {
    let ops = s3::hp_ops(2.0, 1, false, s3::SqrtSign::Minus).unwrap();
    assert_eq!(max_abs(&ops.e), 0.0);
    assert_eq!(max_abs(&ops.e_dag), 0.0);
    assert_eq!(max_abs(&ops.li), 0.0);
}

#[test]
fn s3_su2_and_casimir_at_exact_dims() {
    for hbar in [2.0, 1.0, 2.0 / 3.0, 0.5, 0.4] {
        let dim = s3::exact_dim(hbar).unwrap();
        let ops = s3::hp_ops(hbar, dim, false, s3::SqrtSign::Minus).unwrap();
        assert!(s3::su2_residual(&ops, hbar) < 1e-12, "hbar {hbar}");
        assert!(s3::casimir_residual(&ops, hbar) < 1e-10, "hbar {hbar}");
    }
    assert_eq!(s3::exact_dim(0.3), None);
}

#[test]
fn s3_plus_sign_breaks_algebra() {
    let ops = s3::hp_ops(1.0, 2, false, s3::SqrtSign::Plus).unwrap();
    assert!(s3::su2_residual(&ops, 1.0) > 1e-2);
    let m = s3::model_plus_sign(1.0, 2).unwrap();
    let rep = flatness_residual(&m.conn, &s3_samples(10, 1), DerivMethod::Analytic).unwrap();
    assert!(rep.max > 1e-2);
}

#[test]
fn s3_sqrt_domain() {
    assert!(s3::connection(0.5, 5, false, s3::SqrtSign::Minus).is_err());
    assert!(s3::connection(0.5, 5, true, s3::SqrtSign::Minus).is_ok());
}

#[test]
fn s3_strict_flatness() {
    let samples = s3_samples(100, 9);
    for hbar in [1.0, 2.0 / 3.0, 0.5] {
        let conn = s3::connection(hbar, s3::exact_dim(hbar).unwrap(), false, s3::SqrtSign::Minus).unwrap();
        let rep = flatness_residual(&conn, &samples, DerivMethod::Analytic).unwrap();
        assert!(rep.max < 1e-9, "hbar {hbar}: {}", rep.max);
    }
    assert!(s3::coframe_structure_residual(&samples).unwrap() < 1e-8);
}

#[test]
fn s3_truncation_scan() {
    let rows = s3::truncation_scan(&[1.0, 2.0, 0.3, 2.0 / 3.0]).unwrap();
    assert_eq!((rows[0].level, rows[0].dim, rows[0].spin), (Some(1), Some(2), Some(0.5)));
    assert_eq!((rows[1].level, rows[1].dim, rows[1].spin), (Some(0), Some(1), Some(0.0)));
    assert!(rows[1].agrees_with_quoted());
    assert_eq!(rows[2].level, None);
    assert_eq!(rows[3].level, Some(2));
    assert!(!rows[0].agrees_with_quoted() && !rows[3].agrees_with_quoted());
    for r in rows.iter().filter(|r| r.level.is_some()) {
        assert!(r.oracle_norm.unwrap() < 1e-12);
    }
    assert!(s3::truncation_scan(&[5.0]).is_err());
}

// --- ambient R⁵ ---

fn ambient_samples(n: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_box(&ambient::chart(), &[-1.5; 5], &[1.5; 5], n, seed)
        .into_iter()
        .filter(|p| ambient::radius(p) > 0.3)
        .collect()
}

#[test]
fn ambient_curvature_at_base_point() {
    let p = [1.0, 0.0, 0.0, 0.0, 0.0];
    assert!(geometry::max_abs(&geometry::sub(&ambient::lambda_jj().eval(&p), &[0.0, 0.0, 2.0, 0.0, 0.0])) < 1e-15);
    assert!(geometry::max_abs(&geometry::sub(&ambient::lambda_kk().eval(&p), &[0.0, 0.0, 0.0, 2.0, 0.0])) < 1e-15);
    let f = ambient::curvature(&p).unwrap();
    let mut dz = vec![0.0; 5];
    let mut dw = vec![0.0; 5];
    dz[2] = 1.0;
    dw[3] = 1.0;
    let want = geometry::scale(&geometry::wedge11(&dz, &dw), 4.0);
    assert!(geometry::max_abs(&geometry::sub(&f[1][2], &want)) < 1e-6);
}

#[test]
fn ambient_structure() {
    for p in ambient_samples(60, 4) {
        assert!(ambient::homothety_residual(&p).unwrap() < 1e-8);
        assert!(ambient::parallel_tractor_residual(&p).unwrap() < 1e-9);
        assert!(ambient::curvature_x_residual(&p).unwrap() < 1e-8);
        assert!(ambient::curvature_shape_residual(&p).unwrap() < 1e-6);
        assert!(ambient::frame_parallel_residual(&p).unwrap() < 1e-7);
    }
}

#[test]
fn ambient_reduces_to_strict() {
    let samples = s3_samples(10, 21);
    assert!(ambient::pullback_residual(&samples) < 1e-12);
    for hbar in [1.0, 2.0 / 3.0, 0.5] {
        let r = ambient::reduce_to_strict(hbar, &samples).unwrap();
        assert!(r.max_difference < 1e-10, "{r:?}");
        assert!(r.y_pullback < 1e-12);
        let (d1, d2) = r.eps_differences;
        assert!(d1 > 0.0 && d1 < 1e-1 && (d1 / d2 - 10.0).abs() < 1.0, "{r:?}");
    }
    assert!(ambient::reduce_to_strict(0.3, &samples).is_err());
}

#[test]
fn ambient_equivariance() {
    let rep = ambient::AmbientRep::default();
    let fam = move |h: f64| ambient::connection(h, rep);
    for seed in [2, 5] {
        let p = &ambient::cone_samples(1, 1.9, 2.1, seed)[0];
        for (name, u) in ambient::homogeneous_directions().into_iter().take(3) {
            let r = equivariance_residual(&fam, &ambient::homothety(), &u, &ambient::contact_form(), p, 1.0).unwrap();
            assert!(r < 1e-5, "{name}: {r}");
        }
    }
}

#[test]
fn ambient_equivariance_detects_wrong_weight() {
    let rep = ambient::AmbientRep::default();
    let fam = move |h: f64| ambient::connection(h, rep);
    let p = &ambient::cone_samples(1, 1.9, 2.1, 3)[0];
    let x2 = ChartField::new(Rank::Vector, |q| ambient::homothety().eval(q).iter().map(|v| 2.0 * v).collect());
    let u = ambient::homogeneous_directions().swap_remove(0).1;
    let r = equivariance_residual(&fam, &x2, &u, &ambient::contact_form(), p, 1.0).unwrap();
    assert!(r > 0.1, "{r}");
}

// --- contactization ---

fn ctz_samples(base: Base, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let ch = ctz::chart(base);
    match base {
        Base::Darboux => sample_box(&ch, &[-0.5, -1.0, -1.0, -1.0, -1.0], &[0.5, 1.0, 1.0, 1.0, 1.0], n, seed),
        Base::R3 => sample_box(&ch, &[-0.5, -1.0, 0.5, -PI, -1.0], &[0.5, 1.0, 2.0, PI, 1.0], n, seed),
    }
}

#[test]
fn contactization_structure() {
    for base in [Base::Darboux, Base::R3] {
        for p in ctz_samples(base, 10, 8) {
            let s = ctz::structure_checks(base, &p).unwrap();
            assert!(s.dx_minus_e < 1e-7 && s.fx < 1e-7 && s.de < 1e-7, "{base:?} {s:?}");
            assert!(s.lie_x < 1e-7 && s.levi < 1e-7, "{base:?} {s:?}");
            assert!(ctz::parallel_scale_residual(base, &p).unwrap() < 1e-8);
            assert!(ctz::omega_up_asymmetry(base, &p).unwrap() < 1e-10);
            let d = ctz::base_data(base, &p[2..]).unwrap();
            assert!(d.p.iter().flatten().chain(&d.q).all(|v| v.abs() < 1e-9));
            assert!(ctz::constraint_residual(base, &p[2..]).unwrap() < 1e-9);
        }
    }
}

#[test]
fn contactization_ambient_d_operator() {
    let f = ChartField::scalar(|z| (0.3 * z[0]).sin() + z[1] * z[2] + 0.5 * z[0] * z[0]);
    for base in [Base::Darboux, Base::R3] {
        for p in ctz_samples(base, 5, 13) {
            for w in [0.0, 1.0, -1.5] {
                let r = ctz::ambient_d_residual(base, w, &f, &p).unwrap();
                assert!(r < 1e-7, "{base:?} w={w}: {r}");
            }
        }
    }
}

#[test]
fn contactization_flat_and_equivariant() {
    for base in [Base::Darboux, Base::R3] {
        let conn = ctz::connection(base, 0.5, 8).unwrap();
        let samples = ctz_samples(base, 5, 17);
        let rep = flatness_residual(&conn, &samples, DerivMethod::FiniteDifference).unwrap();
        assert!(rep.max < 1e-5, "{base:?}: {}", rep.max);
        let fam = move |h: f64| ctz::connection(base, h, 8);
        let mut p = samples[0].clone();
        p[1] = 0.0;
        for (name, u) in ctz::homogeneous_directions(base) {
            let r = equivariance_residual(&fam, &ctz::homothety(base), &u, &ctz::contact_form(base), &p, 0.5).unwrap();
            assert!(r < 1e-5, "{base:?} {name}: {r}");
        }
    }
}

#[test]
fn classical_limits_of_shipped_models() {
    let hbars = [0.1, 0.2, 0.3, 0.4, 0.5];
    let h = PolynomialObservable::harmonic();
    let m = hamsys::model(&h, 0.5, 12).unwrap();
    let cl = classical_limit_check(&*m.family, &m.alpha, &[0.3, -0.2, 0.1], &hbars, ScalarPart::Vacuum).unwrap();
    assert!(cl.error < 1e-6, "{cl:?}");
    let m = r3::model(0.5, 12).unwrap();
    let cl = classical_limit_check(&*m.family, &m.alpha, &[1.2, 0.4, 0.1], &hbars, ScalarPart::Vacuum).unwrap();
    assert!(cl.error < 1e-6, "{cl:?}");
    let m = ctz::model(Base::Darboux, 0.5, 6).unwrap();
    let cl = classical_limit_check(&*m.family, &m.alpha, &[0.1, 0.2, 0.3, -0.2, 0.1], &hbars, ScalarPart::Vacuum).unwrap();
    assert!(cl.error < 1e-6, "{cl:?}");
}

#[test]
fn builders_are_deterministic() {
    let a = darboux::connection(1, 0.7, 10).unwrap();
    let b = darboux::connection(1, 0.7, 10).unwrap();
    let p = [0.4, 0.1, -0.3];
    for i in 0..3 {
        assert_eq!(a.coeff(&p, i), b.coeff(&p, i));
    }
    assert_eq!(block_max_abs(&(a.coeff(&p, 0) - b.coeff(&p, 0)), 5), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn su2_holds_whenever_dim_is_exact(k in 1usize..12) {
        let hbar = 2.0 / k as f64;
        let ops = s3::hp_ops(hbar, k, false, s3::SqrtSign::Minus).unwrap();
        prop_assert!(s3::su2_residual(&ops, hbar) < 1e-12);
        prop_assert!(s3::casimir_residual(&ops, hbar) < 1e-10);
    }

    #[test]
    fn ambient_x_annihilates_curvature(x in -1.0f64..1.0, y in -1.0f64..1.0, z in 0.3f64..1.0, w in -1.0f64..1.0, u in -1.0f64..1.0) {
        prop_assert!(ambient::curvature_x_residual(&[x, y, z, w, u]).unwrap() < 1e-8);
    }
}
