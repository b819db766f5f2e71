use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use ubdnet::compensators::{pi_tf, REFERENCE_PI};
use ubdnet::lti::*;

fn plant() -> RationalTF {
    RationalTF::new(&[2.0], &[1.0, 5.2, 1.0]).unwrap()
}

fn dense_grid() -> FrequencyGrid {
    FrequencyGrid::log_spaced(1e-4, 1e3, 4000).unwrap()
}

#[test]
fn closed_loop_denominator_expands_by_hand() {
    // s(s+5)(s+0.2) + 2(0.5508 s + 0.4529)
    // = s^3 + 5.2 s^2 + (1 + 1.1016) s + 0.9058
    let cl = plant().mul(&pi_tf(REFERENCE_PI)).unwrap().feedback(&RationalTF::gain(1.0)).unwrap();
    let expected = [1.0, 5.2, 2.1016, 0.9058];
    assert_eq!(cl.den().len(), 4);
    for (a, b) in cl.den().iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{:?}", cl.den());
    }
    assert_eq!(closed_loop_polynomial(&plant(), &pi_tf(REFERENCE_PI)), cl.den());
}

#[test]
fn plant_dc_gain_is_two() {
    let p = plant();
    let mut last = f64::NAN;
    for k in 3..12 {
        let v = p.freq_response(10f64.powi(-k)).unwrap();
        assert!(v.im.abs() < 20.0 * 10f64.powi(-k));
        last = v.re;
    }
    assert!((last - 2.0).abs() < 1e-9);
}

#[test]
fn perf_weight_matches_direct_evaluation() {
    let (m, wb, a) = (2.0, 0.02, 1e-4);
    let w = perf_weight(m, wb, a).unwrap();
    let s = Complex64::new(0.0, wb);
    let direct = (s / m + wb) / (s + wb * a);
    assert!((w.freq_response(wb).unwrap() - direct).norm() <= 1e-12 * direct.norm());
}

#[test]
fn delay_weight_covers_radius_everywhere() {
    for theta in [1.0, 3.5, 7.0, 20.0] {
        let wl = delay_weight(theta).unwrap();
        for grid in [FrequencyGrid::default(), dense_grid()] {
            for &w in grid.omegas() {
                let mag = wl.freq_response(w).unwrap().norm();
                assert!(mag >= uncertainty_radius(w, theta), "theta {theta} omega {w}");
            }
        }
    }
}

#[test]
fn radius_is_worst_case_over_delay_box() {
    let (u1, u2) = (3.5, 2.0);
    let theta = u1 + u2;
    let n = 21;
    for &w in FrequencyGrid::default().omegas().iter().filter(|&&w| w < PI / theta) {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let tau = u1 * i as f64 / (n - 1) as f64 + u2 * j as f64 / (n - 1) as f64;
                worst = worst.max((Complex64::new(0.0, -w * tau).exp() - 1.0).norm());
            }
        }
        assert!((worst - uncertainty_radius(w, theta)).abs() < 1e-9, "omega {w}");
    }
}

#[test]
fn rational_delay_stays_within_radius_below_corner() {
    let tau = 3.5;
    let approx = delay_rational_approx(tau).unwrap();
    for &w in FrequencyGrid::default().omegas().iter().filter(|&&w| w < PI / tau) {
        let err = (approx.freq_response(w).unwrap() - Complex64::new(0.0, -w * tau).exp()).norm();
        assert!(err <= uncertainty_radius(w, tau), "omega {w}");
    }
}

#[test]
fn norm_matches_dense_grid_and_bounds_each_term() {
    let c = pi_tf(REFERENCE_PI);
    let wp = perf_weight(2.0, 0.02, 1e-4).unwrap();
    let wl = delay_weight(5.8).unwrap();
    let coarse = mixed_sensitivity_norm(&plant(), &c, &wp, &wl, &FrequencyGrid::default()).unwrap();
    let dense = mixed_sensitivity_norm(&plant(), &c, &wp, &wl, &dense_grid()).unwrap();
    assert!((coarse - dense).abs() <= 1e-6 * dense, "{coarse} vs {dense}");
    for &w in dense_grid().omegas() {
        let l = plant().freq_response(w).unwrap() * c.freq_response(w).unwrap();
        let s = 1.0 / (1.0 + l);
        let v = (wp.freq_response(w).unwrap() * s).norm().hypot((wl.freq_response(w).unwrap() * l * s).norm());
        assert!(v <= coarse * (1.0 + 1e-12));
    }
    assert!(!rp_holds(coarse) || coarse < std::f64::consts::FRAC_1_SQRT_2);
}

fn tf_strategy() -> impl Strategy<Value = RationalTF> {
    (prop::collection::vec(-5.0..5.0f64, 1..4), prop::collection::vec(0.1..5.0f64, 1..4)).prop_map(|(n, d)| {
        let mut den = vec![1.0];
        den.extend(d);
        RationalTF::new(&n, &den).unwrap()
    })
}

proptest! {
    #[test]
    fn product_response_is_product_of_responses(a in tf_strategy(), b in tf_strategy(), w in 1e-3..1e2f64) {
        let ab = a.mul(&b).unwrap().freq_response(w).unwrap();
        let expect = a.freq_response(w).unwrap() * b.freq_response(w).unwrap();
        prop_assert!((ab - expect).norm() <= 1e-12 * expect.norm().max(1e-300));
    }

    #[test]
    fn sum_and_feedback_responses(a in tf_strategy(), b in tf_strategy(), w in 1e-3..1e2f64) {
        let (fa, fb) = (a.freq_response(w).unwrap(), b.freq_response(w).unwrap());
        let sum = a.add(&b).unwrap().freq_response(w).unwrap();
        prop_assert!((sum - (fa + fb)).norm() <= 1e-9 * (fa.norm() + fb.norm()).max(1e-12));
        if (1.0 + fa * fb).norm() > 1e-6 {
            let fbk = a.feedback(&b).unwrap().freq_response(w).unwrap();
            let expect = fa / (1.0 + fa * fb);
            prop_assert!((fbk - expect).norm() <= 1e-9 * expect.norm().max(1e-12));
        }
    }

    #[test]
    fn roots_annihilate_polynomial(coeffs in prop::collection::vec(-3.0..3.0f64, 1..5)) {
        let mut p = vec![1.0];
        p.extend(coeffs);
        for z in poly::roots(&p) {
            let scale: f64 = p.iter().enumerate().map(|(k, c)| c.abs() * z.norm().powi((p.len() - 1 - k) as i32)).sum();
            prop_assert!(poly::eval(&p, z).norm() <= 1e-9 * scale.max(1.0));
        }
    }
}
