use ubdnet::compensators::*;
use ubdnet::lti::*;
use ubdnet::sim::*;

fn plant() -> RationalTF {
    RationalTF::new(&[2.0], &[1.0, 5.2, 1.0]).unwrap()
}

fn bounds() -> UncertainDelayPair {
    UncertainDelayPair::new(2.9, 2.9).unwrap()
}

fn run(kind: ScenarioKind, controller: RationalTF, delays: UncertainDelayPair, seed: u64) -> ScenarioResult {
    run_scenario(&ScenarioConfig::new(kind, plant(), controller, delays, seed)).unwrap()
}

#[test]
fn delay_samples_are_uniform_on_bound() {
    let t = sample_delays(11, 100_000, UncertainDelayPair::new(3.5, 3.5).unwrap(), 0.1);
    for v in [&t.sensor, &t.actuator] {
        assert!(v.iter().all(|&d| (0.0..=3.5).contains(&d)));
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean - 1.75).abs() < 0.05, "{mean}");
    }
    assert_eq!(t, sample_delays(11, 100_000, UncertainDelayPair::new(3.5, 3.5).unwrap(), 0.1));
    assert_ne!(t.sensor, sample_delays(12, 100_000, UncertainDelayPair::new(3.5, 3.5).unwrap(), 0.1).sensor);
}

#[test]
fn scenarios_are_reproducible() {
    for kind in [ScenarioKind::NominalDelayed, ScenarioKind::Smith] {
        let a = run(kind, pi_tf(REFERENCE_PI), bounds(), 5);
        let b = run(kind, pi_tf(REFERENCE_PI), bounds(), 5);
        assert_eq!(a, b);
        assert_eq!(a.time.len(), a.output.len());
        assert_eq!(a.control.len(), a.setpoint.len());
    }
}

#[test]
fn smith_without_delay_matches_nominal() {
    let zero = UncertainDelayPair::new(0.0, 0.0).unwrap();
    let smith = run(ScenarioKind::Smith, pi_tf(REFERENCE_PI), zero, 1);
    let nominal = run(ScenarioKind::NominalNoDelay, pi_tf(REFERENCE_PI), zero, 1);
    for (a, b) in smith.output.iter().zip(&nominal.output) {
        assert!((a - b).abs() <= 1e-9);
    }
    for (a, b) in smith.control.iter().zip(&nominal.control) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn delayed_nominal_loop_is_unstable_in_rational_model_too() {
    // constant worst-case delays through the rational model: 1 + P C D
    let theta = 2.0 * 2.9;
    let d = delay_rational_approx(theta).unwrap();
    let loop_tf = plant().mul(&pi_tf(REFERENCE_PI)).unwrap().mul(&d).unwrap();
    let cl = poly::add(loop_tf.den(), loop_tf.num());
    assert!(!stability_check(&cl).unwrap());
    assert!(run(ScenarioKind::NominalDelayed, pi_tf(REFERENCE_PI), bounds(), 1).unstable);
}

#[test]
fn qualitative_ordering_holds() {
    let wp = perf_weight(2.0, 0.02, 1e-4).unwrap();
    let robust = tune_robust(&plant(), &RobustTuneConfig::new(wp, delay_weight(5.8).unwrap())).unwrap();
    for seed in [1, 2, 3] {
        let base = run(ScenarioKind::NominalNoDelay, pi_tf(REFERENCE_PI), bounds(), seed);
        let delayed = run(ScenarioKind::NominalDelayed, pi_tf(REFERENCE_PI), bounds(), seed);
        let smith = run(ScenarioKind::Smith, pi_tf(REFERENCE_PI), bounds(), seed);
        let rob = run(ScenarioKind::Robust, robust.controller.clone(), bounds(), seed);
        assert!(!base.unstable && base.ise.is_finite());
        assert!(delayed.unstable && delayed.ise.is_infinite());
        assert!(!smith.unstable && smith.ise.is_finite());
        assert!(!rob.unstable && rob.ise.is_finite());
        assert!(base.ise <= smith.ise);
        assert_eq!(smith.seed, seed);
    }
}
