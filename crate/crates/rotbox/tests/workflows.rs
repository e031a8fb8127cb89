use std::f64::consts::PI;

use rotbox::bell::{nagata_inequality, CorrelationTensor};
use rotbox::fejer::{factorize, relaxed_quantum_model};
use rotbox::fixtures::load_fixtures;
use rotbox::games::{two_setting_quantum_boundary, GameSpec};
use rotbox::gpt::measurement_from_correlations;
use rotbox::qset::{r1_quantum_realize, seesaw, SeesawOptions};
use rotbox::rset::{boundary_sweep, membership, Coef, Direction};
use rotbox::{SpinLabel, TrigPoly};

#[test]
fn every_fixture_loads_and_reports() {
    let fixtures = load_fixtures().unwrap();
    assert!(fixtures.len() >= 8);
    for f in &fixtures {
        let rep = f.verify().unwrap();
        assert!(!rep.checks.is_empty(), "{} has no checks", f.name);
    }
    let passing = |name: &str| {
        fixtures
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.verify().unwrap().passed)
            .unwrap()
    };
    for name in ["pstar", "q32", "q52", "q3", "optimal_e_rho", "j1_gallery"] {
        assert!(passing(name), "{name} should verify");
    }
}

#[test]
fn out_of_range_box_is_rejected_with_location() {
    let p = TrigPoly::harmonic(2, 0.5, 1, 0.6, 0.0);
    let m = membership(&p, SpinLabel::new(2)).unwrap();
    assert!(!m.feasible);
    let inf = m.infeasibility.unwrap();
    assert_eq!(inf.violated_bound, "lower");
    assert!((inf.value + 0.1).abs() < 1e-9);
}

#[test]
fn certificate_to_factor_to_realization() {
    let p = TrigPoly::harmonic(2, 0.5, 2, -0.5, 0.0);
    let f = factorize(&p).unwrap();
    assert!(f.reconstruct().grid_distance(&p, 400) < 1e-9);
    let model = relaxed_quantum_model(&p, 2).unwrap();
    for i in 0..40 {
        let t = 2.0 * PI * i as f64 / 40.0;
        assert!((model.probability(t) - p.evaluate(t)).abs() < 1e-9);
    }
    let r = r1_quantum_realize(&p).unwrap();
    assert!(r.grid_error(0, &p, 400) < 1e-9);
}

#[test]
fn sweep_support_dominates_seesaw() {
    let v1 = Direction::from_terms(2, &[(Coef::C(1), 1.0)]);
    let v2 = Direction::from_terms(2, &[(Coef::S(2), 1.0)]);
    let sweep = boundary_sweep(&v1, &v2, SpinLabel::new(2), 12).unwrap();
    let opts = SeesawOptions {
        restarts: 4,
        ..SeesawOptions::default()
    };
    for pt in &sweep {
        let value = pt.value.unwrap();
        let dir = v1.combine(pt.phi.cos(), &v2, pt.phi.sin());
        let q = seesaw(&dir, SpinLabel::new(2), &opts).unwrap();
        assert!(q.value <= value + 1e-7);
        // R_1 = Q_1, so see-saw closes the gap
        assert!((q.value - value).abs() < 1e-5, "phi = {}", pt.phi);
    }
}

#[test]
fn gpt_measurement_reproduces_boxes() {
    let spin = SpinLabel::new(2);
    let p = TrigPoly::harmonic(2, 0.5, 2, -0.5, 0.0);
    let effects = measurement_from_correlations(&[p.clone(), p.one_minus()], spin).unwrap();
    assert_eq!(effects.len(), 2);
    assert!(effects[0].polynomial().coeff_distance(&p) < 1e-12);
}

#[test]
fn two_setting_boundary_is_ordered() {
    for i in 0..=20 {
        let e1 = -1.0 + 0.1 * i as f64;
        let b = two_setting_quantum_boundary(1, PI / 3.0, e1).unwrap();
        assert!(b.e2_min <= b.e2_max + 1e-12);
    }
}

#[test]
fn nagata_classical_tensor_is_not_violated() {
    // product of single-party planar correlations
    let t = CorrelationTensor::new(2, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let rep = nagata_inequality(&t, 3);
    assert!(!rep.violated);
    assert!((rep.t_max - 1.0).abs() < 1e-9);
}

#[test]
fn game_measure_has_half_mass_on_plus_region() {
    let g = GameSpec::new();
    assert!((g.region_plus_measure() - 0.5).abs() < 1e-12);
}
