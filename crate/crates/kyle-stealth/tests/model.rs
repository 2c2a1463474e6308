use approx::assert_relative_eq;
use kyle_stealth::equilibrium::example3_params;
use kyle_stealth::model::{
    hazard_derivative, hazard_value, penalty_total, prosecution_probability, validate_assumptions, HazardModel,
    ModelParams, PenaltyFamily, PenaltyModel, Strategy,
};
use proptest::prelude::*;

fn erfc_family(theta_d: f64) -> HazardModel {
    HazardModel::erfc_detection(0.8, theta_d, 1.5, 1.0)
}

fn families() -> Vec<HazardModel> {
    vec![
        HazardModel::quadratic(0.7, 0.3),
        HazardModel::absolute(1.3, 0.45),
        HazardModel::power(0.5, 1.5, 0.2),
        HazardModel::power(2.0, 3.0, 0.0),
        erfc_family(1.0),
        erfc_family(1.7),
    ]
}

#[test]
fn hazard_simple_values() {
    assert_eq!(hazard_value(&HazardModel::quadratic(1.0, 0.0), 1, 0.0).unwrap(), 0.0);
    let k = 1.0 / (2.0 * 1000.0f64.powi(2));
    assert_relative_eq!(hazard_value(&HazardModel::quadratic(k, 0.0), 1, 496.05).unwrap(), 0.12304, epsilon = 1e-5);
    assert_relative_eq!(hazard_value(&HazardModel::absolute(1.0, 0.5), 16, 8.0).unwrap(), 2.0, max_relative = 1e-15);
}

#[test]
fn hazard_derivative_values() {
    assert_relative_eq!(hazard_derivative(&HazardModel::quadratic(1.0, 0.0), 1, -0.5), -1.0);
    assert_relative_eq!(hazard_derivative(&HazardModel::absolute(1.0, 0.0), 1, 3.0), 1.0);
}

fn central_difference(h: &HazardModel, n: u64, z: f64) -> f64 {
    let e = 1e-5 * z.abs().max(1e-3);
    (hazard_value(h, n, z + e).unwrap() - hazard_value(h, n, z - e).unwrap()) / (2.0 * e)
}

#[test]
fn erfc_derivative_matches_difference() {
    for theta_d in [1.0, 1.7, 2.5] {
        let h = erfc_family(theta_d);
        let d = hazard_derivative(&h, 1, 0.7);
        assert_relative_eq!(d, central_difference(&h, 1, 0.7), max_relative = 1e-6);
    }
}

#[test]
fn erfc_domain_error_when_detection_is_certain() {
    // once D = 1 and the imbalance is far beyond ȳ, survival underflows to 0
    let h = HazardModel::erfc_detection(3.0, 1.0, 1.0, 1.0);
    assert!(hazard_value(&h, 1, 0.1).is_ok());
    assert!(matches!(hazard_value(&h, 1, 100.0), Err(kyle_stealth::Error::Domain(_))));
}

#[test]
fn prosecution_values() {
    let h = HazardModel::quadratic(1.0 / 2e6, 0.0);
    assert_eq!(prosecution_probability(&h, 1, 0.0), 0.0);
    assert_relative_eq!(prosecution_probability(&h, 1, 496.05), 0.11576, epsilon = 1e-5);
    let z = 2f64.ln().sqrt();
    assert_relative_eq!(prosecution_probability(&HazardModel::quadratic(1.0, 0.0), 1, z), 0.5, max_relative = 1e-15);
}

#[test]
fn penalty_values() {
    let civil = PenaltyModel::civil(3.0);
    assert_eq!(penalty_total(&civil, 1.0, -1.0), 0.0);
    assert_eq!(penalty_total(&civil, 1.0, 2.0), 6.0);
    let ex3 = PenaltyModel::new(1.0, PenaltyFamily::PiecewiseExample3);
    assert_relative_eq!(penalty_total(&ex3, -6.0, 0.0), 1.0 / 24.0, max_relative = 1e-15);
}

#[test]
fn piecewise_penalty_is_continuous_and_bounded() {
    let pen = PenaltyModel::new(1.0, PenaltyFamily::PiecewiseExample3);
    for knot in [-6.0f64, 1.2] {
        let e = 1e-9;
        assert!((pen.c0(knot - e) - pen.c0(knot + e)).abs() < 1e-9);
        assert!((pen.c0_prime(knot - e) - pen.c0_prime(knot + e)).abs() < 1e-7);
    }
    assert!(pen.c0(-1e9) < 1.0 / 12.0 && pen.c0(1e9) < 5.0 / 12.0);
    assert!(pen.is_bounded());
}

#[test]
fn quadratic_validates() {
    let params = ModelParams::new(0.5, 1.0, 10, HazardModel::quadratic(1.0, 0.2), PenaltyModel::civil(3.0)).unwrap();
    let report = validate_assumptions(&params);
    assert!(report.all_passed(), "{report}");
    assert!((report.fitted_theta - 2.0).abs() < 1e-6);
}

#[test]
fn log_hazard_fails_convexity() {
    let report = validate_assumptions(&example3_params(1.0 / 3.0));
    assert!(!report.all_passed());
    assert!(!report.get("convexity").unwrap().passed);
    assert!(report.to_string().contains("convexity: FAIL"));
    assert!(report.c0_bounded);
}

#[test]
fn erfc_theta_fit() {
    let params = ModelParams::new(0.5, 1.0, 1, erfc_family(1.0), PenaltyModel::civil(2.0)).unwrap();
    let report = validate_assumptions(&params);
    assert!((report.fitted_theta - 1.0).abs() < 0.05, "fitted {}", report.fitted_theta);
    assert!(report.get("theta fit").unwrap().passed);
}

#[test]
fn erfc_family_kinks_where_detection_caps() {
    // D = min{K_D |z|^θ_D, 1} bends down at |z| = K_D^{−1/θ_D}; far out the
    // hazard saturates but must still read as increasing
    let params = ModelParams::new(0.5, 1.0, 1, erfc_family(1.0), PenaltyModel::civil(2.0)).unwrap();
    let report = validate_assumptions(&params);
    assert!(report.get("hazard sign").unwrap().passed, "{report}");
    assert!(report.get("hazard monotone").unwrap().passed, "{report}");
    let convexity = report.get("convexity").unwrap();
    assert!(!convexity.passed);
    let at: f64 = convexity.detail.rsplit("z = ").next().unwrap().parse().unwrap();
    assert!((at.abs() - 1.25).abs() < 0.05, "{}", convexity.detail);
}

#[test]
fn power_penalty_alpha_fit() {
    let pen = PenaltyModel::new(2.0, PenaltyFamily::Power { k_alpha: 0.3, alpha: 2.5, alpha_prime: 1.0 });
    let params = ModelParams::new(0.5, 1.0, 1, HazardModel::quadratic(1.0, 0.1), pen).unwrap();
    let report = validate_assumptions(&params);
    assert!(report.all_passed(), "{report}");
    assert!((report.fitted_alpha.unwrap() - 2.5).abs() < 0.05);
}

#[test]
fn invalid_parameters_rejected() {
    let h = HazardModel::quadratic(1.0, 0.0);
    assert!(ModelParams::new(0.0, 1.0, 1, h, PenaltyModel::civil(1.0)).is_err());
    assert!(ModelParams::new(0.5, -1.0, 1, h, PenaltyModel::civil(1.0)).is_err());
    assert!(ModelParams::new(0.5, 1.0, 0, h, PenaltyModel::civil(1.0)).is_err());
    assert!(ModelParams::new(0.5, 1.0, 1, h, PenaltyModel::civil(0.5)).is_err());
    assert!(Strategy::new(1.0, 2.0).is_err());
    assert!(Strategy::new(-1.0, 0.0).is_err());
}

#[test]
fn q_identity() {
    for p in [0.01, 0.3, 0.5, 0.77, 0.999] {
        let params = ModelParams::new(p, 1.0, 1, HazardModel::quadratic(1.0, 0.0), PenaltyModel::civil(1.0)).unwrap();
        assert!((params.q() * p - (1.0 - p)).abs() <= 1e-15);
    }
}

proptest! {
    #[test]
    fn scaling_law(idx in 0usize..6, n in 1u64..1_000_000, z in -50.0f64..50.0) {
        let h = families()[idx];
        let direct = hazard_value(&h, n, z).unwrap();
        let via_one = hazard_value(&h, 1, (n as f64).powf(-h.beta) * z).unwrap();
        prop_assert_eq!(direct, via_one);
    }

    #[test]
    fn derivative_matches_difference(idx in 0usize..6, a in 0.01f64..100.0, neg in any::<bool>()) {
        let h = families()[idx];
        // the detection families saturate (survival underflows) far out
        let a = if idx >= 4 { a.min(6.0) } else { a };
        let z = if neg { -a } else { a };
        let d = hazard_derivative(&h, 1, z);
        let fd = central_difference(&h, 1, z);
        prop_assert!((d - fd).abs() <= 1e-6 * d.abs().max(1e-12), "z = {}, d = {}, fd = {}", z, d, fd);
        prop_assert_eq!(d.signum(), z.signum());
    }

    #[test]
    fn prosecution_increasing(idx in 0usize..6, a in 0.01f64..2.0, b in 0.01f64..2.0) {
        let h = families()[idx];
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        for s in [-1.0, 1.0] {
            prop_assert!(prosecution_probability(&h, 1, s * hi) > prosecution_probability(&h, 1, s * lo));
        }
    }

    #[test]
    fn disgorgement_floor(z in -100.0f64..100.0, profit in -10.0f64..10.0, chi in 1.0f64..5.0, k in 0.0f64..3.0) {
        let pen = if k == 0.0 {
            PenaltyModel::civil(chi)
        } else {
            PenaltyModel::new(chi, PenaltyFamily::Power { k_alpha: k, alpha: 1.5, alpha_prime: 1.0 })
        };
        let floor = chi * profit.max(0.0);
        let total = penalty_total(&pen, z, profit);
        prop_assert!(total >= floor);
        prop_assert_eq!(total == floor, pen.c0(z) == 0.0);
    }
}
