use approx::assert_relative_eq;
use kyle_stealth::calibration::{
    calibrate, calibrated_params, conditional_insider_volume, conditional_total_volume, estimate_mu, limit_factor,
    prosecution_marginal, ratio_tail, std_from_stderr, CalibrationStats, ConditionPair,
};
use kyle_stealth::model::{HazardModel, ModelParams, PenaltyModel, Strategy};
use kyle_stealth::numerics::lambert_w0;
use kyle_stealth::Error;
use proptest::prelude::*;

fn toy(p: f64) -> ModelParams {
    ModelParams::new(p, 1.0, 1, HazardModel::absolute(1.0, 0.0), PenaltyModel::civil(1.0)).unwrap()
}

fn symmetric_calibrated(r: &kyle_stealth::calibration::CalibrationResult, sigma: f64, chi: f64) -> (ModelParams, Strategy) {
    let z = (r.n_hat_rounded as f64).powf(r.gamma_hat) * sigma * limit_factor(chi).unwrap();
    (calibrated_params(sigma, r.n_hat_rounded, r.gamma_hat, chi), Strategy::new(-z, z).unwrap())
}

#[test]
fn limit_factor_matches_lambert() {
    // χ = 3: 𝔞² = 1 − 2W₀(√e/3), and 𝔞/√2 is the limiting order at K = 1
    let a = limit_factor(3.0).unwrap();
    assert_relative_eq!(a / 2f64.sqrt(), 0.350753, epsilon = 1e-6);
    let w = lambert_w0(0.5f64.exp() / 3.0).unwrap();
    assert_relative_eq!(a * a, 1.0 - 2.0 * w, max_relative = 1e-14);
    assert_eq!(limit_factor(1.0).unwrap(), 1.0);
}

#[test]
fn prosecution_marginal_values() {
    let m = toy(0.3);
    assert_eq!(prosecution_marginal(&m, &Strategy { z0: 0.0, z1: 0.0 }), 0.0);
    let s = Strategy::new(-0.7, 0.7).unwrap();
    assert_relative_eq!(prosecution_marginal(&m, &s), 1.0 - (-0.7f64).exp(), max_relative = 1e-15);
}

#[test]
fn conditional_insider_volume_values() {
    let m = toy(0.3);
    let s = Strategy::new(-2.5, 2.5).unwrap();
    assert_relative_eq!(conditional_insider_volume(&m, &s).unwrap(), 2.5, max_relative = 1e-15);
    // p = 1/3, Z = (−1, 2), λ = |z|
    let m = toy(1.0 / 3.0);
    let s = Strategy::new(-1.0, 2.0).unwrap();
    let (w0, w1) = (2.0 / 3.0 * (1.0 - (-1.0f64).exp()), 1.0 / 3.0 * (1.0 - (-2.0f64).exp()));
    assert_relative_eq!(
        conditional_insider_volume(&m, &s).unwrap(),
        (w0 * 1.0 + w1 * 2.0) / (w0 + w1),
        max_relative = 1e-15
    );
    let zero = ModelParams::new(0.5, 1.0, 1, HazardModel::zero(), PenaltyModel::civil(1.0)).unwrap();
    assert!(matches!(conditional_insider_volume(&zero, &s), Err(Error::Domain(_))));
}

#[test]
fn conditional_total_volume_values() {
    let m = toy(1.0 / 3.0);
    let s = Strategy::new(-1.0, 2.0).unwrap();
    let insider = conditional_insider_volume(&m, &s).unwrap();
    assert_eq!(conditional_total_volume(&m, &s, 0.0).unwrap(), insider);
    assert_relative_eq!(conditional_total_volume(&m, &s, 0.4).unwrap(), 0.4 + insider, max_relative = 1e-15);
    assert!(conditional_total_volume(&m, &s, 1.0).is_err());
}

#[test]
fn ratio_tail_values() {
    let m = calibrated_params(1.0, 10_000, 0.2, 3.0);
    let s = Strategy::new(-3.0, 3.0).unwrap();
    assert!(1.0 - ratio_tail(&m, &s, 0.5, 1.0).unwrap() < 1e-12);
    assert_eq!(ratio_tail(&m, &s, 0.5, f64::INFINITY).unwrap(), 0.0);
    assert!(ratio_tail(&m, &s, 0.5, 1e9).unwrap() < 1e-12);
    // median: |Z|(x − 1) = Nμ
    let x = 1.0 + 10_000.0 * 0.5 / 3.0;
    assert_relative_eq!(ratio_tail(&m, &s, 0.5, x).unwrap(), 0.5, epsilon = 1e-15);
    assert!(ratio_tail(&m, &s, 0.5, 0.5).is_err());
}

#[test]
fn estimate_mu_values() {
    let s = std_from_stderr(10_246.0, 588);
    assert!((s - 248_452.0).abs() <= 1.0, "s = {s}");
    let mu = estimate_mu(9819.0, 113_909.0, 1000.0, s).unwrap();
    assert_relative_eq!(mu, 1.68625, epsilon = 5e-6);
    assert!(matches!(estimate_mu(10.0, 5.0, 1.0, 1.0), Err(Error::Domain(_))));
    // tiny dispersion: μ̂ heads to σ and gets flagged downstream
    assert!(estimate_mu(0.0, 1e6, 1000.0, 1e-3).unwrap() > 999.0);
}

#[test]
fn std_from_stderr_linear() {
    assert_eq!(std_from_stderr(3.5, 1), 3.5);
    assert_relative_eq!(std_from_stderr(7.0, 40), 2.0 * std_from_stderr(3.5, 40), max_relative = 1e-15);
}

#[test]
fn experiment_one_cells() {
    let stats = CalibrationStats::experiment_one();
    let r = calibrate(&stats, 3.0, ConditionPair::InsiderTotal).unwrap();
    assert_eq!(r.n_hat_rounded, 61_729);
    assert!((r.gamma_hat - 0.270651).abs() <= 1e-4);
    assert!(r.warnings.is_empty());
    let r = calibrate(&stats, 1.0, ConditionPair::InsiderRatio).unwrap();
    assert_eq!(r.n_hat_rounded, 45_708);
    assert!((r.gamma_hat - 0.21289).abs() <= 1e-4);
}

#[test]
fn experiment_two_cell() {
    let r = calibrate(&CalibrationStats::experiment_two(), 3.0, ConditionPair::InsiderRatio).unwrap();
    assert_eq!(r.n_hat_rounded, 108_858);
    assert!((r.gamma_hat - 0.19748).abs() <= 1e-4);
    assert!(matches!(
        calibrate(&CalibrationStats::experiment_two(), 3.0, ConditionPair::InsiderTotal),
        Err(Error::MissingStatistic(_))
    ));
}

#[test]
fn population_estimate_free_of_chi() {
    let stats = CalibrationStats::experiment_one();
    for pair in ConditionPair::ALL {
        let ns: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|&c| calibrate(&stats, c, pair).unwrap().n_hat).collect();
        assert!(ns.iter().all(|&n| n == ns[0]));
    }
}

#[test]
fn experiment_one_volumes() {
    let stats = CalibrationStats::experiment_one();
    let r = calibrate(&stats, 3.0, ConditionPair::InsiderTotal).unwrap();
    let (m, s) = symmetric_calibrated(&r, 1000.0, 3.0);
    let insider = conditional_insider_volume(&m, &s).unwrap();
    assert!((insider - 9819.0).abs() <= 3.0, "insider {insider}");
    let total = conditional_total_volume(&m, &s, r.mu_hat).unwrap();
    assert!((total - 113_909.0).abs() <= 3.0, "total {total}");
}

#[test]
fn condition_pair_labels() {
    for pair in ConditionPair::ALL {
        assert_eq!(ConditionPair::parse(pair.label()), Some(pair));
    }
    assert_eq!(ConditionPair::parse("e3"), Some(ConditionPair::TotalRatio));
    assert_eq!(ConditionPair::parse("nope"), None);
}

fn stats(i: f64, extra: f64, r: f64, mu: f64) -> CalibrationStats {
    CalibrationStats {
        insider_volume: i,
        total_volume: Some(i + extra),
        volume_ratio: Some(r),
        total_volume_stderr: None,
        episode_count: None,
        sigma: 1000.0,
        mu: Some(mu),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip(i in 2_000.0f64..20_000.0, extra in 5e4f64..5e5, mu in 0.5f64..5.0, chi in 1.0f64..5.0) {
        let st = stats(i, extra, 0.1, mu);
        let r = calibrate(&st, chi, ConditionPair::InsiderTotal).unwrap();
        let (m, s) = symmetric_calibrated(&r, 1000.0, chi);
        let insider = conditional_insider_volume(&m, &s).unwrap();
        let total = conditional_total_volume(&m, &s, mu).unwrap();
        prop_assert!((insider / i - 1.0).abs() <= 1e-3);
        prop_assert!((total / (i + extra) - 1.0).abs() <= 1e-3);
        // the insider moment at the limit order is N^γ σ 𝔞 itself
        prop_assert!((insider / s.z1 - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn gamma_increasing_in_chi(c1 in 1.0f64..6.0, c2 in 1.0f64..6.0, r in 0.01f64..0.3) {
        prop_assume!((c1 - c2).abs() > 1e-6);
        let (lo, hi) = if c1 < c2 { (c1, c2) } else { (c2, c1) };
        let st = stats(5000.0, 1e5, r, 1.7);
        for pair in ConditionPair::ALL {
            prop_assert!(calibrate(&st, hi, pair).unwrap().gamma_hat > calibrate(&st, lo, pair).unwrap().gamma_hat);
        }
    }

    #[test]
    fn mu_solves_both_equations(i in 0.0f64..1e4, d in 1.0f64..1e6, sigma in 1.0f64..1e4, s in 1.0f64..1e6) {
        let mu = estimate_mu(i, i + d, sigma, s).unwrap();
        let n = d / mu;
        prop_assert!((n * (sigma * sigma - mu * mu) / (s * s) - 1.0).abs() <= 1e-9);
        // doubling s² and v − i together: N doubles, μ unchanged
        let mu2 = estimate_mu(i, i + 2.0 * d, sigma, s * 2f64.sqrt()).unwrap();
        prop_assert!((mu2 / mu - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ratio_tail_monotone(x1 in 1.0f64..50.0, dx in 0.0f64..50.0, z in 0.5f64..5.0, mu in 0.0f64..0.9) {
        let m = calibrated_params(1.0, 100, 0.2, 2.0);
        let s = Strategy::new(-z, 1.3 * z).unwrap();
        let a = ratio_tail(&m, &s, mu, x1).unwrap();
        let b = ratio_tail(&m, &s, mu, x1 + dx).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(b <= a);
    }
}
