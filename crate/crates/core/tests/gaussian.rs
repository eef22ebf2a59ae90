use privexp_core::gaussian::*;
use privexp_core::Error;
use proptest::prelude::*;

fn q(rho: f64, r: f64, l: f64) -> GaussianQuery {
    GaussianQuery::new(rho, r, l).unwrap()
}

// Direct evaluation with powf and log2.
fn oracle(rho: f64, r: f64, l: f64) -> f64 {
    let a = 1.0 - 2f64.powf(-2.0 * r);
    let b = if l.is_infinite() { 1.0 } else { 1.0 - 2f64.powf(-2.0 * l) };
    0.5 * (1.0 / (1.0 - rho * rho * a * b)).log2()
}

#[test]
fn closed_form_examples() {
    assert_eq!(gaussian_tai_exponent(&q(0.8, 0.0, 1.0)).unwrap(), 0.0);
    assert_eq!(gaussian_tai_exponent(&q(0.0, 1.0, 1.0)).unwrap(), 0.0);
    let rw = gaussian_tai_exponent(&q(0.8, 1.0, f64::INFINITY)).unwrap();
    assert!((rw - 0.5 * (1.0 / (1.0 - 0.64 * 0.75f64)).log2()).abs() < 1e-14);
    assert!((rw - 0.471708).abs() < 1e-6);
    assert_eq!(rw, gaussian_full_observation_exponent(0.8, 1.0).unwrap());
    for &(rho, r, l) in &[(0.5, 0.3, 0.7), (0.9, 2.0, 0.1), (1.0, 1.0, 1.0)] {
        assert!((gaussian_tai_exponent(&q(rho, r, l)).unwrap() - oracle(rho, r, l)).abs() < 1e-13);
    }
}

#[test]
fn beta_examples() {
    let g = q(0.8, 1.0, 1.0);
    let v = gaussian_achievable_at_beta(&g, 0.5).unwrap();
    assert!((v - 0.5 * (1.0 / (1.0 - 0.64 * 0.25f64)).log2()).abs() < 1e-14);
    assert!((v - 0.1258).abs() < 1e-4);
    let (lo, hi) = gaussian_beta_bounds(&g).unwrap();
    assert!((lo - 0.25 * 0.75).abs() < 1e-15 && (hi - 0.75).abs() < 1e-15);
    assert_eq!(gaussian_achievable_at_beta(&g, hi).unwrap(), 0.0);
    assert!((gaussian_achievable_at_beta(&g, lo).unwrap() - gaussian_tai_exponent(&g).unwrap()).abs() < 1e-15);
    assert!(matches!(gaussian_achievable_at_beta(&g, 0.1), Err(Error::InfeasibleBeta(_))));
    assert!(matches!(gaussian_achievable_at_beta(&g, 0.8), Err(Error::InfeasibleBeta(_))));
}

#[test]
fn beta_grid_maximum_is_closed_form() {
    for &(rho, r, l) in &[(0.8, 1.0, 1.0), (0.5, 0.2, 2.0), (0.95, 3.0, 0.4)] {
        let g = q(rho, r, l);
        let (lo, hi) = gaussian_beta_bounds(&g).unwrap();
        let n = ((hi - lo) / 1e-4).ceil() as usize;
        let best = (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .map(|b| gaussian_achievable_at_beta(&g, b).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - gaussian_tai_exponent(&g).unwrap()).abs() <= 1e-10);
    }
}

#[test]
fn large_leakage_limit() {
    for &(rho, r) in &[(0.8, 1.0), (0.3, 0.5), (0.99, 2.5)] {
        let lim = 0.5 * (1.0 / (1.0 - rho * rho * (1.0 - 2f64.powf(-2.0 * r)))).log2();
        assert!((gaussian_tai_exponent(&q(rho, r, 30.0)).unwrap() - lim).abs() <= 1e-9);
    }
}

#[test]
fn domain_errors_and_json() {
    assert!(matches!(GaussianQuery::new(1.2, 1.0, 1.0), Err(Error::DomainError(_))));
    assert!(matches!(GaussianQuery::new(0.5, -1.0, 1.0), Err(Error::DomainError(_))));
    assert!(matches!(GaussianQuery::new(0.5, 1.0, f64::NAN), Err(Error::DomainError(_))));
    let g = q(0.8, 1.0, f64::INFINITY);
    let s = serde_json::to_string(&g).unwrap();
    assert!(s.contains("\"+inf\""));
    assert_eq!(serde_json::from_str::<GaussianQuery>(&s).unwrap(), g);
    let back: GaussianQuery = serde_json::from_str(r#"{"rho":0.5,"rate":1,"leakage":2}"#).unwrap();
    assert_eq!(back.leakage, 2.0);
}

proptest! {
    #[test]
    fn monotone_and_symmetric(rho in 0.0..1.0f64, r in 0.0..4.0f64, l in 0.0..4.0f64, d in 0.0..1.0f64) {
        let base = gaussian_tai_exponent(&q(rho, r, l)).unwrap();
        prop_assert!(base >= 0.0);
        prop_assert!(gaussian_tai_exponent(&q((rho + d).min(1.0), r, l)).unwrap() >= base - 1e-13 * base.max(1.0));
        prop_assert!(gaussian_tai_exponent(&q(rho, r + d, l)).unwrap() >= base - 1e-13 * base.max(1.0));
        prop_assert!(gaussian_tai_exponent(&q(rho, r, l + d)).unwrap() >= base - 1e-13 * base.max(1.0));
        prop_assert!((gaussian_tai_exponent(&q(rho, l, r)).unwrap() - base).abs() <= 1e-13 * base.max(1.0));
        prop_assert!(base <= gaussian_full_observation_exponent(rho, r).unwrap() * (1.0 + 1e-13));
    }
}
