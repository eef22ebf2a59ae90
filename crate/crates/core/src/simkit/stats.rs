//! Binomial confidence intervals.

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `k` successes in `t` trials.
pub fn wilson95(k: u64, t: u64) -> [f64; 2] {
    if t == 0 {
        return [0.0, 1.0];
    }
    let (k, t) = (k as f64, t as f64);
    let p = k / t;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / t;
    let centre = (p + z2 / (2.0 * t)) / denom;
    let half = Z95 * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    [(centre - half).max(0.0), (centre + half).min(1.0)]
}

/// One-sided 95% Clopper–Pearson upper bound when no successes were seen:
/// the p with (1 − p)^t = 0.05.
pub fn clopper_pearson_zero95(t: u64) -> f64 {
    if t == 0 {
        return 1.0;
    }
    1.0 - 0.05f64.powf(1.0 / t as f64)
}

/// Standard error of a binomial proportion estimate.
pub fn binomial_se(p: f64, t: u64) -> f64 {
    if t == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / t as f64).sqrt()
}
