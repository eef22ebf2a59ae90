//! Quick oracle checks. The report holds no timings, so equal seeds give
//! byte-identical output.

use privexp_core::euclid::{binary_euclid_approx, euclid_tai_approx};
use privexp_core::exponents::search::golden_max;
use privexp_core::exponents::{
    binary_tai_argmax, binary_tai_exponent, tai_exponent, zero_rate_exponent, ExponentQuery, SearchConfig,
};
use privexp_core::gaussian::{
    gaussian_achievable_at_beta, gaussian_beta_bounds, gaussian_full_observation_exponent, gaussian_tai_exponent,
    GaussianQuery,
};
use privexp_core::iproject::{brute_force_i_project, i_project, MarginalConstraint};
use privexp_core::probcore::{JointPmf, Pmf};
use privexp_core::simkit::rng::derive;
use privexp_core::simkit::{run_general_scheme, run_memoryless_scheme, Hypothesis, SchemeConfig};
use serde::Serialize;

use crate::Failure;

const STREAM_SELFTEST: u64 = 0x5e1f;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// Allowed |value − reference|, or the allowed excess for one-sided checks.
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

struct Checks(Vec<Check>);

impl Checks {
    fn close(&mut self, name: impl Into<String>, value: f64, reference: f64, tolerance: f64) {
        let passed = (value - reference).abs() <= tolerance;
        self.0.push(Check { name: name.into(), value, reference, tolerance, passed });
    }

    fn at_most(&mut self, name: impl Into<String>, value: f64, bound: f64, slack: f64) {
        let passed = value <= bound + slack;
        self.0.push(Check { name: name.into(), value, reference: bound, tolerance: slack, passed });
    }
}

/// Uniform draw in [lo, hi) from the counter-based splitter.
fn unit(seed: u64, i: u64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (derive(seed, STREAM_SELFTEST, i) >> 11) as f64 / (1u64 << 53) as f64
}

fn random_pmf(seed: u64, base: u64, len: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..len as u64).map(|i| unit(seed, base + i, 0.05, 1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn run(seed: u64) -> Result<Report, Failure> {
    let mut c = Checks(Vec::new());
    let p = JointPmf::dsbs(0.1)?;
    let cfg = SearchConfig::default();

    for (r, l) in [(0.5, 0.5), (1.0, 1.0), (0.25, 0.8)] {
        let numeric = tai_exponent(&p, &ExponentQuery::new(r, l)?, &cfg)?.theta;
        c.close(format!("tai_vs_closed_form_R{r}_L{l}"), numeric, binary_tai_exponent(0.1, r, l)?, 1e-2);
    }
    c.close("tai_zero_rate", tai_exponent(&p, &ExponentQuery::new(0.0, 1.0)?, &cfg)?.theta, 0.0, 1e-6);
    c.close("tai_zero_leakage", tai_exponent(&p, &ExponentQuery::new(1.0, 0.0)?, &cfg)?.theta, 0.0, 1e-6);
    let ind = p.product_of_marginals()?;
    c.close("zero_rate_independence", zero_rate_exponent(&ind, &ind)?.theta, 0.0, 1e-9);

    for k in 0..5u64 {
        let base = 100 * k;
        let r = JointPmf::new(&[2, 2, 2], random_pmf(seed, base, 8))?;
        let w = JointPmf::new(&[2, 2, 2], random_pmf(seed, base + 50, 8))?;
        let cons = [
            MarginalConstraint::from_joint(&[0, 2], &w.marginal(&[0, 2])?)?,
            MarginalConstraint::from_joint(&[1, 2], &w.marginal(&[1, 2])?)?,
        ];
        let a = i_project(&r, &cons, 1e-10, 100_000)?.min_kl;
        let b = brute_force_i_project(&r, &cons, 1e-3)?.min_kl;
        c.close(format!("iproject_vs_brute_force_{k}"), a, b, 1e-3);
    }

    let uniform = Pmf::uniform(2)?;
    for t in [0.005, 0.01, 0.02] {
        let exact = binary_tai_exponent(0.1, t, t)?;
        let approx = binary_euclid_approx(0.1, t, t)?;
        c.close(format!("euclid_relative_error_{t}"), (approx - exact).abs() / exact, 0.0, 0.15);
    }
    let closed = binary_euclid_approx(0.1, 0.01, 0.01)?;
    let general = euclid_tai_approx(&p, 0.01, 0.01, &uniform, &cfg)?;
    c.close("euclid_general_vs_closed_form", general / closed, 1.0, 0.05);

    let q = GaussianQuery::new(0.9, 1.0, 0.5)?;
    let (lo, hi) = gaussian_beta_bounds(&q)?;
    let (_, best) = golden_max(|b| gaussian_achievable_at_beta(&q, b).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-14);
    c.close("gaussian_beta_maximum", best, gaussian_tai_exponent(&q)?, 1e-10);
    let limit = gaussian_tai_exponent(&GaussianQuery::new(0.9, 1.0, f64::INFINITY)?)?;
    c.close("gaussian_no_privacy_limit", limit, gaussian_full_observation_exponent(0.9, 1.0)?, 1e-12);

    let (v, w) = binary_tai_argmax(0.5, 0.5)?;
    let mut sim = SchemeConfig::new(12, 0.3, 0.5, v, w);
    sim.seed = seed;
    sim.trials = 4000;
    sim.hypothesis = Hypothesis::Alt;
    let rep = run_memoryless_scheme(&sim, &p)?;
    if let (Some(e), Some(se)) = (rep.empirical_exponent, rep.exponent_se) {
        c.at_most("simulated_exponent_below_theory", e, binary_tai_exponent(0.1, 0.5, 0.5)?, 2.0 * se);
    }
    sim.hypothesis = Hypothesis::Null;
    let gen = run_general_scheme(&sim, &p, &ind)?;
    c.at_most("privacy_plugin_below_bound", gen.privacy_plugin_bits, gen.privacy_bound_bits, 0.0);

    let passed = c.0.iter().all(|x| x.passed);
    Ok(Report { seed, checks: c.0, passed })
}
