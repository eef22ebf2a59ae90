//! Jointly Gaussian testing against independence: unit-variance X, Y with
//! correlation ρ under the null, a Gaussian privacy mechanism and quantizer.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slack on the β² feasibility interval for float rounding at its ends.
const BETA_SLACK: f64 = 1e-15;

/// `leakage` may be `f64::INFINITY` (no privacy constraint); it serializes
/// as the string "+inf".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianQuery {
    pub rho: f64,
    pub rate: f64,
    #[serde(with = "maybe_inf")]
    pub leakage: f64,
}

impl GaussianQuery {
    pub fn new(rho: f64, rate: f64, leakage: f64) -> Result<Self> {
        let q = Self { rho, rate, leakage };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::DomainError(format!("rho {} outside [0, 1]", self.rho)));
        }
        if !(self.rate >= 0.0) {
            return Err(Error::DomainError(format!("rate {}", self.rate)));
        }
        if !(self.leakage >= 0.0) {
            return Err(Error::DomainError(format!("leakage {}", self.leakage)));
        }
        Ok(())
    }
}

/// 1 − 2^{−2t}, exact 1 at t = ∞.
fn gain(t: f64) -> f64 {
    -(-2.0 * t * std::f64::consts::LN_2).exp_m1()
}

fn half_log_inv(x: f64) -> f64 {
    // ½ log2(1 / (1 − x))
    -0.5 * (-x).ln_1p() / std::f64::consts::LN_2
}

/// ½ log2(1 / (1 − ρ² (1 − 2^{−2R}) (1 − 2^{−2L}))).
pub fn gaussian_tai_exponent(q: &GaussianQuery) -> Result<f64> {
    q.validate()?;
    Ok(half_log_inv(q.rho * q.rho * gain(q.rate) * gain(q.leakage)))
}

/// The leakage-free exponent ½ log2(1 / (1 − ρ² (1 − 2^{−2R}))).
pub fn gaussian_full_observation_exponent(rho: f64, rate: f64) -> Result<f64> {
    gaussian_tai_exponent(&GaussianQuery::new(rho, rate, f64::INFINITY)?)
}

/// Feasible interval [2^{−2R}(1 − 2^{−2L}), 1 − 2^{−2L}] for β².
pub fn gaussian_beta_bounds(q: &GaussianQuery) -> Result<(f64, f64)> {
    q.validate()?;
    let hi = gain(q.leakage);
    Ok(((1.0 - gain(q.rate)) * hi, hi))
}

/// ½ log2(1 / (1 − ρ² (1 − 2^{−2L} − β²))) for feasible β².
pub fn gaussian_achievable_at_beta(q: &GaussianQuery, beta_sq: f64) -> Result<f64> {
    let (lo, hi) = gaussian_beta_bounds(q)?;
    if !(beta_sq >= lo - BETA_SLACK && beta_sq <= hi + BETA_SLACK) {
        return Err(Error::InfeasibleBeta(format!("beta^2 = {beta_sq} outside [{lo}, {hi}]")));
    }
    Ok(half_log_inv(q.rho * q.rho * (hi - beta_sq).max(0.0)))
}

mod maybe_inf {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("+inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) if matches!(s.as_str(), "+inf" | "inf" | "Infinity") => Ok(f64::INFINITY),
            Raw::Str(s) => Err(de::Error::custom(format!("expected a number or \"+inf\", got {s:?}"))),
        }
    }
}
