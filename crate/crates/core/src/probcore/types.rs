use serde::{Deserialize, Serialize};

use super::{tv_distance, JointPmf};
use crate::{Error, Result};

/// Slack added to the closed typicality ball to absorb rounding in types.
const BALL_SLACK: f64 = 1e-12;

/// Nested typicality radii: observer μ/4, transmitter μ/2, receiver μ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalityParams {
    pub mu: f64,
}

impl TypicalityParams {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::DomainError(format!("typicality radius {mu}")));
        }
        Ok(Self { mu })
    }

    pub fn observer(&self) -> f64 {
        self.mu / 4.0
    }

    pub fn transmitter(&self) -> f64 {
        self.mu / 2.0
    }

    pub fn receiver(&self) -> f64 {
        self.mu
    }
}

/// Joint type of equal-length sequences. `sizes[i]` is the alphabet size of
/// sequence `i`; each sequence becomes one axis.
pub fn empirical_type(seqs: &[&[usize]], sizes: &[usize]) -> Result<JointPmf> {
    if seqs.is_empty() || seqs.len() != sizes.len() {
        return Err(Error::DimensionMismatch("one alphabet size per sequence".into()));
    }
    let n = seqs[0].len();
    if n == 0 {
        return Err(Error::LengthMismatch("empty sequence".into()));
    }
    if let Some(s) = seqs.iter().find(|s| s.len() != n) {
        return Err(Error::LengthMismatch(format!("lengths {n} and {}", s.len())));
    }
    let mut counts = vec![0usize; sizes.iter().product()];
    for i in 0..n {
        let mut j = 0;
        for (s, &k) in seqs.iter().zip(sizes) {
            if s[i] >= k {
                return Err(Error::DimensionMismatch(format!("symbol {} outside alphabet {k}", s[i])));
            }
            j = j * k + s[i];
        }
        counts[j] += 1;
    }
    JointPmf::new(sizes, counts.into_iter().map(|c| c as f64 / n as f64).collect())
}

/// Closed-ball total-variation typicality test.
pub fn is_typical(j: &JointPmf, target: &JointPmf, mu: f64) -> Result<bool> {
    if j.shape() != target.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", j.shape(), target.shape())));
    }
    if !(mu > 0.0) {
        return Err(Error::DomainError(format!("typicality radius {mu}")));
    }
    Ok(tv_distance(j.probs(), target.probs()) <= mu + BALL_SLACK)
}
