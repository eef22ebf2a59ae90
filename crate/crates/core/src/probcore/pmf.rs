use serde::{Deserialize, Serialize};

use super::{check_probs, default_labels, labels};
use crate::{Error, Result};

/// A probability mass function over a finite labelled alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf")]
pub struct Pmf {
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPmf {
    #[serde(default, deserialize_with = "labels::one")]
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<RawPmf> for Pmf {
    type Error = Error;
    fn try_from(r: RawPmf) -> Result<Self> {
        if r.alphabet.is_empty() {
            Pmf::new(r.probs)
        } else {
            Pmf::with_alphabet(r.alphabet, r.probs)
        }
    }
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs, "pmf")?;
        Ok(Self { alphabet: default_labels(probs.len()), probs })
    }

    pub fn with_alphabet(alphabet: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if alphabet.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} probabilities",
                alphabet.len(),
                probs.len()
            )));
        }
        check_probs(&probs, "pmf")?;
        Ok(Self { alphabet, probs })
    }

    /// Rescales nonnegative weights to unit mass. Never applied implicitly.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPmf("negative or non-finite weight".into()));
        }
        let s: f64 = weights.iter().sum();
        if s <= 0.0 {
            return Err(Error::InvalidPmf("zero total mass".into()));
        }
        Self::new(weights.into_iter().map(|w| w / s).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPmf("empty alphabet".into()));
        }
        Self::new(vec![1.0 / k as f64; k])
    }

    pub fn point(k: usize, at: usize) -> Result<Self> {
        if at >= k {
            return Err(Error::DimensionMismatch(format!("point {at} outside alphabet of {k}")));
        }
        let mut p = vec![0.0; k];
        p[at] = 1.0;
        Self::new(p)
    }

    /// `[1 - p, p]`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::DomainError(format!("bernoulli parameter {p}")));
        }
        Self::new(vec![1.0 - p, p])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<usize> for Pmf {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}
