//! Finite-alphabet probability primitives.
//!
//! All information quantities are in bits.

mod channel;
pub(crate) mod info;
pub(crate) mod joint;
mod pmf;
mod types;

pub use channel::Channel;
pub use info::{
    binary_entropy, binary_entropy_inv, entropy, kl_divergence, kl_divergence_joint,
    mutual_information, mutual_information_between, star, tv_distance, Divergence, LOG2_E,
};
pub use joint::JointPmf;
pub use pmf::Pmf;
pub use types::{empirical_type, is_typical, TypicalityParams};

/// Tolerance used when validating that probabilities sum to one.
pub const PMF_TOL: f64 = 1e-12;

pub(crate) fn default_labels(k: usize) -> Vec<String> {
    (0..k).map(|i| i.to_string()).collect()
}

pub(crate) fn check_probs(probs: &[f64], what: &str) -> crate::Result<()> {
    if probs.is_empty() {
        return Err(crate::Error::InvalidPmf(format!("{what}: empty")));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(crate::Error::InvalidPmf(format!("{what}: bad entry {p}")));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > PMF_TOL {
        return Err(crate::Error::InvalidPmf(format!("{what}: sums to {s}")));
    }
    Ok(())
}

/// Accepts labels written either as JSON strings or numbers.
pub(crate) mod labels {
    use serde::{Deserialize, Deserializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Label {
        S(String),
        N(serde_json::Number),
        B(bool),
    }

    impl From<Label> for String {
        fn from(l: Label) -> String {
            match l {
                Label::S(s) => s,
                Label::N(n) => n.to_string(),
                Label::B(b) => b.to_string(),
            }
        }
    }

    pub fn one<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
        let v: Vec<Label> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(String::from).collect())
    }

    pub fn many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<String>>, D::Error> {
        let v: Vec<Vec<Label>> = Vec::deserialize(d)?;
        Ok(v
            .into_iter()
            .map(|a| a.into_iter().map(String::from).collect())
            .collect())
    }
}
