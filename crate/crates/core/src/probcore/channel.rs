use serde::{Deserialize, Serialize};

use super::{check_probs, default_labels, labels, JointPmf, Pmf};
use crate::{Error, Result};

/// Row-stochastic conditional pmf: `probs[x][y] = P(y | x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct Channel {
    input_alphabet: Vec<String>,
    alphabet: Vec<String>,
    probs: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawChannel {
    #[serde(default, deserialize_with = "labels::one")]
    input_alphabet: Vec<String>,
    #[serde(default, deserialize_with = "labels::one")]
    alphabet: Vec<String>,
    probs: Vec<Vec<f64>>,
}

impl TryFrom<RawChannel> for Channel {
    type Error = Error;
    fn try_from(r: RawChannel) -> Result<Self> {
        let rows = r.probs.len();
        let cols = r.probs.first().map_or(0, |v| v.len());
        let inp = if r.input_alphabet.is_empty() { default_labels(rows) } else { r.input_alphabet };
        let out = if r.alphabet.is_empty() { default_labels(cols) } else { r.alphabet };
        Channel::with_labels(inp, out, r.probs)
    }
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, |v| v.len());
        Self::with_labels(default_labels(rows.len()), default_labels(cols), rows)
    }

    pub fn with_labels(
        input_alphabet: Vec<String>,
        alphabet: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.is_empty() || rows.len() != input_alphabet.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows for {} input symbols",
                rows.len(),
                input_alphabet.len()
            )));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != alphabet.len() {
                return Err(Error::DimensionMismatch(format!(
                    "row {x} has {} entries, expected {}",
                    row.len(),
                    alphabet.len()
                )));
            }
            check_probs(row, &format!("channel row {x}"))?;
        }
        Ok(Self { input_alphabet, alphabet, probs: rows })
    }

    /// Builds from row-major entries, rescaling each row to unit mass.
    pub(crate) fn from_flat_normalized(n_in: usize, n_out: usize, flat: &[f64]) -> Result<Self> {
        let rows = flat
            .chunks(n_out)
            .take(n_in)
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.iter().map(|v| v / s).collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect())
    }

    /// k-ary symmetric channel: keep the input with probability `1 - eps`,
    /// otherwise move uniformly to one of the other `k - 1` symbols.
    pub fn symmetric(k: usize, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) || k < 2 {
            return Err(Error::DomainError(format!("symmetric channel k={k}, eps={eps}")));
        }
        let off = eps / (k - 1) as f64;
        Self::new(
            (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 - eps } else { off }).collect()).collect(),
        )
    }

    pub fn bsc(eps: f64) -> Result<Self> {
        Self::symmetric(2, eps)
    }

    /// Every input maps to the same output law.
    pub fn constant(k_in: usize, out: &Pmf) -> Result<Self> {
        Self::new(vec![out.probs().to_vec(); k_in])
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn n_inputs(&self) -> usize {
        self.probs.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.alphabet.len()
    }

    pub fn input_alphabet(&self) -> &[String] {
        &self.input_alphabet
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x][y]
    }

    /// Joint law `p(x) ch(y|x)` with axes (input, output).
    pub fn compose(&self, p: &Pmf) -> Result<JointPmf> {
        if p.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch(format!(
                "pmf over {} symbols into channel with {} inputs",
                p.len(),
                self.n_inputs()
            )));
        }
        let mut probs = Vec::with_capacity(p.len() * self.n_outputs());
        for (x, row) in self.probs.iter().enumerate() {
            probs.extend(row.iter().map(|w| p[x] * w));
        }
        JointPmf::with_labels(
            vec!["in".into(), "out".into()],
            vec![self.input_alphabet.clone(), self.alphabet.clone()],
            probs,
        )
    }

    /// Output law of `p` pushed through the channel.
    pub fn apply(&self, p: &Pmf) -> Result<Pmf> {
        self.compose(p)?.marginal_pmf(1)
    }

    /// Cascade `self` then `next`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        if self.n_outputs() != next.n_inputs() {
            return Err(Error::DimensionMismatch("cascade alphabets differ".into()));
        }
        let rows = self
            .probs
            .iter()
            .map(|row| {
                (0..next.n_outputs())
                    .map(|z| row.iter().enumerate().map(|(y, w)| w * next.probs[y][z]).sum())
                    .collect()
            })
            .collect();
        Channel::with_labels(self.input_alphabet.clone(), next.alphabet.clone(), rows)
    }

    /// Adds an output symbol that no input reaches.
    pub fn with_extra_output(&self, label: &str) -> Result<Channel> {
        let mut alphabet = self.alphabet.clone();
        alphabet.push(label.to_string());
        let rows = self.probs.iter().map(|r| r.iter().cloned().chain([0.0]).collect()).collect();
        Channel::with_labels(self.input_alphabet.clone(), alphabet, rows)
    }

    /// Adds an input symbol mapped deterministically to output `to`.
    pub fn with_extra_input(&self, label: &str, to: usize) -> Result<Channel> {
        let mut input = self.input_alphabet.clone();
        input.push(label.to_string());
        let mut rows = self.probs.clone();
        rows.push((0..self.n_outputs()).map(|j| if j == to { 1.0 } else { 0.0 }).collect());
        Channel::with_labels(input, self.alphabet.clone(), rows)
    }
}
