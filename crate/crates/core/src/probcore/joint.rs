use serde::{Deserialize, Serialize};

use super::{check_probs, default_labels, labels, Pmf};
use crate::{Error, Result};

/// Joint pmf over two or more named variables, stored row-major
/// (last axis varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint")]
pub struct JointPmf {
    variables: Vec<String>,
    alphabet: Vec<Vec<String>>,
    probs: Vec<f64>,
    #[serde(skip)]
    shape: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawProbs {
    Flat(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Deserialize)]
struct RawJoint {
    #[serde(default)]
    variables: Vec<String>,
    #[serde(deserialize_with = "labels::many")]
    alphabet: Vec<Vec<String>>,
    probs: RawProbs,
}

impl TryFrom<RawJoint> for JointPmf {
    type Error = Error;
    fn try_from(r: RawJoint) -> Result<Self> {
        let probs = match r.probs {
            RawProbs::Flat(v) => v,
            RawProbs::Matrix(rows) => {
                if r.alphabet.len() != 2 || rows.len() != r.alphabet[0].len() {
                    return Err(Error::DimensionMismatch(
                        "nested probs are only accepted for two variables".into(),
                    ));
                }
                if rows.iter().any(|row| row.len() != r.alphabet[1].len()) {
                    return Err(Error::DimensionMismatch("ragged probability matrix".into()));
                }
                rows.concat()
            }
        };
        let variables = if r.variables.is_empty() {
            (0..r.alphabet.len()).map(|i| format!("V{i}")).collect()
        } else {
            r.variables
        };
        JointPmf::with_labels(variables, r.alphabet, probs)
    }
}

impl JointPmf {
    /// Joint pmf with default variable names `V0, V1, ...` and numeric labels.
    pub fn new(shape: &[usize], probs: Vec<f64>) -> Result<Self> {
        let variables = (0..shape.len()).map(|i| format!("V{i}")).collect();
        let alphabet = shape.iter().map(|&k| default_labels(k)).collect();
        Self::with_labels(variables, alphabet, probs)
    }

    pub fn named(variables: &[&str], shape: &[usize], probs: Vec<f64>) -> Result<Self> {
        if variables.len() != shape.len() {
            return Err(Error::DimensionMismatch("one name per axis required".into()));
        }
        let alphabet = shape.iter().map(|&k| default_labels(k)).collect();
        Self::with_labels(variables.iter().map(|s| s.to_string()).collect(), alphabet, probs)
    }

    pub fn with_labels(
        variables: Vec<String>,
        alphabet: Vec<Vec<String>>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        if variables.len() != alphabet.len() || alphabet.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} variable names for {} axes",
                variables.len(),
                alphabet.len()
            )));
        }
        let shape: Vec<usize> = alphabet.iter().map(|a| a.len()).collect();
        let size: usize = shape.iter().product();
        if size != probs.len() || size == 0 {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape:?} needs {size} entries, got {}",
                probs.len()
            )));
        }
        check_probs(&probs, "joint pmf")?;
        Ok(Self { variables, alphabet, probs, shape })
    }

    /// Product law `p ⊗ q` over two axes.
    pub fn product(p: &Pmf, q: &Pmf) -> Result<Self> {
        let mut probs = Vec::with_capacity(p.len() * q.len());
        for &a in p.probs() {
            for &b in q.probs() {
                probs.push(a * b);
            }
        }
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|v| *v /= s);
        Self::with_labels(
            vec!["A".into(), "B".into()],
            vec![p.alphabet().to_vec(), q.alphabet().to_vec()],
            probs,
        )
    }

    /// Doubly symmetric binary source: X ~ Bern(1/2), Y = X xor Bern(q).
    pub fn dsbs(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::DomainError(format!("crossover {q}")));
        }
        Self::named(&["X", "Y"], &[2, 2], vec![(1.0 - q) / 2.0, q / 2.0, q / 2.0, (1.0 - q) / 2.0])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn alphabets(&self) -> &[Vec<String>] {
        &self.alphabet
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn axis_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Returns a copy with variables renamed.
    pub fn rename(mut self, variables: &[&str]) -> Result<Self> {
        if variables.len() != self.ndim() {
            return Err(Error::DimensionMismatch("one name per axis required".into()));
        }
        self.variables = variables.iter().map(|s| s.to_string()).collect();
        Ok(self)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.probs[flat_index(&self.shape, idx)]
    }

    /// Marginal over `axes`, in the order given.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointPmf> {
        let probs = marginal_raw(&self.shape, &self.probs, axes)?;
        Self::with_labels(
            axes.iter().map(|&a| self.variables[a].clone()).collect(),
            axes.iter().map(|&a| self.alphabet[a].clone()).collect(),
            renorm(probs),
        )
    }

    /// Single-axis marginal as a `Pmf`.
    pub fn marginal_pmf(&self, axis: usize) -> Result<Pmf> {
        let probs = marginal_raw(&self.shape, &self.probs, &[axis])?;
        Pmf::with_alphabet(self.alphabet[axis].clone(), renorm(probs))
    }

    /// Sums out `axis`. A two-axis joint becomes a one-axis joint.
    pub fn marginalize(&self, axis: usize) -> Result<JointPmf> {
        if axis >= self.ndim() {
            return Err(Error::DimensionMismatch(format!("no axis {axis}")));
        }
        if self.ndim() == 1 {
            return Err(Error::DimensionMismatch("cannot sum out the only axis".into()));
        }
        let keep: Vec<usize> = (0..self.ndim()).filter(|&a| a != axis).collect();
        self.marginal(&keep)
    }

    /// Product of the single-axis marginals.
    pub fn product_of_marginals(&self) -> Result<JointPmf> {
        let margs: Vec<Vec<f64>> = (0..self.ndim())
            .map(|a| marginal_raw(&self.shape, &self.probs, &[a]))
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; self.probs.len()];
        let mut idx = vec![0usize; self.ndim()];
        for v in out.iter_mut() {
            *v = idx.iter().zip(&margs).map(|(&i, m)| m[i]).product();
            advance(&mut idx, &self.shape);
        }
        Self::with_labels(self.variables.clone(), self.alphabet.clone(), renorm(out))
    }

    /// Two-axis joint as a matrix of rows.
    pub fn as_matrix(&self) -> Result<Vec<Vec<f64>>> {
        if self.ndim() != 2 {
            return Err(Error::DimensionMismatch("expected two axes".into()));
        }
        Ok(self.probs.chunks(self.shape[1]).map(|r| r.to_vec()).collect())
    }

    pub fn same_alphabets(&self, other: &JointPmf) -> bool {
        self.shape == other.shape
    }
}

pub(crate) fn flat_index(shape: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &k)| acc * k + i)
}

/// Odometer increment, last axis fastest.
pub(crate) fn advance(idx: &mut [usize], shape: &[usize]) {
    for a in (0..shape.len()).rev() {
        idx[a] += 1;
        if idx[a] < shape[a] {
            return;
        }
        idx[a] = 0;
    }
}

/// Marginal of a row-major tensor onto `axes` (in that order).
pub(crate) fn marginal_raw(shape: &[usize], probs: &[f64], axes: &[usize]) -> Result<Vec<f64>> {
    for (i, &a) in axes.iter().enumerate() {
        if a >= shape.len() || axes[..i].contains(&a) {
            return Err(Error::DimensionMismatch(format!("bad axis list {axes:?}")));
        }
    }
    let sub: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    let mut out = vec![0.0; sub.iter().product()];
    let mut idx = vec![0usize; shape.len()];
    for &p in probs {
        let j = axes.iter().fold(0, |acc, &a| acc * shape[a] + idx[a]);
        out[j] += p;
        advance(&mut idx, shape);
    }
    Ok(out)
}

fn renorm(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}
