use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::joint::marginal_raw;
use super::{JointPmf, Pmf};
use crate::{Error, Result};

/// log2(e).
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// A KL divergence value; `Infinite` when absolute continuity fails.
/// Serializes as a number or the string `"+inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn is_finite(&self) -> bool {
        matches!(self, Divergence::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Divergence::Finite(v) => Some(*v),
            Divergence::Infinite => None,
        }
    }

    /// Float view, `f64::INFINITY` for the flag value.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Divergence::Finite(v) => write!(f, "{v}"),
            Divergence::Infinite => f.write_str("+inf"),
        }
    }
}

impl Serialize for Divergence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Divergence::Finite(v) => s.serialize_f64(*v),
            Divergence::Infinite => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Divergence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(v) => Ok(Divergence::Finite(v)),
            Raw::S(s) if s == "+inf" => Ok(Divergence::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!("unexpected divergence {s:?}"))),
        }
    }
}

pub(crate) fn entropy_raw(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>()
}

pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> Divergence {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Divergence::Infinite;
            }
            d += a * (a / b).log2();
        }
    }
    Divergence::Finite(d.max(0.0))
}

/// I(A;B) for a row-major `na x nb` matrix.
pub(crate) fn mi_raw(j: &[f64], na: usize, nb: usize) -> f64 {
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            let v = j[a * nb + b];
            pa[a] += v;
            pb[b] += v;
        }
    }
    let mut i = 0.0;
    for a in 0..na {
        for b in 0..nb {
            let v = j[a * nb + b];
            if v > 0.0 {
                i += v * (v / (pa[a] * pb[b])).log2();
            }
        }
    }
    i.max(0.0)
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(p: &Pmf) -> f64 {
    entropy_raw(p.probs())
}

/// D(p || q) in bits.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<Divergence> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} symbols", p.len(), q.len())));
    }
    Ok(kl_raw(p.probs(), q.probs()))
}

/// D(p || q) for joint pmfs of identical shape.
pub fn kl_divergence_joint(p: &JointPmf, q: &JointPmf) -> Result<Divergence> {
    if p.shape() != q.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", p.shape(), q.shape())));
    }
    Ok(kl_raw(p.probs(), q.probs()))
}

/// I(A;B) of a two-variable joint.
pub fn mutual_information(j: &JointPmf) -> Result<f64> {
    if j.ndim() != 2 {
        return Err(Error::DimensionMismatch(format!("expected 2 axes, got {}", j.ndim())));
    }
    Ok(mi_raw(j.probs(), j.shape()[0], j.shape()[1]))
}

/// I(A;B) where A and B are disjoint groups of axes of `j`.
pub fn mutual_information_between(j: &JointPmf, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.iter().any(|x| b.contains(x)) {
        return Err(Error::DimensionMismatch("axis groups overlap".into()))?;
    }
    let axes: Vec<usize> = a.iter().chain(b).cloned().collect();
    let m = marginal_raw(j.shape(), j.probs(), &axes)?;
    let na = a.iter().map(|&x| j.shape()[x]).product();
    let nb = b.iter().map(|&x| j.shape()[x]).product();
    Ok(mi_raw(&m, na, nb))
}

/// Total variation distance ½ Σ |p − q|.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// h_b(p).
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Inverse of h_b restricted to [0, ½], by bisection.
pub fn binary_entropy_inv(h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::DomainError(format!("binary entropy {h} outside [0,1]")));
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    if h == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Binary convolution a(1−b) + (1−a)b.
pub fn star(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + (1.0 - a) * b
}
