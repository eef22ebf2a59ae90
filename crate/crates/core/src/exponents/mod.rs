//! Type-II error exponents under rate and privacy-leakage constraints.
//!
//! - [`theorem1_lower_bound`]: achievable exponent for general hypotheses,
//!   max over (P_{U|X̂}, P_{X̂|X}) of an I-projection.
//! - [`tai_exponent`]: exact exponent for testing against independence with a
//!   memoryless mechanism, max I(U;Y) s.t. I(U;X̂) <= R, I(X;X̂) <= L.
//! - [`zero_rate_exponent`], [`corollary2_bound`]: the R = 0 and L > H(X)
//!   specializations.
//! - [`binary_tai_exponent`]: closed form for the doubly symmetric binary source.

mod binary;
pub mod search;
mod tai;
mod theorem1;

use serde::{Deserialize, Serialize};

pub use binary::{binary_tai_argmax, binary_tai_exponent};
pub use tai::tai_exponent;
pub use theorem1::{corollary2_bound, theorem1_lower_bound, zero_rate_exponent};

use crate::probcore::{Channel, JointPmf};
use crate::{Error, Result};

/// Slack on information constraints when filtering grid points.
pub const CONSTRAINT_SLACK: f64 = 1e-12;
/// Largest outer grid a search will enumerate before refusing.
pub const MAX_OUTER_POINTS: f64 = 2e5;

/// Rate-privacy pair, bits per symbol. `epsilon` is the type-I error bound;
/// the exponents do not depend on it and it is only echoed in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentQuery {
    pub rate: f64,
    pub leakage: f64,
    #[serde(default)]
    pub epsilon: f64,
}

impl ExponentQuery {
    pub fn new(rate: f64, leakage: f64) -> Result<Self> {
        Self::with_epsilon(rate, leakage, 0.0)
    }

    pub fn with_epsilon(rate: f64, leakage: f64, epsilon: f64) -> Result<Self> {
        let q = Self { rate, leakage, epsilon };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0) || self.rate.is_nan() {
            return Err(Error::DomainError(format!("rate {}", self.rate)));
        }
        if !(self.leakage >= 0.0) || self.leakage.is_nan() {
            return Err(Error::DomainError(format!("leakage {}", self.leakage)));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::DomainError(format!("epsilon {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Which channels the outer search ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelFamily {
    /// Arbitrary row-stochastic matrices.
    #[default]
    General,
    /// k-ary symmetric channels only (one crossover parameter each).
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Spacing of the outer grid over channel entries, in (0, ½].
    pub grid_step: f64,
    /// Rounds of local refinement after the grid.
    pub refine_rounds: usize,
    /// |U|; `None` picks the default of the method.
    #[serde(default)]
    pub u_cardinality: Option<usize>,
    /// |X̂|; `None` means |X̂| = |X|.
    #[serde(default)]
    pub xhat_cardinality: Option<usize>,
    #[serde(default)]
    pub family: ChannelFamily,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.02,
            refine_rounds: 3,
            u_cardinality: None,
            xhat_cardinality: None,
            family: ChannelFamily::General,
        }
    }
}

impl SearchConfig {
    /// Coarser defaults for the four-variable search of the general bound.
    pub fn theorem1_default() -> Self {
        Self { grid_step: 0.25, refine_rounds: 2, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return Err(Error::InvalidConfig(format!("grid_step {} not in (0, 0.5]", self.grid_step)));
        }
        if self.u_cardinality == Some(0) || self.xhat_cardinality == Some(0) {
            return Err(Error::InvalidConfig("cardinalities must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    LowerBound,
    Exact,
    Approximation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentResult {
    /// Exponent, bits.
    pub theta: f64,
    pub bound_kind: BoundKind,
    pub query: Option<ExponentQuery>,
    /// P_{X̂|X} at the optimum.
    pub privacy_channel: Option<Channel>,
    /// P_{U|X̂} at the optimum.
    pub quantizer: Option<Channel>,
    /// Minimizer of the inner divergence at the optimum, when there is one.
    pub inner_witness: Option<JointPmf>,
    /// I(U;X̂) at the optimum.
    pub rate_used: Option<f64>,
    /// I(X;X̂) at the optimum.
    pub leakage_used: Option<f64>,
    /// Outer grid spacing the value is accurate to; absent for closed forms.
    pub grid_step: Option<f64>,
    /// Objective evaluations spent.
    pub evaluations: usize,
}

impl ExponentResult {
    pub(crate) fn closed_form(theta: f64, kind: BoundKind) -> Self {
        Self {
            theta,
            bound_kind: kind,
            query: None,
            privacy_channel: None,
            quantizer: None,
            inner_witness: None,
            rate_used: None,
            leakage_used: None,
            grid_step: None,
            evaluations: 0,
        }
    }
}

/// Checks that null and alternative live on the same two-variable alphabet.
pub(crate) fn check_pair(p: &JointPmf, q: &JointPmf) -> Result<()> {
    if p.ndim() != 2 || q.ndim() != 2 {
        return Err(Error::DimensionMismatch("expected joints over (X, Y)".into()));
    }
    if p.shape() != q.shape() {
        return Err(Error::AlphabetMismatch(format!("{:?} vs {:?}", p.shape(), q.shape())));
    }
    Ok(())
}
