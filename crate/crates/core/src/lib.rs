//! Type-II error exponents for distributed hypothesis testing when the
//! observer's data must pass through a mutual-information privacy mechanism.
//!
//! Modules, bottom up:
//! - [`probcore`]: pmfs, channels, entropies, divergences, types.
//! - [`iproject`]: KL projection onto fixed-marginal families.
//! - [`exponents`]: achievable and exact exponents, binary closed form.
//! - [`euclid`]: local (χ²) approximation for small rate and leakage.
//! - [`gaussian`]: jointly Gaussian closed form.
//! - [`simkit`]: Monte Carlo simulation of the random-coding schemes.

pub mod error;
pub mod euclid;
pub mod exponents;
pub mod gaussian;
pub mod iproject;
pub mod probcore;
pub mod simkit;

pub use error::{Error, Result};
