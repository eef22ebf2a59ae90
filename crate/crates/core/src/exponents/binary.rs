use crate::probcore::{binary_entropy, binary_entropy_inv, star, Channel};
use crate::{Error, Result};

fn check(q: f64, rate: f64, leak: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::DomainError(format!("crossover {q} outside [0, 1/2]")));
    }
    if !(rate >= 0.0) || !(leak >= 0.0) {
        return Err(Error::DomainError(format!("rate {rate}, leakage {leak}")));
    }
    Ok(())
}

/// Exponent for X ~ Bern(½), Y = X ⊕ Bern(q) tested against independence:
/// 1 − h_b(q ⋆ h_b⁻¹(1−L) ⋆ h_b⁻¹(1−R)). R and L above 1 saturate.
pub fn binary_tai_exponent(q: f64, rate: f64, leak: f64) -> Result<f64> {
    check(q, rate, leak)?;
    let a = binary_entropy_inv(1.0 - leak.min(1.0))?;
    let b = binary_entropy_inv(1.0 - rate.min(1.0))?;
    Ok((1.0 - binary_entropy(star(star(q, a), b))).max(0.0))
}

/// The optimal mechanism and quantizer for the binary case:
/// P_{X̂|X} = BSC(h_b⁻¹(1−L)) and P_{U|X̂} = BSC(h_b⁻¹(1−R)).
pub fn binary_tai_argmax(rate: f64, leak: f64) -> Result<(Channel, Channel)> {
    check(0.0, rate, leak)?;
    let a = binary_entropy_inv(1.0 - leak.min(1.0))?;
    let b = binary_entropy_inv(1.0 - rate.min(1.0))?;
    Ok((Channel::bsc(a)?, Channel::bsc(b)?))
}
