//! Euclidean (χ²) approximation of the testing-against-independence exponent
//! for small rate and leakage.
//!
//! Conditional laws are written as perturbations of the marginals,
//! P_{X̂|U=u} = P_X̂ + √P_X̂ ∘ k_u and P_{X|X̂=x̂} = P_X + √P_X ∘ k_x̂. To second
//! order the exponent becomes
//!
//! ```text
//! max (log2 e / 2) Σ_u P_U(u) ‖B K [√P_X̂] k_u‖²
//!   s.t. Σ_u P_U(u) ‖k_u‖² <= 2R / log2 e,  Σ_x̂ P_X̂(x̂) ‖k_x̂‖² <= 2L / log2 e
//! ```
//!
//! with B = [√P_Y]⁻¹ W [√P_X]. The problem is solved by alternating between
//! the quantizer perturbations {k_u} and the mechanism perturbations K.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exponents::SearchConfig;
use crate::probcore::{JointPmf, Pmf, LOG2_E};
use crate::{Error, Result};

const MAX_ITER: usize = 1000;
const TOL: f64 = 1e-13;
const STARTS: usize = 4;
const MAX_STARTS: usize = 20;

/// (log2 e / 2) Σ (p − q)² / q, in bits.
pub fn chi2_divergence_approx(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(format!("{} vs {}", p.len(), q.len())));
    }
    let mut s = 0.0;
    for (i, (&a, &b)) in p.probs().iter().zip(q.probs()).enumerate() {
        if b <= 0.0 {
            return Err(Error::ZeroSupport(format!("reference entry {i} is zero")));
        }
        s += (a - b) * (a - b) / b;
    }
    Ok(0.5 * LOG2_E * s)
}

/// B = [√P_Y]⁻¹ W [√P_X], |Y| x |X|, with W[y][x] = P(y|x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedChannelMatrix {
    pub b: Vec<Vec<f64>>,
    pub sqrt_px: Vec<f64>,
    pub sqrt_py: Vec<f64>,
}

impl WeightedChannelMatrix {
    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.b.len(), self.sqrt_px.len(), |r, c| self.b[r][c])
    }

    /// Singular values in decreasing order. The largest is always 1.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.matrix().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        s
    }
}

pub fn build_weighted_matrix(p: &JointPmf) -> Result<WeightedChannelMatrix> {
    if p.ndim() != 2 {
        return Err(Error::DimensionMismatch(format!("need a 2-variable joint, got {}", p.ndim())));
    }
    let px = p.marginal_pmf(0)?.probs().to_vec();
    let py = p.marginal_pmf(1)?.probs().to_vec();
    if let Some(i) = px.iter().position(|&v| v <= 0.0) {
        return Err(Error::DegenerateMarginal(format!("P_X({i}) = 0")));
    }
    if let Some(i) = py.iter().position(|&v| v <= 0.0) {
        return Err(Error::DegenerateMarginal(format!("P_Y({i}) = 0")));
    }
    let (nx, ny) = (px.len(), py.len());
    let b = (0..ny)
        .map(|y| (0..nx).map(|x| p.get(&[x, y]) / px[x] * px[x].sqrt() / py[y].sqrt()).collect())
        .collect();
    Ok(WeightedChannelMatrix {
        b,
        sqrt_px: px.iter().map(|v| v.sqrt()).collect(),
        sqrt_py: py.iter().map(|v| v.sqrt()).collect(),
    })
}

/// Closed form for the doubly symmetric binary source:
/// (2 / log2 e) (1 − 2q)² R L.
pub fn binary_euclid_approx(q: f64, rate: f64, leak: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::DomainError(format!("crossover {q} outside [0, 1/2]")));
    }
    if !(rate >= 0.0) || !(leak >= 0.0) {
        return Err(Error::DomainError(format!("rate {rate}, leakage {leak}")));
    }
    Ok(2.0 / LOG2_E * (1.0 - 2.0 * q).powi(2) * rate * leak)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSet {
    /// One length-|X̂| vector per u.
    pub k_u: Vec<Vec<f64>>,
    /// One length-|X| vector per x̂ (the columns of K_X̂).
    pub k_xhat: Vec<Vec<f64>>,
    pub p_u: Pmf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclidSolution {
    /// Approximate exponent, bits.
    pub value: f64,
    pub perturbations: PerturbationSet,
    pub iterations: usize,
    /// Seed of the winning start.
    pub seed: u64,
}

/// Approximate exponent in bits; see [`euclid_tai_solve`].
pub fn euclid_tai_approx(p: &JointPmf, rate: f64, leak: f64, pxhat: &Pmf, cfg: &SearchConfig) -> Result<f64> {
    euclid_tai_solve(p, rate, leak, pxhat, cfg).map(|s| s.value)
}

/// Alternating maximization with random starts. `pxhat` fixes the mechanism
/// output law (the value does not depend on it, the perturbations do);
/// `cfg.u_cardinality` defaults to 2 with P_U uniform.
pub fn euclid_tai_solve(
    p: &JointPmf,
    rate: f64,
    leak: f64,
    pxhat: &Pmf,
    cfg: &SearchConfig,
) -> Result<EuclidSolution> {
    if !(rate >= 0.0) || !(leak >= 0.0) {
        return Err(Error::DomainError(format!("rate {rate}, leakage {leak}")));
    }
    if let Some(i) = pxhat.probs().iter().position(|&v| v <= 0.0) {
        return Err(Error::DegenerateMarginal(format!("P_Xhat({i}) = 0")));
    }
    let nu = cfg.u_cardinality.unwrap_or(2);
    if nu < 2 {
        return Err(Error::InvalidConfig("|U| must be at least 2".into()));
    }
    let wm = build_weighted_matrix(p)?;
    let prob = Problem {
        b: wm.matrix(),
        sx: DVector::from_vec(wm.sqrt_px.clone()),
        sxh: DVector::from_vec(pxhat.probs().iter().map(|v| v.sqrt()).collect()),
        pu: vec![1.0 / nu as f64; nu],
        rho_r: 2.0 * rate / LOG2_E,
        rho_l: 2.0 * leak / LOG2_E,
    };

    let mut seed = 0u64;
    let mut found: Vec<Run> = Vec::new();
    while found.is_empty() && (seed as usize) < MAX_STARTS {
        let batch: Vec<u64> = (seed..seed + STARTS as u64).collect();
        seed += STARTS as u64;
        found = batch.into_par_iter().filter_map(|s| prob.run(s)).collect();
    }
    let best = found
        .into_iter()
        .reduce(|a, b| if b.value > a.value + 1e-15 { b } else { a })
        .ok_or_else(|| Error::NonConvergence(format!("no start converged in {MAX_STARTS} attempts")))?;

    let sxh = prob.sxh.as_slice();
    let k_xhat = (0..sxh.len())
        .map(|c| best.g.column(c).iter().map(|v| v / sxh[c]).collect())
        .collect();
    let k_u = best.k.iter().map(|v| v.as_slice().to_vec()).collect();
    Ok(EuclidSolution {
        value: 0.5 * LOG2_E * best.value,
        perturbations: PerturbationSet { k_u, k_xhat, p_u: Pmf::new(prob.pu.clone())? },
        iterations: best.iterations,
        seed: best.seed,
    })
}

struct Problem {
    b: DMatrix<f64>,
    sx: DVector<f64>,
    sxh: DVector<f64>,
    pu: Vec<f64>,
    rho_r: f64,
    rho_l: f64,
}

struct Run {
    value: f64,
    /// G = K [√P_X̂], |X| x |X̂|.
    g: DMatrix<f64>,
    k: Vec<DVector<f64>>,
    iterations: usize,
    seed: u64,
}

fn project_out(v: &mut DVector<f64>, unit: &DVector<f64>) {
    let d = v.dot(unit);
    v.axpy(-d, unit, 1.0);
}

/// Top eigenvector of a symmetric PSD matrix, sign fixed so the largest
/// entry in magnitude is positive.
fn top_eigvec(m: DMatrix<f64>) -> (f64, DVector<f64>) {
    let e = m.symmetric_eigen();
    let i = e.eigenvalues.imax();
    let mut v = e.eigenvectors.column(i).into_owned();
    if v[v.iamax()] < 0.0 {
        v.neg_mut();
    }
    (e.eigenvalues[i], v)
}

impl Problem {
    fn objective(&self, g: &DMatrix<f64>, k: &[DVector<f64>]) -> f64 {
        let m = &self.b * g;
        k.iter().zip(&self.pu).map(|(ku, pu)| pu * (&m * ku).norm_squared()).sum()
    }

    /// Zero-mean, orthogonal to √P_X̂, total energy rho_r.
    fn normalize_k(&self, k: &mut [DVector<f64>]) {
        for ku in k.iter_mut() {
            project_out(ku, &self.sxh);
        }
        let mean = k.iter().zip(&self.pu).fold(DVector::zeros(self.sxh.len()), |acc, (ku, pu)| acc + ku * *pu);
        for ku in k.iter_mut() {
            *ku -= &mean;
        }
        let e: f64 = k.iter().zip(&self.pu).map(|(ku, pu)| pu * ku.norm_squared()).sum();
        if e > 0.0 {
            let s = (self.rho_r / e).sqrt();
            k.iter_mut().for_each(|ku| *ku *= s);
        }
    }

    /// Columns orthogonal to √P_X, rows orthogonal to √P_X̂, ‖G‖² = rho_l.
    fn normalize_g(&self, g: &mut DMatrix<f64>) {
        let (nx, nxh) = g.shape();
        let px_proj = DMatrix::identity(nx, nx) - &self.sx * self.sx.transpose();
        let pxh_proj = DMatrix::identity(nxh, nxh) - &self.sxh * self.sxh.transpose();
        *g = &px_proj * &*g * &pxh_proj;
        let e = g.norm_squared();
        if e > 0.0 {
            *g *= (self.rho_l / e).sqrt();
        }
    }

    fn run(&self, seed: u64) -> Option<Run> {
        let (nx, nxh, nu) = (self.sx.len(), self.sxh.len(), self.pu.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = DMatrix::from_fn(nx, nxh, |_, _| rng.random_range(-1.0..1.0));
        let mut k: Vec<DVector<f64>> =
            (0..nu).map(|_| DVector::from_fn(nxh, |_, _| rng.random_range(-1.0..1.0))).collect();
        self.normalize_g(&mut g);
        self.normalize_k(&mut k);
        if self.rho_r == 0.0 || self.rho_l == 0.0 {
            return Some(Run { value: 0.0, g, k, iterations: 0, seed });
        }

        let px_proj = DMatrix::identity(nx, nx) - &self.sx * self.sx.transpose();
        let btb = px_proj.transpose() * self.b.transpose() * &self.b * &px_proj;
        let mut prev = self.objective(&g, &k);
        for it in 1..=MAX_ITER {
            // {k_u} step: all energy along the top right singular vector of B G.
            let m = &self.b * &g;
            let (_, v) = top_eigvec(m.transpose() * &m);
            let mut coef: Vec<f64> = k.iter().map(|ku| ku.dot(&v)).collect();
            if coef.iter().all(|c| c.abs() < 1e-300) {
                coef = (0..nu).map(|u| if u % 2 == 0 { 1.0 } else { -1.0 }).collect();
            }
            for (ku, c) in k.iter_mut().zip(&coef) {
                *ku = &v * *c;
            }
            self.normalize_k(&mut k);

            // K step: rank one, top direction of B on the complement of √P_X
            // times the top direction of Σ_u P_U k_u k_uᵀ.
            let t = k.iter().zip(&self.pu).fold(DMatrix::zeros(nxh, nxh), |acc, (ku, pu)| {
                acc + ku * ku.transpose() * *pu
            });
            let (_, a) = top_eigvec(btb.clone());
            let (_, bv) = top_eigvec(t);
            g = &a * bv.transpose();
            self.normalize_g(&mut g);

            let val = self.objective(&g, &k);
            if !val.is_finite() {
                return None;
            }
            if (val - prev).abs() <= TOL * val.max(1e-300) && it > 1 {
                return Some(Run { value: val, g, k, iterations: it, seed });
            }
            prev = val;
        }
        log::debug!("euclid start {seed} did not converge");
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dsbs_singular_values() {
        let w = build_weighted_matrix(&JointPmf::dsbs(0.1).unwrap()).unwrap();
        let s = w.singular_values();
        assert!((s[0] - 1.0).abs() < 1e-12 && (s[1] - 0.8).abs() < 1e-12);
    }
}
