//! Monte Carlo simulation of the two coding schemes.
//!
//! - General scheme: the observer releases X̂^n through the mechanism only when
//!   x^n is typical (radius μ/4), otherwise it sends the all-zero sequence
//!   (symbol index 0). The transmitter sends the smallest index m whose
//!   codeword is jointly typical with x̂^n (radius μ/2), or m = 0. The receiver
//!   accepts the null iff m != 0 and (u^n(m), y^n) is typical (radius μ).
//! - Memoryless scheme: the same pipeline without the observer gate; the
//!   alternative is the product of the null marginals.
//!
//! Typicality is the closed total-variation ball used by
//! [`crate::probcore::is_typical`]. Trials are split into batches, each with
//! a fresh codebook; trial `t` draws from a generator seeded by
//! `(seed, hypothesis, t)`, so reports do not depend on thread count.

mod codebook;
mod masks;
pub mod rng;
pub mod stats;

use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use codebook::{codebook_size, generate_codebook, Codebook, MAX_BLOCKLENGTH, MAX_LOG2_CODEWORDS};

use crate::probcore::info::mi_raw;
use crate::probcore::{Channel, JointPmf};
use crate::{Error, Result};
use codebook::{sampler, CodebookCache};
use masks::{add_joint_counts, encode, tv_joint, tv_single, Masks};

/// Matches the slack of the closed typicality ball in probcore.
const BALL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Null,
    Alt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    General,
    #[default]
    Memoryless,
}

fn default_batches() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub n: usize,
    pub mu: f64,
    /// Codebook rate, bits per symbol.
    pub rate: f64,
    pub seed: u64,
    pub trials: u64,
    pub hypothesis: Hypothesis,
    /// P_{X̂|X}
    pub mechanism: Channel,
    /// P_{U|X̂}
    pub quantizer: Channel,
    #[serde(default)]
    pub scheme: SchemeKind,
    /// Trial batches, one codebook each.
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// Reuse the first batch's codebook for every batch.
    #[serde(default)]
    pub fixed_codebook: bool,
    /// Conditional-typicality radius in the privacy bound; defaults to 2μ.
    #[serde(default)]
    pub mu_prime: Option<f64>,
}

impl SchemeConfig {
    pub fn new(n: usize, mu: f64, rate: f64, mechanism: Channel, quantizer: Channel) -> Self {
        Self {
            n,
            mu,
            rate,
            seed: 0,
            trials: 10_000,
            hypothesis: Hypothesis::Null,
            mechanism,
            quantizer,
            scheme: SchemeKind::Memoryless,
            batches: default_batches(),
            fixed_codebook: false,
            mu_prime: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_BLOCKLENGTH {
            return Err(Error::InvalidConfig(format!("blocklength {} outside 1..={MAX_BLOCKLENGTH}", self.n)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.batches == 0 {
            return Err(Error::InvalidConfig("batches must be at least 1".into()));
        }
        if !(self.mu > 0.0) {
            return Err(Error::DomainError(format!("typicality radius {}", self.mu)));
        }
        if self.mu >= 1.0 {
            return Err(Error::DegenerateConfig(format!(
                "mu = {} makes every sequence typical (total variation never exceeds 1)",
                self.mu
            )));
        }
        if let Some(mp) = self.mu_prime {
            if !(mp > 0.0) {
                return Err(Error::DomainError(format!("mu' = {mp}")));
            }
        }
        if self.quantizer.n_inputs() != self.mechanism.n_outputs() {
            return Err(Error::DimensionMismatch(format!(
                "quantizer takes {} symbols, mechanism emits {}",
                self.quantizer.n_inputs(),
                self.mechanism.n_outputs()
            )));
        }
        codebook_size(self.n, self.rate)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub observer_escapes: u64,
    pub encoder_failures: u64,
    pub receiver_rejects: u64,
    /// Trials ending in the wrong decision for the simulated hypothesis.
    pub errors: u64,
}

impl std::ops::Add for Counters {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            observer_escapes: self.observer_escapes + o.observer_escapes,
            encoder_failures: self.encoder_failures + o.encoder_failures,
            receiver_rejects: self.receiver_rejects + o.receiver_rejects,
            errors: self.errors + o.errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scheme: SchemeKind,
    pub hypothesis: Hypothesis,
    pub n: usize,
    pub mu: f64,
    pub trials: u64,
    pub codebook_size: u64,
    /// Type-I rate, null runs only.
    pub alpha_hat: Option<f64>,
    pub alpha_ci95: Option<[f64; 2]>,
    /// Type-II rate, alternative runs only.
    pub beta_hat: Option<f64>,
    pub beta_ci95: Option<[f64; 2]>,
    /// One-sided 95% bound when no type-II error was observed.
    pub beta_upper95: Option<f64>,
    /// −log2(β̂)/n, only when β̂ > 0.
    pub empirical_exponent: Option<f64>,
    /// Delta-method standard error of the empirical exponent.
    pub exponent_se: Option<f64>,
    /// I(X;X̂) plus the typicality allowance for the general scheme, exact
    /// I(X;X̂) for the memoryless one.
    pub privacy_bound_bits: f64,
    /// Plug-in I(X;X̂) from all released (x, x̂) pairs.
    pub privacy_plugin_bits: f64,
    pub counters: Counters,
}

/// Single-letter laws the typicality tests compare against.
struct Targets {
    nx: usize,
    ny: usize,
    nxh: usize,
    px: Vec<f64>,
    /// P_{UX̂}, U x X̂.
    p_uxh: Vec<f64>,
    /// P_{UY}, U x Y.
    p_uy: Vec<f64>,
    p_xh: Vec<f64>,
    p_u: Vec<f64>,
    i_x_xh: f64,
}

fn targets(p: &JointPmf, v: &Channel, w: &Channel) -> Result<Targets> {
    if p.ndim() != 2 {
        return Err(Error::DimensionMismatch(format!("need a 2-variable joint, got {}", p.ndim())));
    }
    let (nx, ny) = (p.shape()[0], p.shape()[1]);
    if v.n_inputs() != nx {
        return Err(Error::DimensionMismatch(format!("mechanism takes {} symbols, |X| = {nx}", v.n_inputs())));
    }
    let (nxh, nu) = (v.n_outputs(), w.n_outputs());
    let px = p.marginal_pmf(0)?.probs().to_vec();
    let mut p_xh = vec![0.0; nxh];
    let mut j_x_xh = vec![0.0; nx * nxh];
    for x in 0..nx {
        for xh in 0..nxh {
            j_x_xh[x * nxh + xh] = px[x] * v.get(x, xh);
            p_xh[xh] += px[x] * v.get(x, xh);
        }
    }
    let mut p_uxh = vec![0.0; nu * nxh];
    let mut p_u = vec![0.0; nu];
    for xh in 0..nxh {
        for u in 0..nu {
            p_uxh[u * nxh + xh] = p_xh[xh] * w.get(xh, u);
            p_u[u] += p_xh[xh] * w.get(xh, u);
        }
    }
    let mut p_uy = vec![0.0; nu * ny];
    for x in 0..nx {
        for y in 0..ny {
            let pxy = p.get(&[x, y]);
            for xh in 0..nxh {
                let a = pxy * v.get(x, xh);
                for u in 0..nu {
                    p_uy[u * ny + y] += a * w.get(xh, u);
                }
            }
        }
    }
    let i_x_xh = mi_raw(&j_x_xh, nx, nxh);
    Ok(Targets { nx, ny, nxh, px, p_uxh, p_uy, p_xh, p_u, i_x_xh })
}

/// Plug-in I(X;X̂) of pooled (x, x̂) pairs.
pub fn empirical_privacy(mechanism: &Channel, samples: &[(usize, usize)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let (nx, nxh) = (mechanism.n_inputs(), mechanism.n_outputs());
    let mut counts = vec![0u64; nx * nxh];
    for &(x, xh) in samples {
        if x >= nx || xh >= nxh {
            return Err(Error::DimensionMismatch(format!("pair ({x}, {xh}) outside {nx} x {nxh}")));
        }
        counts[x * nxh + xh] += 1;
    }
    Ok(plugin_mi(&counts, nx, nxh))
}

fn plugin_mi(counts: &[u64], na: usize, nb: usize) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let j: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    mi_raw(&j, na, nb).max(0.0)
}

/// Allowance ζ = μ″ log2|X̂| with μ″ = 1 − (1 − μ′)²(1 − μ).
pub fn privacy_slack(mu: f64, mu_prime: f64, nxh: usize) -> f64 {
    let mpp = (1.0 - (1.0 - mu_prime.min(1.0)).powi(2) * (1.0 - mu)).clamp(0.0, 1.0);
    mpp * (nxh as f64).log2()
}

pub fn run_general_scheme(cfg: &SchemeConfig, p: &JointPmf, q: &JointPmf) -> Result<SimReport> {
    crate::exponents::check_pair(p, q)?;
    run(cfg, SchemeKind::General, p, q)
}

pub fn run_memoryless_scheme(cfg: &SchemeConfig, p: &JointPmf) -> Result<SimReport> {
    let q = p.product_of_marginals()?;
    run(cfg, SchemeKind::Memoryless, p, &q)
}

/// Runs the scheme selected by `cfg.scheme`. The memoryless scheme ignores
/// `q` and uses the product of the null marginals.
pub fn simulate(cfg: &SchemeConfig, p: &JointPmf, q: Option<&JointPmf>) -> Result<SimReport> {
    match cfg.scheme {
        SchemeKind::Memoryless => run_memoryless_scheme(cfg, p),
        SchemeKind::General => {
            let q = q.ok_or_else(|| Error::InvalidConfig("the general scheme needs an alternative law".into()))?;
            run_general_scheme(cfg, p, q)
        }
    }
}

struct Tally {
    counters: Counters,
    pairs: Vec<u64>,
}

fn run(cfg: &SchemeConfig, kind: SchemeKind, p: &JointPmf, q: &JointPmf) -> Result<SimReport> {
    cfg.validate()?;
    let t = targets(p, &cfg.mechanism, &cfg.quantizer)?;
    let law = match cfg.hypothesis {
        Hypothesis::Null => p,
        Hypothesis::Alt => q,
    };
    let source = sampler(&crate::probcore::Pmf::new(law.probs().to_vec())?)?;
    let mech: Vec<_> = cfg
        .mechanism
        .rows()
        .iter()
        .map(|r| sampler(&crate::probcore::Pmf::new(r.clone())?))
        .collect::<Result<_>>()?;
    let p_u = crate::probcore::Pmf::new(t.p_u.clone())?;
    let size = codebook_size(cfg.n, cfg.rate)?;
    let stream = match cfg.hypothesis {
        Hypothesis::Null => rng::STREAM_NULL,
        Hypothesis::Alt => rng::STREAM_ALT,
    };
    let batches = cfg.batches.min(cfg.trials as usize) as u64;
    let n = cfg.n;
    let gate = cfg.mu / 4.0 + BALL_SLACK;
    let enc = cfg.mu / 2.0 + BALL_SLACK;
    let dec = cfg.mu + BALL_SLACK;

    let batch = |b: u64| -> Result<Tally> {
        let book_seed = rng::derive(cfg.seed, rng::STREAM_CODEBOOK, if cfg.fixed_codebook { 0 } else { b });
        let book = generate_codebook(&p_u, n, cfg.rate, book_seed)?;
        let mut cache = CodebookCache::new(&book)?;
        let mut tally = Tally { counters: Counters::default(), pairs: vec![0; t.nx * t.nxh] };
        let (mut xs, mut ys, mut xhs) = (vec![0usize; n], vec![0usize; n], vec![0usize; n]);
        let (mut mx, mut my, mut mxh) = (Vec::new(), Vec::new(), Vec::new());
        let lo = b * cfg.trials / batches;
        let hi = (b + 1) * cfg.trials / batches;
        for trial in lo..hi {
            let mut r = rng::trial_rng(cfg.seed, stream, trial);
            for i in 0..n {
                let c = source.sample(&mut r);
                xs[i] = c / t.ny;
                ys[i] = c % t.ny;
            }
            encode(&xs, t.nx, &mut mx);
            encode(&ys, t.ny, &mut my);
            let release = kind == SchemeKind::Memoryless || tv_single(Masks(&mx), &t.px, n) <= gate;
            if release {
                for i in 0..n {
                    xhs[i] = mech[xs[i]].sample(&mut r);
                }
            } else {
                xhs.iter_mut().for_each(|v| *v = 0);
                tally.counters.observer_escapes += 1;
            }
            encode(&xhs, t.nxh, &mut mxh);
            add_joint_counts(Masks(&mx), Masks(&mxh), &mut tally.pairs);

            // A jointly typical codeword needs a typical x̂ marginal first.
            let mut m = 0u64;
            if tv_single(Masks(&mxh), &t.p_xh, n) <= enc {
                for cand in 1..=size {
                    if tv_joint(cache.masks(cand), Masks(&mxh), &t.p_uxh, n) <= enc {
                        m = cand;
                        break;
                    }
                }
            }
            let accept = if m == 0 {
                tally.counters.encoder_failures += 1;
                false
            } else {
                tv_joint(cache.masks(m), Masks(&my), &t.p_uy, n) <= dec
            };
            if !accept {
                tally.counters.receiver_rejects += 1;
            }
            let wrong = match cfg.hypothesis {
                Hypothesis::Null => !accept,
                Hypothesis::Alt => accept,
            };
            tally.counters.errors += wrong as u64;
        }
        Ok(tally)
    };

    let tallies: Vec<Tally> = (0..batches).into_par_iter().map(batch).collect::<Result<_>>()?;
    let mut counters = Counters::default();
    let mut pairs = vec![0u64; t.nx * t.nxh];
    for tl in tallies {
        counters = counters + tl.counters;
        pairs.iter_mut().zip(&tl.pairs).for_each(|(a, b)| *a += b);
    }

    let trials = cfg.trials;
    let rate_hat = counters.errors as f64 / trials as f64;
    let ci = stats::wilson95(counters.errors, trials);
    let privacy_bound_bits = match kind {
        SchemeKind::Memoryless => t.i_x_xh,
        SchemeKind::General => t.i_x_xh + privacy_slack(cfg.mu, cfg.mu_prime.unwrap_or(2.0 * cfg.mu), t.nxh),
    };
    let mut report = SimReport {
        scheme: kind,
        hypothesis: cfg.hypothesis,
        n,
        mu: cfg.mu,
        trials,
        codebook_size: size,
        alpha_hat: None,
        alpha_ci95: None,
        beta_hat: None,
        beta_ci95: None,
        beta_upper95: None,
        empirical_exponent: None,
        exponent_se: None,
        privacy_bound_bits,
        privacy_plugin_bits: plugin_mi(&pairs, t.nx, t.nxh),
        counters,
    };
    match cfg.hypothesis {
        Hypothesis::Null => {
            report.alpha_hat = Some(rate_hat);
            report.alpha_ci95 = Some(ci);
        }
        Hypothesis::Alt => {
            report.beta_hat = Some(rate_hat);
            report.beta_ci95 = Some(ci);
            if counters.errors == 0 {
                report.beta_upper95 = Some(stats::clopper_pearson_zero95(trials));
            } else {
                report.empirical_exponent = Some(-rate_hat.log2() / n as f64);
                let se = stats::binomial_se(rate_hat, trials);
                report.exponent_se = Some(se / (rate_hat * n as f64 * std::f64::consts::LN_2));
            }
        }
    }
    Ok(report)
}
