use rand::distr::weighted::WeightedIndex;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::masks::Masks;
use super::rng::codeword_rng;
use crate::probcore::Pmf;
use crate::{Error, Result};

/// log2 of the largest codebook a simulation will use.
pub const MAX_LOG2_CODEWORDS: f64 = 24.0;
/// Longest block the bitmask representation supports.
pub const MAX_BLOCKLENGTH: usize = 64;
/// Codewords materialized at most by [`Codebook::entries`].
const MAX_MATERIALIZE: u64 = 1 << 20;

/// Random codebook with entries 1..=size drawn i.i.d. from P_U. Entries are
/// generated on demand from (seed, index), so a codebook is fully described
/// by its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub p_u: Pmf,
    pub n: usize,
    pub rate: f64,
    pub seed: u64,
    /// ⌊2^{nR}⌋
    pub size: u64,
}

/// ⌊2^{nR}⌋, refusing anything above 2^24.
pub fn codebook_size(n: usize, rate: f64) -> Result<u64> {
    if !(rate >= 0.0) {
        return Err(Error::DomainError(format!("rate {rate}")));
    }
    let bits = n as f64 * rate;
    // Guard against 24.000000000001 from float rates like 1.0/3.0 * 72.
    if bits > MAX_LOG2_CODEWORDS + 1e-9 {
        let max_n = (MAX_LOG2_CODEWORDS / rate).floor() as usize;
        return Err(Error::SizeOverflow {
            msg: format!("2^{bits:.3} codewords exceed the 2^24 budget"),
            max_n,
        });
    }
    Ok((bits.min(MAX_LOG2_CODEWORDS) + 1e-12).exp2().floor() as u64)
}

pub fn generate_codebook(p_u: &Pmf, n: usize, rate: f64, seed: u64) -> Result<Codebook> {
    if n == 0 || n > MAX_BLOCKLENGTH {
        return Err(Error::InvalidConfig(format!("blocklength {n} outside 1..={MAX_BLOCKLENGTH}")));
    }
    let size = codebook_size(n, rate)?;
    Ok(Codebook { p_u: p_u.clone(), n, rate, seed, size })
}

impl Codebook {
    /// Codeword `m` (1-based) as symbol indices.
    pub fn codeword(&self, m: u64) -> Result<Vec<usize>> {
        if m == 0 || m > self.size {
            return Err(Error::DomainError(format!("codeword index {m} outside 1..={}", self.size)));
        }
        let mut out = vec![0usize; self.n];
        SymbolSampler::new(&self.p_u).draw(self.seed, m, self.n, |i, a| out[i] = a);
        Ok(out)
    }

    pub fn entries(&self) -> Result<Vec<Vec<usize>>> {
        if self.size > MAX_MATERIALIZE {
            return Err(Error::SizeOverflow {
                msg: format!("{} codewords is too many to materialize", self.size),
                max_n: (20.0 / self.rate.max(1e-300)).floor() as usize,
            });
        }
        (1..=self.size).map(|m| self.codeword(m)).collect()
    }
}

/// Draws codeword symbols from (seed, index). A uniform binary law takes one
/// 64-bit word per codeword; otherwise each symbol is an inverse-CDF lookup
/// on a 64-bit draw.
enum SymbolSampler {
    UniformBinary,
    Cdf(Vec<u64>),
}

impl SymbolSampler {
    fn new(p: &Pmf) -> Self {
        let probs = p.probs();
        if probs.len() == 2 && probs[0] == 0.5 {
            return Self::UniformBinary;
        }
        let mut acc = 0.0;
        let mut cut: Vec<u64> = probs
            .iter()
            .map(|&q| {
                acc += q;
                if acc >= 1.0 {
                    u64::MAX
                } else {
                    (acc * 2f64.powi(64)) as u64
                }
            })
            .collect();
        if let Some(last) = cut.last_mut() {
            *last = u64::MAX;
        }
        Self::Cdf(cut)
    }

    fn draw(&self, seed: u64, m: u64, n: usize, mut put: impl FnMut(usize, usize)) {
        let mut rng = codeword_rng(seed, m);
        match self {
            Self::UniformBinary => {
                let bits = rng.next_u64();
                for i in 0..n {
                    put(i, ((bits >> i) & 1) as usize);
                }
            }
            Self::Cdf(cut) => {
                for i in 0..n {
                    let r = rng.next_u64();
                    // Zero-probability symbols have the same cut as their predecessor.
                    let a = cut.iter().position(|&c| r < c).unwrap_or(cut.len() - 1);
                    put(i, a);
                }
            }
        }
    }

    /// Per-symbol bitmasks of codeword m.
    fn fill(&self, seed: u64, m: u64, n: usize, out: &mut [u64]) {
        out.iter_mut().for_each(|w| *w = 0);
        if let Self::UniformBinary = self {
            let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            let bits = codeword_rng(seed, m).next_u64() & mask;
            out[1] = bits;
            out[0] = !bits & mask;
            return;
        }
        self.draw(seed, m, n, |i, a| out[a] |= 1u64 << i);
    }
}

pub(crate) fn sampler(p: &Pmf) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p.probs()).map_err(|e| Error::InvalidPmf(e.to_string()))
}

/// Codewords as bitmasks, generated on demand and cached up to a limit.
pub(crate) struct CodebookCache<'a> {
    book: &'a Codebook,
    dist: SymbolSampler,
    k: usize,
    cached: Vec<u64>,
    scratch: Vec<u64>,
}

/// Codewords kept in memory per cache; further ones are regenerated.
const CACHE_WORDS: u64 = 1 << 18;

impl<'a> CodebookCache<'a> {
    pub fn new(book: &'a Codebook) -> Result<Self> {
        let k = book.p_u.len();
        Ok(Self { book, dist: SymbolSampler::new(&book.p_u), k, cached: Vec::new(), scratch: vec![0; k] })
    }

    fn fill(&self, m: u64, out: &mut [u64]) {
        self.dist.fill(self.book.seed, m, self.book.n, out);
    }

    /// Per-symbol masks of codeword `m` (1-based).
    pub fn masks(&mut self, m: u64) -> Masks<'_> {
        let k = self.k;
        if m <= CACHE_WORDS && !matches!(self.dist, SymbolSampler::UniformBinary) {
            while (self.cached.len() / k) < m as usize {
                let next = (self.cached.len() / k) as u64 + 1;
                let start = self.cached.len();
                self.cached.resize(start + k, 0);
                let mut buf = vec![0u64; k];
                self.fill(next, &mut buf);
                self.cached[start..].copy_from_slice(&buf);
            }
            let i = (m as usize - 1) * k;
            return Masks(&self.cached[i..i + k]);
        }
        let mut buf = std::mem::take(&mut self.scratch);
        self.fill(m, &mut buf);
        self.scratch = buf;
        Masks(&self.scratch)
    }
}
