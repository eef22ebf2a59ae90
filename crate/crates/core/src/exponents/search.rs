//! Grid and local-refinement machinery shared by the exponent searches.
//!
//! A search point is a concatenation of row-stochastic matrices stored
//! row-major in one flat vector; [`Layout`] records the block shapes.

use crate::probcore::info::mi_raw;

/// All points of the (k-1)-simplex with coordinates in multiples of 1/n,
/// in lexicographic order of the coordinate vector.
pub fn simplex_grid(k: usize, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(i: usize, left: usize, k: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if i == k - 1 {
            cur[i] = left;
            out.push(cur.iter().map(|&c| c as f64 / n as f64).collect());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, k, n, cur, out);
        }
    }
    if k == 0 {
        return out;
    }
    rec(0, n, k, n, &mut cur, &mut out);
    out
}

/// Number of points in `simplex_grid(k, n)`, as a float to avoid overflow.
pub fn simplex_count(k: usize, n: usize) -> f64 {
    // C(n + k - 1, k - 1)
    let mut c = 1.0;
    for i in 1..k {
        c *= (n + i) as f64 / i as f64;
    }
    c.round()
}

/// Subdivisions per unit for a grid step.
pub fn subdivisions(step: f64) -> usize {
    ((1.0 / step).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    /// (rows, cols) of each block.
    pub blocks: Vec<(usize, usize)>,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|(r, c)| r * c).sum()
    }

    pub fn offset(&self, block: usize) -> usize {
        self.blocks[..block].iter().map(|(r, c)| r * c).sum()
    }

    /// Free coordinates: every entry except the last of each row.
    pub fn coordinates(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut off = 0;
        for &(r, c) in &self.blocks {
            for row in 0..r {
                for col in 0..c.saturating_sub(1) {
                    // (entry index, index of the row's compensating entry)
                    out.push((off + row * c + col, off + row * c + c - 1));
                }
            }
            off += r * c;
        }
        out
    }
}

/// I(X;X̂) for input law `px` and channel `v` (|X| x k, row-major).
pub fn channel_mi(px: &[f64], v: &[f64], k: usize) -> f64 {
    let joint: Vec<f64> = v.iter().enumerate().map(|(i, w)| px[i / k] * w).collect();
    mi_raw(&joint, px.len(), k)
}

/// Output law of `px` through `v`.
pub fn push(px: &[f64], v: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k];
    for (i, &a) in px.iter().enumerate() {
        for j in 0..k {
            out[j] += a * v[i * k + j];
        }
    }
    out
}

/// Shrinks `v` toward the useless channel with the same output law until
/// I(input; output) <= budget. Mixing with identical rows keeps the output law
/// fixed and the mutual information is convex and increasing along the segment,
/// so bisection on the mixing weight is exact.
pub fn shrink_to_budget(px: &[f64], v: &mut [f64], k: usize, budget: f64) {
    if channel_mi(px, v, k) <= budget {
        return;
    }
    let out = push(px, v, k);
    let orig = v.to_vec();
    let mix = |t: f64, dst: &mut [f64]| {
        for (i, d) in dst.iter_mut().enumerate() {
            *d = t * orig[i] + (1.0 - t) * out[i % k];
        }
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut tmp = orig.clone();
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        mix(mid, &mut tmp);
        if channel_mi(px, &tmp, k) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mix(lo, v);
}

/// Moves `v` along the ray from the useless channel (identical rows equal to
/// the output law) through `v`, as far out as the budget and nonnegativity
/// allow. Points on the ray closer to the useless channel are degraded
/// versions of points further out (post-composition with "keep, or resample
/// from the output law"), so for objectives that respect degradation this
/// never loses value.
pub fn stretch_to_budget(px: &[f64], v: &mut [f64], k: usize, budget: f64) {
    let out = push(px, v, k);
    let orig = v.to_vec();
    let mut t_max = f64::INFINITY;
    for (i, &w) in orig.iter().enumerate() {
        let o = out[i % k];
        if w < o {
            t_max = t_max.min(o / (o - w));
        }
    }
    if !t_max.is_finite() {
        return; // already the useless channel
    }
    let mix = |t: f64, dst: &mut [f64]| {
        for (i, d) in dst.iter_mut().enumerate() {
            *d = (t * orig[i] + (1.0 - t) * out[i % k]).max(0.0);
        }
    };
    let mut tmp = orig.clone();
    mix(t_max, &mut tmp);
    if channel_mi(px, &tmp, k) <= budget {
        v.copy_from_slice(&tmp);
        return;
    }
    let (mut lo, mut hi) = (0.0_f64, t_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        mix(mid, &mut tmp);
        if channel_mi(px, &tmp, k) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mix(lo, v);
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization of `f` on [lo, hi]. Returns (argmax, max).
pub fn golden_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Coordinate-wise golden-section ascent. `eval` maps a raw point to its
/// (value, feasible point); it may move the point (for instance to enforce an
/// information budget). Only strict improvements are accepted, so the result
/// is never worse than `start`.
pub fn coordinate_refine(
    start: (f64, Vec<f64>),
    layout: &Layout,
    step: f64,
    rounds: usize,
    eval: &dyn Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
) -> (f64, Vec<f64>) {
    let (mut best, mut x) = start;
    let coords = layout.coordinates();
    let mut s = step;
    for _ in 0..rounds {
        for &(i, last) in &coords {
            let room = x[i] + x[last];
            let lo = (x[i] - s).max(0.0);
            let hi = (x[i] + s).min(room);
            if hi - lo < 1e-12 {
                continue;
            }
            let probe = |t: f64| -> Option<(f64, Vec<f64>)> {
                let mut y = x.clone();
                y[i] = t;
                y[last] = (room - t).max(0.0);
                eval(&y)
            };
            let (t, v) = golden_max(
                |t| probe(t).map_or(f64::NEG_INFINITY, |r| r.0),
                lo,
                hi,
                (s * 1e-4).max(1e-9),
            );
            if v > best + 1e-13 {
                if let Some((val, y)) = probe(t) {
                    best = val;
                    x = y;
                }
            }
        }
        s /= 4.0;
    }
    (best, x)
}

/// Lexicographic comparison of parameter vectors.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Deterministic "better than": larger value wins, ties go to the
/// lexicographically smaller parameter vector.
pub fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    if (a.0 - b.0).abs() > 1e-13 {
        a.0 > b.0
    } else {
        lex_cmp(a.1, b.1) == std::cmp::Ordering::Less
    }
}
