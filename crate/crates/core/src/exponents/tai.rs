//! Testing against independence with a memoryless mechanism:
//! θ = max I(U;Y) over P_{X̂|X}, P_{U|X̂} with I(U;X̂) <= R, I(X;X̂) <= L.
//!
//! For a fixed mechanism the inner maximum over P_{U|X̂} is a concave-envelope
//! problem: writing q_u = P_{X̂|U=u} and w_u = P_U(u),
//!   I(U;Y)  = H(T p) − Σ w_u H(T q_u),
//!   I(U;X̂) = H(p) − Σ w_u H(q_u),
//! with Σ w_u q_u = p and T = P_{Y|X̂}. Restricting the q_u to a finite
//! candidate set turns it into a linear program in w. Basic solutions use at
//! most |X̂|+1 candidates, which matches the cardinality bound on U.

use log::debug;
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;

use super::search::{
    better, channel_mi, coordinate_refine, lex_cmp, push, stretch_to_budget, simplex_count, simplex_grid,
    subdivisions, Layout,
};
use super::{
    check_pair, BoundKind, ChannelFamily, ExponentQuery, ExponentResult, SearchConfig,
    CONSTRAINT_SLACK, MAX_OUTER_POINTS,
};
use crate::probcore::info::{entropy_raw, mi_raw};
use crate::probcore::{Channel, JointPmf};
use crate::{Error, Result};

/// Candidate budget for the inner linear program.
const INNER_CANDIDATES: f64 = 300.0;
const INNER_MAX_SUBDIV: usize = 100;
const TOP_K: usize = 3;
const DP_SLACK: f64 = 1e-9;
const ATOM_EPS: f64 = 1e-12;
const LP_CHECK: f64 = 1e-7;

pub(crate) struct Problem2 {
    px: Vec<f64>,
    /// P(y|x), |X| x |Y|.
    pyx: Vec<f64>,
    nx: usize,
    ny: usize,
    /// |X̂|
    k: usize,
    u_card: usize,
    rate: f64,
    leak: f64,
    zoom_rounds: usize,
}

/// Inner optimum for one mechanism.
struct Inner {
    value: f64,
    /// (weight, posterior over X̂) per auxiliary symbol.
    atoms: Vec<(f64, Vec<f64>)>,
}

impl Problem2 {
    fn new(p: &JointPmf, rate: f64, leak: f64, k: usize, u_card: usize, zoom: usize) -> Result<Self> {
        let (nx, ny) = (p.shape()[0], p.shape()[1]);
        let px = p.marginal_pmf(0)?.probs().to_vec();
        let mut pyx = vec![0.0; nx * ny];
        for x in 0..nx {
            for y in 0..ny {
                if px[x] > 0.0 {
                    pyx[x * ny + y] = p.get(&[x, y]) / px[x];
                }
            }
        }
        Ok(Self { px, pyx, nx, ny, k, u_card, rate, leak, zoom_rounds: zoom })
    }

    /// P_{X̂} and P_{Y|X̂} (rows with zero mass left at zero).
    fn reduced(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (k, ny) = (self.k, self.ny);
        let p = push(&self.px, v, k);
        let mut t = vec![0.0; k * ny];
        for x in 0..self.nx {
            for xh in 0..k {
                let w = self.px[x] * v[x * k + xh];
                for y in 0..ny {
                    t[xh * ny + y] += w * self.pyx[x * ny + y];
                }
            }
        }
        for xh in 0..k {
            if p[xh] > 0.0 {
                for y in 0..ny {
                    t[xh * ny + y] /= p[xh];
                }
            }
        }
        (p, t)
    }

    fn inner(&self, v: &[f64], zoom: bool) -> Result<Inner> {
        let (p, t) = self.reduced(v);
        let support: Vec<usize> = (0..self.k).filter(|&i| p[i] > 1e-15).collect();
        let s = support.len();
        let ps: Vec<f64> = support.iter().map(|&i| p[i]).collect();
        let ts: Vec<Vec<f64>> =
            support.iter().map(|&i| t[i * self.ny..(i + 1) * self.ny].to_vec()).collect();
        let lift = |q: &[f64]| -> Vec<f64> {
            let mut full = vec![0.0; self.k];
            for (a, &i) in support.iter().enumerate() {
                full[i] = q[a];
            }
            full
        };
        let hp = entropy_raw(&ps);
        let h_tq = |q: &[f64]| -> f64 {
            let mut out = vec![0.0; self.ny];
            for (a, row) in ts.iter().enumerate() {
                for y in 0..self.ny {
                    out[y] += q[a] * row[y];
                }
            }
            entropy_raw(&out)
        };
        let hy = h_tq(&ps);
        if s <= 1 || self.rate <= 0.0 {
            return Ok(Inner { value: 0.0, atoms: vec![(1.0, p)] });
        }
        if self.rate >= hp {
            // U = X̂ is allowed.
            let atoms = support
                .iter()
                .map(|&i| {
                    let mut e = vec![0.0; self.k];
                    e[i] = 1.0;
                    (p[i], e)
                })
                .collect::<Vec<_>>();
            let value = hy - support.iter().enumerate().map(|(a, _)| ps[a] * entropy_raw(&ts[a])).sum::<f64>();
            return Ok(Inner { value: value.max(0.0), atoms });
        }
        let mut n = INNER_MAX_SUBDIV;
        while n > 1 && simplex_count(s, n) > INNER_CANDIDATES {
            n -= 1;
        }
        let mut cands = simplex_grid(s, n);
        cands.push(ps.clone());
        let (mut obj, mut atoms) = solve_lp(&ps, hp, self.rate, &cands, &h_tq)?;
        if zoom {
            let mut step = 1.0 / n as f64;
            for _ in 0..self.zoom_rounds {
                step /= 4.0;
                let mut local: Vec<Vec<f64>> = atoms.iter().map(|(_, q)| q.clone()).collect();
                local.push(ps.clone());
                for (_, q) in &atoms {
                    for i in 0..s {
                        for j in 0..s {
                            if i == j {
                                continue;
                            }
                            for m in 1..=3 {
                                let d = step * m as f64;
                                if q[j] >= d {
                                    let mut c = q.clone();
                                    c[i] += d;
                                    c[j] -= d;
                                    local.push(c);
                                }
                            }
                        }
                    }
                }
                match solve_lp(&ps, hp, self.rate, &local, &h_tq) {
                    Ok((o, a)) if o <= obj + 1e-15 => {
                        obj = o;
                        atoms = a;
                    }
                    Ok(_) => {}
                    Err(e) => debug!("zoom round dropped: {e}"),
                }
            }
        }
        let atoms = atoms.into_iter().map(|(w, q)| (w, lift(&q))).collect();
        Ok(Inner { value: (hy - obj).max(0.0), atoms })
    }

    /// P_{U|X̂} from the inner atoms, padded to |U| symbols.
    fn quantizer(&self, v: &[f64], inner: &Inner) -> Result<Vec<f64>> {
        if inner.atoms.len() > self.u_card {
            return Err(Error::Internal(format!(
                "{} auxiliary atoms exceed |U| = {}",
                inner.atoms.len(),
                self.u_card
            )));
        }
        let p = push(&self.px, v, self.k);
        let mut out = vec![0.0; self.k * self.u_card];
        for xh in 0..self.k {
            if p[xh] <= 1e-15 {
                out[xh * self.u_card] = 1.0;
                continue;
            }
            for (u, (w, q)) in inner.atoms.iter().enumerate() {
                out[xh * self.u_card + u] = w * q[xh] / p[xh];
            }
            let s: f64 = out[xh * self.u_card..(xh + 1) * self.u_card].iter().sum();
            out[xh * self.u_card..(xh + 1) * self.u_card].iter_mut().for_each(|x| *x /= s);
        }
        Ok(out)
    }

    /// Joint law over (U, X̂, X, Y).
    pub(crate) fn joint(&self, v: &[f64], wq: &[f64]) -> Vec<f64> {
        let (nu, k, nx, ny) = (self.u_card, self.k, self.nx, self.ny);
        let mut j = vec![0.0; nu * k * nx * ny];
        for u in 0..nu {
            for xh in 0..k {
                for x in 0..nx {
                    let w = wq[xh * nu + u] * v[x * k + xh] * self.px[x];
                    for y in 0..ny {
                        j[((u * k + xh) * nx + x) * ny + y] = w * self.pyx[x * ny + y];
                    }
                }
            }
        }
        j
    }
}

/// Minimizes Σ w_j H(T q_j) subject to Σ w_j q_j = p and
/// Σ w_j H(q_j) >= H(p) − R. Returns the objective and the atoms used.
fn solve_lp(
    p: &[f64],
    hp: f64,
    rate: f64,
    cands: &[Vec<f64>],
    h_tq: &dyn Fn(&[f64]) -> f64,
) -> Result<(f64, Vec<(f64, Vec<f64>)>)> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = cands.iter().map(|q| lp.add_var(h_tq(q), (0.0, f64::INFINITY))).collect();
    for i in 0..p.len() {
        let expr: Vec<_> = vars.iter().zip(cands).filter(|(_, q)| q[i] != 0.0).map(|(&v, q)| (v, q[i])).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, p[i]);
    }
    let ent: Vec<_> = vars.iter().zip(cands).map(|(&v, q)| (v, entropy_raw(q))).collect();
    lp.add_constraint(ent.as_slice(), ComparisonOp::Ge, hp - rate);
    let sol = lp
        .solve()
        .map_err(|e| Error::Internal(format!("inner LP: {e}")))?
        .into_solution()
        .map_err(|_| Error::Internal("inner LP interrupted".into()))?;
    let mut atoms = Vec::new();
    let mut obj = 0.0;
    // The simplex can lose precision on nearly collinear candidates; only
    // solutions that actually satisfy the constraints are used.
    let mut hsum = 0.0;
    let mut marg = vec![0.0; p.len()];
    for (&v, q) in vars.iter().zip(cands) {
        let w = sol.var_value(v);
        hsum += w * entropy_raw(q);
        marg.iter_mut().zip(q).for_each(|(m, qi)| *m += w * qi);
    }
    let resid = marg.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if resid > LP_CHECK || hsum < hp - rate - LP_CHECK {
        return Err(Error::Internal(format!(
            "inner LP solution off by {resid:.1e} (marginal), {:.1e} (rate)",
            hp - rate - hsum
        )));
    }
    for (&v, q) in vars.iter().zip(cands) {
        let w = sol.var_value(v);
        if w > ATOM_EPS {
            obj += w * h_tq(q);
            atoms.push((w, q.clone()));
        }
    }
    Ok((obj, atoms))
}

/// Exact exponent for testing against independence (Q = P_X P_Y) with a
/// memoryless mechanism, by grid search over P_{X̂|X} with an LP inner
/// problem and local golden-section refinement.
pub fn tai_exponent(p: &JointPmf, q: &ExponentQuery, cfg: &SearchConfig) -> Result<ExponentResult> {
    check_pair(p, p)?;
    q.validate()?;
    cfg.validate()?;
    let nx = p.shape()[0];
    let k = cfg.xhat_cardinality.unwrap_or(nx);
    let u_card = cfg.u_cardinality.unwrap_or(k + 1);
    let rate = q.rate.min((k as f64).log2());
    let leak = q.leakage.min((nx as f64).log2());
    let prob = Problem2::new(p, rate, leak, k, u_card, cfg.refine_rounds)?;
    let mut res = match cfg.family {
        ChannelFamily::General => {
            if u_card < k + 1 {
                return Err(Error::InvalidConfig(format!(
                    "|U| = {u_card} is below |X̂|+1 = {}",
                    k + 1
                )));
            }
            general(&prob, cfg)?
        }
        ChannelFamily::Symmetric => {
            if k != nx {
                return Err(Error::InvalidConfig("symmetric family needs |X̂| = |X|".into()));
            }
            if u_card < k {
                return Err(Error::InvalidConfig("symmetric family needs |U| >= |X̂|".into()));
            }
            symmetric(&prob, cfg)?
        }
    };
    res.query = Some(*q);
    Ok(res)
}

fn general(prob: &Problem2, cfg: &SearchConfig) -> Result<ExponentResult> {
    let (nx, k) = (prob.nx, prob.k);
    let n = subdivisions(cfg.grid_step);
    let rows = simplex_grid(k, n);
    let total = (rows.len() as f64).powi(nx as i32);
    if total > MAX_OUTER_POINTS {
        return Err(Error::TooLarge(format!(
            "{total:.0} mechanisms on the outer grid; increase grid_step"
        )));
    }
    let total = total as usize;
    let decode = |mut idx: usize| -> Vec<f64> {
        let mut v = vec![0.0; nx * k];
        for x in (0..nx).rev() {
            v[x * k..(x + 1) * k].copy_from_slice(&rows[idx % rows.len()]);
            idx /= rows.len();
        }
        v
    };
    // Grid points are scored after stretching to the budget; distinct grid
    // points often land on the same stretched mechanism.
    let scored: Vec<(f64, Vec<f64>)> = (0..total)
        .into_par_iter()
        .filter_map(|i| {
            let mut v = decode(i);
            if channel_mi(&prob.px, &v, k) > prob.leak + CONSTRAINT_SLACK {
                return None;
            }
            stretch_to_budget(&prob.px, &mut v, k, prob.leak);
            match prob.inner(&v, false) {
                Ok(inner) => Some((inner.value, v)),
                Err(e) => {
                    debug!("skipping grid point {i}: {e}");
                    None
                }
            }
        })
        .collect();
    if scored.is_empty() {
        return Err(Error::Infeasible("no mechanism on the grid meets the leakage budget".into()));
    }
    let mut evaluations = total;
    let top = top_k(scored, TOP_K);

    let layout = Layout { blocks: vec![(nx, k)] };
    let eval = |raw: &[f64]| -> Option<(f64, Vec<f64>)> {
        let mut v = raw.to_vec();
        stretch_to_budget(&prob.px, &mut v, k, prob.leak);
        prob.inner(&v, true).ok().map(|inner| (inner.value, v))
    };
    let refined: Vec<(f64, Vec<f64>)> = top
        .into_par_iter()
        .filter_map(|v| {
            let start = eval(&v)?;
            Some(coordinate_refine(start, &layout, cfg.grid_step, cfg.refine_rounds, &eval))
        })
        .collect();
    evaluations += refined.len() * layout.coordinates().len() * cfg.refine_rounds * 40;
    let (_, v) = pick_best(refined)
        .ok_or_else(|| Error::Internal("refinement lost every starting point".into()))?;
    finish(prob, &v, cfg, evaluations)
}

/// Best `k` distinct points, ties broken lexicographically.
fn top_k(mut scored: Vec<(f64, Vec<f64>)>, k: usize) -> Vec<Vec<f64>> {
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| lex_cmp(&a.1, &b.1))
    });
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (_, v) in scored {
        if out.len() == k {
            break;
        }
        let dup = out.iter().any(|w| w.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-9));
        if !dup {
            out.push(v);
        }
    }
    out
}

fn pick_best(cands: Vec<(f64, Vec<f64>)>) -> Option<(f64, Vec<f64>)> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for c in cands {
        match &best {
            Some(b) if !better((c.0, &c.1), (b.0, &b.1)) => {}
            _ => best = Some(c),
        }
    }
    best
}

/// Re-solves the inner problem at `v` and assembles the report, including the
/// constraint and data-processing checks on the final joint law.
fn finish(prob: &Problem2, v: &[f64], cfg: &SearchConfig, evaluations: usize) -> Result<ExponentResult> {
    let inner = prob.inner(v, true)?;
    let wq = prob.quantizer(v, &inner)?;
    report(prob, v, &wq, cfg, evaluations)
}

fn report(prob: &Problem2, v: &[f64], wq: &[f64], cfg: &SearchConfig, evaluations: usize) -> Result<ExponentResult> {
    let (nu, k, nx, ny) = (prob.u_card, prob.k, prob.nx, prob.ny);
    let j = JointPmf::named(&["U", "Xhat", "X", "Y"], &[nu, k, nx, ny], normalize(prob.joint(v, wq)))?;
    let m = |a: &[usize]| j.marginal(a).map(|m| m.probs().to_vec());
    let i_uy = mi_raw(&m(&[0, 3])?, nu, ny);
    let i_uxh = mi_raw(&m(&[0, 1])?, nu, k);
    let i_xxh = mi_raw(&m(&[2, 1])?, nx, k);
    let i_xy = mi_raw(&m(&[2, 3])?, nx, ny);
    if i_uy > i_uxh.min(i_xy) + DP_SLACK {
        return Err(Error::Internal(format!(
            "data processing violated: I(U;Y)={i_uy} > min(I(U;X̂)={i_uxh}, I(X;Y)={i_xy})"
        )));
    }
    Ok(ExponentResult {
        theta: i_uy,
        bound_kind: BoundKind::Exact,
        query: None,
        privacy_channel: Some(Channel::from_flat_normalized(nx, k, v)?),
        quantizer: Some(Channel::from_flat_normalized(k, nu, wq)?),
        inner_witness: None,
        rate_used: Some(i_uxh),
        leakage_used: Some(i_xxh),
        grid_step: Some(cfg.grid_step),
        evaluations,
    })
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn symmetric_rows(k: usize, eps: f64) -> Vec<f64> {
    let off = eps / (k - 1) as f64;
    (0..k * k).map(|i| if i / k == i % k { 1.0 - eps } else { off }).collect()
}

/// Symmetric family: both channels k-ary symmetric. For a fixed mechanism the
/// best symmetric quantizer is the least noisy one meeting the rate budget,
/// since noisier symmetric channels are degraded versions of less noisy ones.
fn symmetric(prob: &Problem2, cfg: &SearchConfig) -> Result<ExponentResult> {
    let k = prob.k;
    let max_eps = (k - 1) as f64 / k as f64;
    let quant = |v: &[f64]| -> (f64, Vec<f64>) {
        let p = push(&prob.px, v, k);
        let rate_of = |d: f64| channel_mi(&p, &symmetric_rows(k, d), k);
        let d = if rate_of(0.0) <= prob.rate {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, max_eps);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if rate_of(mid) <= prob.rate {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        let mut wq = vec![0.0; k * prob.u_card];
        let rows = symmetric_rows(k, d);
        for xh in 0..k {
            wq[xh * prob.u_card..xh * prob.u_card + k].copy_from_slice(&rows[xh * k..(xh + 1) * k]);
        }
        let (_, t) = prob.reduced(v);
        // I(U;Y) from P_{X̂}, P_{U|X̂}, P_{Y|X̂}.
        let mut juy = vec![0.0; prob.u_card * prob.ny];
        for xh in 0..k {
            for u in 0..prob.u_card {
                let w = p[xh] * wq[xh * prob.u_card + u];
                for y in 0..prob.ny {
                    juy[u * prob.ny + y] += w * t[xh * prob.ny + y];
                }
            }
        }
        (mi_raw(&juy, prob.u_card, prob.ny), wq)
    };
    let eval = |raw: &[f64]| -> Option<(f64, Vec<f64>)> {
        let eps = raw[0];
        let v = symmetric_rows(k, eps);
        if channel_mi(&prob.px, &v, k) > prob.leak + CONSTRAINT_SLACK {
            return None;
        }
        Some((quant(&v).0, vec![eps, 1.0 - eps]))
    };
    let n = subdivisions(cfg.grid_step);
    let scored: Vec<(f64, Vec<f64>)> = (0..=n).filter_map(|i| eval(&[i as f64 / n as f64])).collect();
    if scored.is_empty() {
        return Err(Error::Infeasible("no symmetric mechanism meets the leakage budget".into()));
    }
    let layout = Layout { blocks: vec![(1, 2)] };
    let refined: Vec<(f64, Vec<f64>)> = top_k(scored, TOP_K)
        .into_iter()
        .filter_map(|x| {
            let start = eval(&x)?;
            Some(coordinate_refine(start, &layout, cfg.grid_step, cfg.refine_rounds.max(1), &eval))
        })
        .collect();
    let (_, x) = pick_best(refined).ok_or_else(|| Error::Internal("symmetric refinement failed".into()))?;
    let v = symmetric_rows(k, x[0]);
    let (_, wq) = quant(&v);
    report(prob, &v, &wq, cfg, n + 1)
}
