//! Achievable exponent for general (P_XY, Q_XY):
//!   max over P_{U|X̂}, P_{X̂|X} with I(U;X̂) <= R, I(X;X̂) <= L of
//!   min D(P̃ || P_{U|X̂} P_{X̂|X} Q_XY) over P̃ with
//!   P̃_X = P_X, P̃_UY = P_UY, P̃_UX̂ = P_UX̂.

use log::debug;
use rayon::prelude::*;

use super::search::{
    better, channel_mi, coordinate_refine, push, shrink_to_budget, simplex_grid, subdivisions,
    Layout,
};
use super::{
    check_pair, BoundKind, ExponentQuery, ExponentResult, SearchConfig, CONSTRAINT_SLACK,
    MAX_OUTER_POINTS,
};
use crate::iproject::{i_project, MarginalConstraint, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::probcore::info::mi_raw;
use crate::probcore::{Channel, JointPmf};
use crate::{Error, Result};

const TOP_K: usize = 3;
const DP_SLACK: f64 = 1e-9;

struct Problem1 {
    px: Vec<f64>,
    /// P(y|x)
    pyx: Vec<f64>,
    q: Vec<f64>,
    nx: usize,
    ny: usize,
    k: usize,
    nu: usize,
    rate: f64,
    leak: f64,
    /// Mechanism pinned to the identity (X̂ = X).
    identity: bool,
}

impl Problem1 {
    fn layout(&self) -> Layout {
        if self.identity {
            Layout { blocks: vec![(self.k, self.nu)] }
        } else {
            Layout { blocks: vec![(self.nx, self.k), (self.k, self.nu)] }
        }
    }

    fn split<'a>(&self, point: &'a [f64]) -> (std::borrow::Cow<'a, [f64]>, &'a [f64]) {
        if self.identity {
            let id: Vec<f64> =
                (0..self.nx * self.k).map(|i| if i / self.k == i % self.k { 1.0 } else { 0.0 }).collect();
            (std::borrow::Cow::Owned(id), point)
        } else {
            let cut = self.nx * self.k;
            (std::borrow::Cow::Borrowed(&point[..cut]), &point[cut..])
        }
    }

    fn feasible(&self, v: &[f64], wq: &[f64]) -> bool {
        let p = push(&self.px, v, self.k);
        (self.identity || channel_mi(&self.px, v, self.k) <= self.leak + CONSTRAINT_SLACK)
            && channel_mi(&p, wq, self.nu) <= self.rate + CONSTRAINT_SLACK
    }

    /// Joint (U, X̂, X, Y) with the given law on (X, Y).
    fn chain(&self, v: &[f64], wq: &[f64], xy: &[f64]) -> Vec<f64> {
        let (nu, k, nx, ny) = (self.nu, self.k, self.nx, self.ny);
        let mut j = vec![0.0; nu * k * nx * ny];
        for u in 0..nu {
            for xh in 0..k {
                for x in 0..nx {
                    let w = wq[xh * nu + u] * v[x * k + xh];
                    if w == 0.0 {
                        continue;
                    }
                    for y in 0..ny {
                        j[((u * k + xh) * nx + x) * ny + y] = w * xy[x * ny + y];
                    }
                }
            }
        }
        j
    }

    fn inner(&self, v: &[f64], wq: &[f64]) -> Result<(f64, JointPmf)> {
        let shape = [self.nu, self.k, self.nx, self.ny];
        let pxy: Vec<f64> = (0..self.nx * self.ny).map(|i| self.px[i / self.ny] * self.pyx[i]).collect();
        let pj = JointPmf::named(&["U", "Xhat", "X", "Y"], &shape, normalize(self.chain(v, wq, &pxy)))?;
        let reference =
            JointPmf::named(&["U", "Xhat", "X", "Y"], &shape, normalize(self.chain(v, wq, &self.q)))?;
        let cons = [
            MarginalConstraint::from_raw(&[2], self.px.clone())?,
            MarginalConstraint::from_joint(&[0, 3], &pj.marginal(&[0, 3])?)?,
            MarginalConstraint::from_joint(&[0, 1], &pj.marginal(&[0, 1])?)?,
        ];
        let out = i_project(&reference, &cons, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        Ok((out.min_kl, out.argmin))
    }

    fn eval(&self, raw: &[f64]) -> Option<(f64, Vec<f64>)> {
        let mut point = raw.to_vec();
        if !self.identity {
            let cut = self.nx * self.k;
            shrink_to_budget(&self.px, &mut point[..cut], self.k, self.leak);
        }
        let (v, wq) = self.split(&point);
        let v = v.into_owned();
        let mut wq = wq.to_vec();
        let p = push(&self.px, &v, self.k);
        shrink_to_budget(&p, &mut wq, self.nu, self.rate);
        let off = if self.identity { 0 } else { self.nx * self.k };
        point[off..].copy_from_slice(&wq);
        match self.inner(&v, &wq) {
            Ok((val, _)) => Some((val, point)),
            Err(e) => {
                debug!("inner projection failed during refinement: {e}");
                None
            }
        }
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn search(prob: &Problem1, cfg: &SearchConfig) -> Result<ExponentResult> {
    let n = subdivisions(cfg.grid_step);
    let rows_v = simplex_grid(prob.k, n);
    let rows_u = simplex_grid(prob.nu, n);
    let nv_rows = if prob.identity { 0 } else { prob.nx };
    let total = (rows_v.len() as f64).powi(nv_rows as i32) * (rows_u.len() as f64).powi(prob.k as i32);
    if total > MAX_OUTER_POINTS {
        return Err(Error::TooLarge(format!(
            "{total:.0} channel pairs on the outer grid; increase grid_step or reduce |U|"
        )));
    }
    let total = total as usize;
    let decode = |mut idx: usize| -> Vec<f64> {
        let mut point = Vec::with_capacity(nv_rows * prob.k + prob.k * prob.nu);
        let mut parts = Vec::new();
        for _ in 0..prob.k {
            parts.push(&rows_u[idx % rows_u.len()]);
            idx /= rows_u.len();
        }
        let mut vparts = Vec::new();
        for _ in 0..nv_rows {
            vparts.push(&rows_v[idx % rows_v.len()]);
            idx /= rows_v.len();
        }
        for r in vparts.iter().rev() {
            point.extend_from_slice(r);
        }
        for r in parts.iter().rev() {
            point.extend_from_slice(r);
        }
        point
    };
    let scored: Vec<(f64, usize)> = (0..total)
        .into_par_iter()
        .filter_map(|i| {
            let point = decode(i);
            let (v, wq) = prob.split(&point);
            if !prob.feasible(&v, wq) {
                return None;
            }
            match prob.inner(&v, wq) {
                Ok((val, _)) => Some((val, i)),
                Err(e) => {
                    debug!("skipping grid point {i}: {e}");
                    None
                }
            }
        })
        .collect();
    if scored.is_empty() {
        return Err(Error::Infeasible("no grid point admits a feasible inner problem".into()));
    }
    let mut sorted = scored;
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let layout = prob.layout();
    let eval = |raw: &[f64]| prob.eval(raw);
    let refined: Vec<(f64, Vec<f64>)> = sorted
        .iter()
        .take(TOP_K)
        .map(|&(val, i)| (val, decode(i)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| coordinate_refine(start, &layout, cfg.grid_step, cfg.refine_rounds, &eval))
        .collect();
    let mut best = refined[0].clone();
    for c in refined.into_iter().skip(1) {
        if better((c.0, &c.1), (best.0, &best.1)) {
            best = c;
        }
    }
    let (v, wq) = prob.split(&best.1);
    let (theta, witness) = prob.inner(&v, wq)?;

    let pxy: Vec<f64> = (0..prob.nx * prob.ny).map(|i| prob.px[i / prob.ny] * prob.pyx[i]).collect();
    let j = JointPmf::new(&[prob.nu, prob.k, prob.nx, prob.ny], normalize(prob.chain(&v, wq, &pxy)))?;
    let m = |a: &[usize]| j.marginal(a).map(|m| m.probs().to_vec());
    let i_uy = mi_raw(&m(&[0, 3])?, prob.nu, prob.ny);
    let i_uxh = mi_raw(&m(&[0, 1])?, prob.nu, prob.k);
    let i_xxh = mi_raw(&m(&[2, 1])?, prob.nx, prob.k);
    let i_xy = mi_raw(&m(&[2, 3])?, prob.nx, prob.ny);
    if i_uy > i_uxh.min(i_xy) + DP_SLACK {
        return Err(Error::Internal(format!("data processing violated: I(U;Y)={i_uy}")));
    }
    Ok(ExponentResult {
        theta,
        bound_kind: BoundKind::LowerBound,
        query: None,
        privacy_channel: Some(Channel::from_flat_normalized(prob.nx, prob.k, &v)?),
        quantizer: Some(Channel::from_flat_normalized(prob.k, prob.nu, wq)?),
        inner_witness: Some(witness),
        rate_used: Some(i_uxh),
        leakage_used: Some(i_xxh),
        grid_step: Some(cfg.grid_step),
        evaluations: total + TOP_K * layout.coordinates().len() * cfg.refine_rounds * 40,
    })
}

fn problem(
    p: &JointPmf,
    q: &JointPmf,
    rate: f64,
    leak: f64,
    cfg: &SearchConfig,
    identity: bool,
) -> Result<Problem1> {
    check_pair(p, q)?;
    cfg.validate()?;
    let (nx, ny) = (p.shape()[0], p.shape()[1]);
    let k = if identity { nx } else { cfg.xhat_cardinality.unwrap_or(nx) };
    let nu = cfg.u_cardinality.unwrap_or(k + 2);
    let px = p.marginal_pmf(0)?.probs().to_vec();
    let mut pyx = vec![0.0; nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            if px[x] > 0.0 {
                pyx[x * ny + y] = p.get(&[x, y]) / px[x];
            }
        }
    }
    Ok(Problem1 {
        px,
        pyx,
        q: q.probs().to_vec(),
        nx,
        ny,
        k,
        nu,
        rate: rate.min((k as f64).log2()),
        leak: leak.min((nx as f64).log2()),
        identity,
    })
}

/// Grid-and-refine search for the general achievable exponent. The value is
/// achieved by the reported channels, so it is always a valid lower bound.
pub fn theorem1_lower_bound(
    p: &JointPmf,
    q: &JointPmf,
    query: &ExponentQuery,
    cfg: &SearchConfig,
) -> Result<ExponentResult> {
    query.validate()?;
    let prob = problem(p, q, query.rate, query.leakage, cfg, false)?;
    let mut res = search(&prob, cfg)?;
    res.query = Some(*query);
    Ok(res)
}

/// The bound with the mechanism fixed to the identity (no privacy constraint).
pub fn corollary2_bound(p: &JointPmf, q: &JointPmf, rate: f64, cfg: &SearchConfig) -> Result<ExponentResult> {
    if !(rate >= 0.0) {
        return Err(Error::DomainError(format!("rate {rate}")));
    }
    let prob = problem(p, q, rate, f64::INFINITY, cfg, true)?;
    search(&prob, cfg)
}

/// Zero-rate exponent: min D(P̃_XY || Q_XY) over P̃ with both marginals of P.
pub fn zero_rate_exponent(p: &JointPmf, q: &JointPmf) -> Result<ExponentResult> {
    check_pair(p, q)?;
    if let Some(i) = q.probs().iter().position(|&v| v <= 0.0) {
        return Err(Error::NonpositiveAlternative(format!("Q_XY entry {i} is zero")));
    }
    let cons = [
        MarginalConstraint::from_pmf(0, &p.marginal_pmf(0)?),
        MarginalConstraint::from_pmf(1, &p.marginal_pmf(1)?),
    ];
    let out = i_project(q, &cons, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let mut res = ExponentResult::closed_form(out.min_kl, BoundKind::Exact);
    res.inner_witness = Some(out.argmin);
    res.evaluations = out.iterations;
    Ok(res)
}
