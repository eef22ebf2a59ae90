//! KL projection of a reference law onto an intersection of fixed-marginal
//! families, by cyclic iterative scaling.
//!
//! Each scaling step multiplies the current iterate by `target / marginal`
//! on one constrained set of axes, which is the exact I-projection onto that
//! single family. Cycling over the families converges to the I-projection onto
//! their intersection whenever it is nonempty.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::probcore::info::kl_raw;
use crate::probcore::joint::advance;
use crate::probcore::{tv_distance, Divergence, JointPmf, Pmf};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Per-sweep objective change required, on top of the residual, to stop.
const OBJ_TOL: f64 = 1e-12;
/// Window (in sweeps) over which a non-shrinking residual means infeasible.
const PLATEAU_WINDOW: usize = 100;
const PLATEAU_RATIO: f64 = 0.999;
/// Largest grid the brute-force oracle will walk.
const MAX_GRID_POINTS: f64 = 5e7;
const MAX_FREE_DIM: usize = 3;

/// Requires the marginal of the ambient law on `axes` to equal `target`
/// (row-major over `axes` in the order given).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalConstraint {
    pub axes: Vec<usize>,
    target: Vec<f64>,
}

impl MarginalConstraint {
    pub fn from_pmf(axis: usize, target: &Pmf) -> Self {
        Self { axes: vec![axis], target: target.probs().to_vec() }
    }

    pub fn from_joint(axes: &[usize], target: &JointPmf) -> Result<Self> {
        if target.ndim() != axes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} axes for a {}-variable target",
                axes.len(),
                target.ndim()
            )));
        }
        Ok(Self { axes: axes.to_vec(), target: target.probs().to_vec() })
    }

    /// Unvalidated target; entries must be nonnegative but need not sum to 1.
    pub fn from_raw(axes: &[usize], target: Vec<f64>) -> Result<Self> {
        if target.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidPmf("negative or non-finite target entry".into()));
        }
        Ok(Self { axes: axes.to_vec(), target })
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IProjectionResult {
    /// D(argmin || reference), bits.
    pub min_kl: f64,
    pub argmin: JointPmf,
    pub iterations: usize,
    pub converged: bool,
    /// Largest TV distance between a constrained marginal and its target.
    pub residual: f64,
}

/// Cell index of every ambient entry, for each constraint.
struct Plan {
    cells: Vec<Vec<usize>>,
    targets: Vec<Vec<f64>>,
}

fn plan(shape: &[usize], constraints: &[MarginalConstraint]) -> Result<Plan> {
    let size: usize = shape.iter().product();
    let mut cells = Vec::with_capacity(constraints.len());
    for c in constraints {
        for (i, &a) in c.axes.iter().enumerate() {
            if a >= shape.len() || c.axes[..i].contains(&a) {
                return Err(Error::DimensionMismatch(format!("bad constraint axes {:?}", c.axes)));
            }
        }
        let want: usize = c.axes.iter().map(|&a| shape[a]).product();
        if want != c.target.len() {
            return Err(Error::DimensionMismatch(format!(
                "constraint on {:?} needs {want} entries, got {}",
                c.axes,
                c.target.len()
            )));
        }
        let mut idx = vec![0usize; shape.len()];
        let mut map = Vec::with_capacity(size);
        for _ in 0..size {
            map.push(c.axes.iter().fold(0, |acc, &a| acc * shape[a] + idx[a]));
            advance(&mut idx, shape);
        }
        cells.push(map);
    }
    Ok(Plan { cells, targets: constraints.iter().map(|c| c.target.clone()).collect() })
}

fn marginal_into(p: &[f64], cells: &[usize], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (&v, &c) in p.iter().zip(cells) {
        out[c] += v;
    }
}

fn residual(p: &[f64], plan: &Plan, buf: &mut Vec<f64>) -> f64 {
    let mut r: f64 = 0.0;
    for (cells, t) in plan.cells.iter().zip(&plan.targets) {
        buf.resize(t.len(), 0.0);
        marginal_into(p, cells, buf);
        r = r.max(tv_distance(buf, t));
    }
    r
}

fn check_support(reference: &[f64], plan: &Plan) -> Result<()> {
    let mut buf = Vec::new();
    for (k, (cells, t)) in plan.cells.iter().zip(&plan.targets).enumerate() {
        buf.resize(t.len(), 0.0);
        marginal_into(reference, cells, &mut buf);
        if let Some(j) = (0..t.len()).find(|&j| t[j] > 0.0 && buf[j] <= 0.0) {
            return Err(Error::SupportMismatch(format!("constraint {k}, cell {j}")));
        }
    }
    Ok(())
}

/// Solver options for [`i_project_with`].
#[derive(Debug, Clone, Copy)]
pub struct IProjectOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Keep a copy of the iterate after every sweep.
    pub keep_trace: bool,
}

impl Default for IProjectOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, keep_trace: false }
    }
}

/// Iterates after each full sweep, starting with the reference itself.
pub type Trace = Vec<Vec<f64>>;

/// I-projection of `reference` onto `{P : P has every constrained marginal}`.
pub fn i_project(
    reference: &JointPmf,
    constraints: &[MarginalConstraint],
    tol: f64,
    max_iter: usize,
) -> Result<IProjectionResult> {
    i_project_with(reference, constraints, IProjectOptions { tol, max_iter, keep_trace: false })
        .map(|(r, _)| r)
}

pub fn i_project_with(
    reference: &JointPmf,
    constraints: &[MarginalConstraint],
    opts: IProjectOptions,
) -> Result<(IProjectionResult, Trace)> {
    if !(opts.tol > 0.0) {
        return Err(Error::DomainError(format!("tolerance {}", opts.tol)));
    }
    let plan = plan(reference.shape(), constraints)?;
    let r = reference.probs();
    check_support(r, &plan)?;

    let mut p = r.to_vec();
    let mut trace = Vec::new();
    if opts.keep_trace {
        trace.push(p.clone());
    }
    let mut buf = Vec::new();
    let mut history: Vec<f64> = Vec::new();
    let mut prev_obj = f64::NAN;
    let mut res = residual(&p, &plan, &mut buf);
    if res <= opts.tol {
        return Ok((finish(reference, p, 0, true, res)?, trace));
    }
    for sweep in 1..=opts.max_iter {
        for (cells, t) in plan.cells.iter().zip(&plan.targets) {
            buf.resize(t.len(), 0.0);
            marginal_into(&p, cells, &mut buf);
            for (v, &c) in p.iter_mut().zip(cells) {
                if *v > 0.0 {
                    *v *= t[c] / buf[c];
                }
            }
        }
        if opts.keep_trace {
            trace.push(p.clone());
        }
        res = residual(&p, &plan, &mut buf);
        let obj = kl_raw(&p, r).as_f64();
        let settled = (obj - prev_obj).abs() <= OBJ_TOL;
        prev_obj = obj;
        if res <= opts.tol && settled {
            return Ok((finish(reference, p, sweep, true, res)?, trace));
        }
        history.push(res);
        if sweep > PLATEAU_WINDOW && res > opts.tol {
            let old = history[sweep - 1 - PLATEAU_WINDOW];
            if res >= PLATEAU_RATIO * old {
                return Err(Error::Infeasible(format!(
                    "residual stuck at {res:.3e} after {sweep} sweeps"
                )));
            }
        }
    }
    if res <= opts.tol {
        return Ok((finish(reference, p, opts.max_iter, false, res)?, trace));
    }
    Err(Error::Infeasible(format!(
        "residual {res:.3e} above tolerance after {} sweeps",
        opts.max_iter
    )))
}

fn finish(
    reference: &JointPmf,
    mut p: Vec<f64>,
    iterations: usize,
    converged: bool,
    residual: f64,
) -> Result<IProjectionResult> {
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::Infeasible(format!("projected mass {s}")));
    }
    p.iter_mut().for_each(|v| *v /= s);
    let min_kl = match kl_raw(&p, reference.probs()) {
        Divergence::Finite(v) => v,
        Divergence::Infinite => return Err(Error::Internal("projection left the support".into())),
    };
    let argmin = JointPmf::with_labels(
        reference.variables().to_vec(),
        reference.alphabets().to_vec(),
        p,
    )?;
    Ok(IProjectionResult { min_kl, argmin, iterations, converged, residual })
}

/// Affine parametrization of the constrained polytope by a few free entries.
struct Polytope {
    /// Ambient indices of the support entries.
    support: Vec<usize>,
    /// Position (within `support`) of each free coordinate.
    free: Vec<usize>,
    /// Upper bound for each free coordinate.
    upper: Vec<f64>,
    /// For each pivot: (support position, constant, coefficients on free coords).
    pivots: Vec<(usize, f64, Vec<f64>)>,
}

const RREF_EPS: f64 = 1e-10;

fn polytope(reference: &[f64], plan: &Plan) -> Result<Polytope> {
    let support: Vec<usize> = (0..reference.len()).filter(|&i| reference[i] > 0.0).collect();
    let m = support.len();
    // Rows: one per constraint cell, plus total mass.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (cells, t) in plan.cells.iter().zip(&plan.targets) {
        for (j, &tj) in t.iter().enumerate() {
            let mut row = vec![0.0; m + 1];
            for (k, &i) in support.iter().enumerate() {
                if cells[i] == j {
                    row[k] = 1.0;
                }
            }
            row[m] = tj;
            rows.push(row);
        }
    }
    let mut total = vec![1.0; m + 1];
    total[m] = 1.0;
    rows.push(total);

    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..m {
        let Some(best) = (r..rows.len()).max_by(|&a, &b| {
            rows[a][col].abs().partial_cmp(&rows[b][col].abs()).unwrap()
        }) else {
            break;
        };
        if rows[best][col].abs() < RREF_EPS {
            continue;
        }
        rows.swap(r, best);
        let piv = rows[r][col];
        rows[r].iter_mut().for_each(|v| *v /= piv);
        for k in 0..rows.len() {
            if k != r && rows[k][col].abs() > 0.0 {
                let f = rows[k][col];
                for c in 0..=m {
                    let d = f * rows[r][c];
                    rows[k][c] -= d;
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    if rows[r..].iter().any(|row| row[m].abs() > 1e-9) {
        return Err(Error::Infeasible("marginal equations are inconsistent".into()));
    }
    let free: Vec<usize> = (0..m).filter(|c| !pivot_cols.contains(c)).collect();
    let pivots = pivot_cols
        .iter()
        .enumerate()
        .map(|(k, &col)| (col, rows[k][m], free.iter().map(|&f| -rows[k][f]).collect()))
        .collect();
    // An entry can never exceed the smallest target cell it falls in.
    let upper = free
        .iter()
        .map(|&f| {
            let i = support[f];
            plan.cells
                .iter()
                .zip(&plan.targets)
                .map(|(cells, t)| t[cells[i]])
                .fold(1.0_f64, f64::min)
        })
        .collect();
    Ok(Polytope { support, free, upper, pivots })
}

/// Exhaustive grid minimum of D(P || reference) over the constrained set.
/// Only for small problems (at most three free dimensions); meant as a test
/// oracle for [`i_project`].
pub fn brute_force_i_project(
    reference: &JointPmf,
    constraints: &[MarginalConstraint],
    grid_step: f64,
) -> Result<IProjectionResult> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::DomainError(format!("grid step {grid_step}")));
    }
    let plan = plan(reference.shape(), constraints)?;
    let r = reference.probs();
    check_support(r, &plan)?;
    let poly = polytope(r, &plan)?;
    let d = poly.free.len();
    if d > MAX_FREE_DIM {
        return Err(Error::TooLarge(format!("{d} free dimensions (at most {MAX_FREE_DIM})")));
    }
    let counts: Vec<usize> =
        poly.upper.iter().map(|u| (u / grid_step).floor() as usize + 1).collect();
    let total: f64 = counts.iter().map(|&c| c as f64).product();
    if total > MAX_GRID_POINTS {
        return Err(Error::TooLarge(format!("{total:.0} grid points")));
    }
    let total = total as usize;
    let m = poly.support.len();
    let rs: Vec<f64> = poly.support.iter().map(|&i| r[i]).collect();

    let eval = |k: usize| -> Option<(f64, Vec<f64>)> {
        let mut t = vec![0.0; d];
        let mut rem = k;
        for a in (0..d).rev() {
            t[a] = (rem % counts[a]) as f64 * grid_step;
            rem /= counts[a];
        }
        let mut x = vec![0.0; m];
        for (a, &f) in poly.free.iter().enumerate() {
            x[f] = t[a];
        }
        for (col, c0, coef) in &poly.pivots {
            let v = c0 + coef.iter().zip(&t).map(|(c, tv)| c * tv).sum::<f64>();
            if v < -1e-12 {
                return None;
            }
            x[*col] = v.max(0.0);
        }
        let kl = kl_raw(&x, &rs).as_f64();
        Some((kl, x))
    };
    let best = (0..total)
        .into_par_iter()
        .filter_map(|k| eval(k).map(|(v, _)| (v, k)))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
        .ok_or_else(|| Error::Infeasible("no grid point satisfies the constraints".into()))?;
    let (_, x) = eval(best.1).expect("best point is feasible");
    let mut p = vec![0.0; r.len()];
    for (k, &i) in poly.support.iter().enumerate() {
        p[i] = x[k];
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    let res = residual(&p, &plan, &mut Vec::new());
    let min_kl = kl_raw(&p, r).as_f64();
    let argmin = JointPmf::with_labels(
        reference.variables().to_vec(),
        reference.alphabets().to_vec(),
        p,
    )?;
    Ok(IProjectionResult { min_kl, argmin, iterations: total, converged: true, residual: res })
}

/// Free dimension of the constrained polytope (support entries minus the
/// rank of the marginal equations).
pub fn free_dimension(reference: &JointPmf, constraints: &[MarginalConstraint]) -> Result<usize> {
    let plan = plan(reference.shape(), constraints)?;
    Ok(polytope(reference.probs(), &plan)?.free.len())
}
