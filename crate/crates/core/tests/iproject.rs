use privexp_core::iproject::{
    brute_force_i_project, free_dimension, i_project, i_project_with, IProjectOptions,
    MarginalConstraint,
};
use privexp_core::probcore::{JointPmf, Pmf};
use privexp_core::Error;
use proptest::prelude::*;

const TOL: f64 = 1e-9;
const MAX_IT: usize = 100_000;

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).log2()).sum()
}

/// min over the coupling family [[c/2, (1-c)/2], [(1-c)/2, c/2]] (uniform
/// marginals) of D(. || reference), by scanning c.
fn coupling_scan(reference: &[f64], step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    (0..=n)
        .map(|i| {
            let c = i as f64 * step;
            kl(&[c / 2.0, (1.0 - c) / 2.0, (1.0 - c) / 2.0, c / 2.0], reference)
        })
        .fold(f64::INFINITY, f64::min)
}

fn uniform_marginals() -> Vec<MarginalConstraint> {
    let u = Pmf::uniform(2).unwrap();
    vec![MarginalConstraint::from_pmf(0, &u), MarginalConstraint::from_pmf(1, &u)]
}

#[test]
fn already_feasible_reference_projects_to_itself() {
    let r = JointPmf::dsbs(0.3).unwrap();
    let out = i_project(&r, &uniform_marginals(), TOL, MAX_IT).unwrap();
    assert_eq!(out.min_kl, 0.0);
    assert_eq!(out.argmin.probs(), r.probs());
    assert!(out.converged);
}

#[test]
fn product_reference_with_its_own_marginals() {
    let px = Pmf::new(vec![0.3, 0.7]).unwrap();
    let py = Pmf::new(vec![0.6, 0.4]).unwrap();
    let r = JointPmf::product(&px, &py).unwrap();
    let c = vec![MarginalConstraint::from_pmf(0, &px), MarginalConstraint::from_pmf(1, &py)];
    assert!(i_project(&r, &c, TOL, MAX_IT).unwrap().min_kl.abs() < 1e-12);
}

#[test]
fn bsc_coupled_reference_matches_scan() {
    let r = JointPmf::dsbs(0.4).unwrap();
    let got = i_project(&r, &uniform_marginals(), TOL, MAX_IT).unwrap().min_kl;
    assert!((got - coupling_scan(r.probs(), 1e-5)).abs() < 1e-4);
}

#[test]
fn skewed_reference_matches_scan() {
    let r = JointPmf::new(&[2, 2], vec![0.5, 0.1, 0.1, 0.3]).unwrap();
    let got = i_project(&r, &uniform_marginals(), TOL, MAX_IT).unwrap();
    let want = coupling_scan(r.probs(), 1e-5);
    assert!(want > 0.01);
    assert!((got.min_kl - want).abs() < 1e-4, "{} vs {want}", got.min_kl);
    assert!(got.residual <= TOL);
}

#[test]
fn dsbs_reference_brute_force_agrees() {
    let r = JointPmf::new(&[2, 2], vec![0.6, 0.05, 0.15, 0.2]).unwrap();
    let c = uniform_marginals();
    let a = i_project(&r, &c, TOL, MAX_IT).unwrap().min_kl;
    let b = brute_force_i_project(&r, &c, 1e-4).unwrap().min_kl;
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn support_mismatch_is_reported() {
    let r = JointPmf::new(&[2, 2], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
    let err = i_project(&r, &uniform_marginals(), TOL, MAX_IT).unwrap_err();
    assert!(matches!(err, Error::SupportMismatch(_)));
}

#[test]
fn unequal_masses_are_infeasible() {
    let r = JointPmf::new(&[2, 2], vec![0.25; 4]).unwrap();
    let c = vec![
        MarginalConstraint::from_raw(&[0], vec![0.5, 0.5]).unwrap(),
        MarginalConstraint::from_raw(&[1], vec![0.3, 0.3]).unwrap(),
    ];
    assert!(matches!(i_project(&r, &c, TOL, MAX_IT), Err(Error::Infeasible(_))));
    assert!(matches!(brute_force_i_project(&r, &c, 0.01), Err(Error::Infeasible(_))));
}

#[test]
fn brute_force_refuses_large_problems() {
    let r = JointPmf::new(&[3, 3], vec![1.0 / 9.0; 9]).unwrap();
    let u = Pmf::uniform(3).unwrap();
    let c = vec![MarginalConstraint::from_pmf(0, &u), MarginalConstraint::from_pmf(1, &u)];
    assert_eq!(free_dimension(&r, &c).unwrap(), 4);
    assert!(matches!(brute_force_i_project(&r, &c, 0.1), Err(Error::TooLarge(_))));
}

#[test]
fn trivial_cases_brute_force() {
    let r = JointPmf::dsbs(0.3).unwrap();
    let out = brute_force_i_project(&r, &uniform_marginals(), 0.05).unwrap();
    assert!(out.min_kl.abs() < 1e-12);
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn three_way(reference: Vec<f64>, witness: Vec<f64>, k: usize) -> (JointPmf, Vec<MarginalConstraint>) {
    let shape = [2, 2, k];
    let r = JointPmf::new(&shape, normalize(reference)).unwrap();
    let w = JointPmf::new(&shape, normalize(witness)).unwrap();
    let c = vec![
        MarginalConstraint::from_joint(&[0, 2], &w.marginal(&[0, 2]).unwrap()).unwrap(),
        MarginalConstraint::from_joint(&[1, 2], &w.marginal(&[1, 2]).unwrap()).unwrap(),
    ];
    (r, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn objective_toward_projection_never_increases(
        r in prop::collection::vec(0.05f64..1.0, 8),
        w in prop::collection::vec(0.05f64..1.0, 8),
    ) {
        let (r, c) = three_way(r, w, 2);
        let opts = IProjectOptions { keep_trace: true, ..Default::default() };
        let (out, trace) = i_project_with(&r, &c, opts).unwrap();
        let star = out.argmin.probs();
        let d: Vec<f64> = trace.iter().map(|p| kl(star, p)).collect();
        for w in d.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn constraints_hold_at_convergence(
        r in prop::collection::vec(0.05f64..1.0, 12),
        w in prop::collection::vec(0.05f64..1.0, 12),
    ) {
        let (r, c) = three_way(r, w, 3);
        let out = i_project(&r, &c, TOL, MAX_IT).unwrap();
        prop_assert!(out.converged);
        for con in &c {
            let m = out.argmin.marginal(&con.axes).unwrap();
            let tv: f64 = 0.5 * m.probs().iter().zip(con.target()).map(|(a, b)| (a - b).abs()).sum::<f64>();
            prop_assert!(tv <= TOL);
        }
        prop_assert!(out.min_kl >= 0.0);
    }

    #[test]
    fn pythagorean_inequality(
        r in prop::collection::vec(0.05f64..1.0, 8),
        w in prop::collection::vec(0.05f64..1.0, 8),
    ) {
        let (r, c) = three_way(r, w.clone(), 2);
        let out = i_project(&r, &c, TOL, MAX_IT).unwrap();
        // The witness and anything on the segment to the projection are feasible.
        let wn = normalize(w);
        for t in [0.0, 0.3, 0.7, 1.0] {
            let p: Vec<f64> = wn.iter().zip(out.argmin.probs()).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            let lhs = kl(&p, r.probs());
            let rhs = kl(&p, out.argmin.probs()) + out.min_kl;
            prop_assert!(lhs >= rhs - 1e-7, "{lhs} < {rhs}");
        }
    }

    #[test]
    fn oracle_equivalence(
        r in prop::collection::vec(0.05f64..1.0, 8),
        w in prop::collection::vec(0.05f64..1.0, 8),
    ) {
        let (r, c) = three_way(r, w, 2);
        let step = 1e-3;
        let a = i_project(&r, &c, TOL, MAX_IT).unwrap().min_kl;
        let b = brute_force_i_project(&r, &c, step).unwrap().min_kl;
        prop_assert!((a - b).abs() <= 10.0 * step, "{a} vs {b}");
        prop_assert!(a <= b + 1e-9);
    }
}
