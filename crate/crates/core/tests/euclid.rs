use privexp_core::euclid::*;
use privexp_core::exponents::{binary_tai_exponent, SearchConfig};
use privexp_core::probcore::{JointPmf, Pmf};
use privexp_core::Error;
use proptest::prelude::*;

const LN2: f64 = std::f64::consts::LN_2;

fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum::<f64>() / LN2
}

fn mi_bits(j: &[Vec<f64>]) -> f64 {
    let ra: Vec<f64> = j.iter().map(|r| r.iter().sum()).collect();
    let cb: Vec<f64> = (0..j[0].len()).map(|c| j.iter().map(|r| r[c]).sum()).collect();
    let mut s = 0.0;
    for (a, row) in j.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            if v > 0.0 {
                s += v * (v / (ra[a] * cb[b])).ln();
            }
        }
    }
    s / LN2
}

fn approx(p: &JointPmf, r: f64, l: f64) -> EuclidSolution {
    euclid_tai_solve(p, r, l, &Pmf::uniform(2).unwrap(), &SearchConfig::default()).unwrap()
}

#[test]
fn chi2_examples() {
    let q = Pmf::bernoulli(0.5).unwrap();
    assert_eq!(chi2_divergence_approx(&q, &q).unwrap(), 0.0);
    let p = Pmf::bernoulli(0.51).unwrap();
    let want = 0.5 / LN2 * 4.0 * 0.01f64.powi(2);
    assert!((chi2_divergence_approx(&p, &q).unwrap() - want).abs() < 1e-15);
    assert!((want - 2.885e-4).abs() < 1e-7);
    let zero = Pmf::new(vec![1.0, 0.0]).unwrap();
    assert!(matches!(chi2_divergence_approx(&q, &zero), Err(Error::ZeroSupport(_))));
}

#[test]
fn weighted_matrix_examples() {
    let id = JointPmf::new(&[2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
    let w = build_weighted_matrix(&id).unwrap();
    assert_eq!(w.b, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

    for &(q, s2) in &[(0.1, 0.8), (0.25, 0.5), (0.5, 0.0)] {
        let s = build_weighted_matrix(&JointPmf::dsbs(q).unwrap()).unwrap().singular_values();
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!((s[1] - s2).abs() < 1e-12, "q={q}: {s:?}");
    }

    let deg = JointPmf::new(&[2, 2], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
    assert!(matches!(build_weighted_matrix(&deg), Err(Error::DegenerateMarginal(_))));
}

#[test]
fn binary_closed_form_examples() {
    assert_eq!(binary_euclid_approx(0.5, 0.3, 0.3).unwrap(), 0.0);
    assert_eq!(binary_euclid_approx(0.1, 0.0, 0.3).unwrap(), 0.0);
    assert_eq!(binary_euclid_approx(0.1, 0.3, 0.0).unwrap(), 0.0);
    let v = binary_euclid_approx(0.1, 0.01, 0.01).unwrap();
    assert!((v - 2.0 * LN2 * 0.64 * 1e-4).abs() < 1e-18);
    assert!((v - 8.8723e-5).abs() < 1e-9);
    assert!(matches!(binary_euclid_approx(0.7, 0.1, 0.1), Err(Error::DomainError(_))));
    assert!(matches!(binary_euclid_approx(0.1, -0.1, 0.1), Err(Error::DomainError(_))));
}

#[test]
fn approximation_tracks_exact_exponent() {
    for &r in &[0.005, 0.01, 0.02] {
        let exact = binary_tai_exponent(0.1, r, r).unwrap();
        let a = binary_euclid_approx(0.1, r, r).unwrap();
        assert!((a - exact).abs() / exact <= 0.15, "R=L={r}: {a} vs {exact}");
    }
}

#[test]
fn general_solver_recovers_binary_case() {
    let p = JointPmf::dsbs(0.1).unwrap();
    for &r in &[0.005, 0.01, 0.02] {
        let sol = approx(&p, r, r);
        let want = binary_euclid_approx(0.1, r, r).unwrap();
        assert!((sol.value - want).abs() / want <= 0.05, "R=L={r}: {} vs {want}", sol.value);
        assert!((sol.value - want).abs() / want <= 1e-9);
    }
}

#[test]
fn zero_budgets_give_zero() {
    let p = JointPmf::dsbs(0.1).unwrap();
    assert_eq!(approx(&p, 0.0, 0.01).value, 0.0);
    assert_eq!(approx(&p, 0.01, 0.0).value, 0.0);
}

#[test]
fn optimum_saturates_both_budgets_and_respects_invariants() {
    let p = JointPmf::new(&[3, 3], vec![0.2, 0.05, 0.05, 0.03, 0.25, 0.02, 0.1, 0.05, 0.25]).unwrap();
    let pxh = Pmf::new(vec![0.5, 0.3, 0.2]).unwrap();
    let cfg = SearchConfig { u_cardinality: Some(3), ..SearchConfig::default() };
    let (r, l) = (0.01, 0.02);
    let sol = euclid_tai_solve(&p, r, l, &pxh, &cfg).unwrap();
    let ps = &sol.perturbations;
    let pu = ps.p_u.probs();
    let px = p.marginal_pmf(0).unwrap().probs().to_vec();
    let q = pxh.probs();

    let rate_energy: f64 = ps.k_u.iter().zip(pu).map(|(k, w)| w * k.iter().map(|v| v * v).sum::<f64>()).sum();
    let leak_energy: f64 = ps.k_xhat.iter().zip(q).map(|(k, w)| w * k.iter().map(|v| v * v).sum::<f64>()).sum();
    assert!((rate_energy - 2.0 * r * LN2).abs() < 1e-6);
    assert!((leak_energy - 2.0 * l * LN2).abs() < 1e-6);

    for k in &ps.k_u {
        let s: f64 = k.iter().zip(q).map(|(v, w)| v * w.sqrt()).sum();
        assert!(s.abs() < 1e-12);
    }
    for k in &ps.k_xhat {
        let s: f64 = k.iter().zip(&px).map(|(v, w)| v * w.sqrt()).sum();
        assert!(s.abs() < 1e-12);
    }
    for i in 0..3 {
        let m: f64 = ps.k_u.iter().zip(pu).map(|(k, w)| w * k[i] * q[i].sqrt()).sum();
        assert!(m.abs() < 1e-12);
    }

    // The value does not depend on the output law or |U|.
    let base = approx(&p, r, l).value;
    assert!((sol.value - base).abs() <= 1e-9 * base);
}

#[test]
fn perturbations_realize_the_approximate_exponent() {
    // Build actual channels from the optimal perturbations and evaluate the
    // informations exactly.
    let q = 0.1;
    let p = JointPmf::dsbs(q).unwrap();
    let (r, l) = (0.002, 0.003);
    let sol = approx(&p, r, l);
    let ps = &sol.perturbations;
    let px = [0.5f64, 0.5];
    let pxh = [0.5f64, 0.5];
    let pu = ps.p_u.probs();
    let mut juy = vec![vec![0.0; 2]; pu.len()];
    let mut juxh = vec![vec![0.0; 2]; pu.len()];
    let mut jxhx = vec![vec![0.0; 2]; 2];
    for (u, &wu) in pu.iter().enumerate() {
        for xh in 0..2 {
            let pxh_u = pxh[xh] + pxh[xh].sqrt() * ps.k_u[u][xh];
            juxh[u][xh] += wu * pxh_u;
            for x in 0..2 {
                let px_xh = px[x] + px[x].sqrt() * ps.k_xhat[xh][x];
                if u == 0 {
                    jxhx[xh][x] = pxh[xh] * px_xh;
                }
                for y in 0..2 {
                    let pyx = if x == y { 1.0 - q } else { q };
                    juy[u][y] += wu * pxh_u * px_xh * pyx;
                }
            }
        }
    }
    assert!((mi_bits(&juxh) - r).abs() / r < 0.02);
    assert!((mi_bits(&jxhx) - l).abs() / l < 0.02);
    assert!((mi_bits(&juy) - sol.value).abs() / sol.value < 0.05, "{} vs {}", mi_bits(&juy), sol.value);
}

#[test]
fn solver_is_deterministic() {
    let p = JointPmf::new(&[2, 3], vec![0.3, 0.1, 0.1, 0.05, 0.15, 0.3]).unwrap();
    let a = approx(&p, 0.01, 0.01);
    let b = approx(&p, 0.01, 0.01);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chi2_matches_kl_for_close_pairs(q in 0.3..0.7f64, d in -0.0099..0.0099f64) {
        prop_assume!(d.abs() > 1e-6);
        let qq = Pmf::bernoulli(q).unwrap();
        let pp = Pmf::bernoulli(q + d).unwrap();
        let kl = kl_bits(pp.probs(), qq.probs());
        let a = chi2_divergence_approx(&pp, &qq).unwrap();
        prop_assert!((a - kl).abs() / kl < 0.01);
    }

    #[test]
    fn binary_approx_is_bilinear(q in 0.0..0.5f64, r in 0.0..0.05f64, l in 0.0..0.05f64) {
        let base = binary_euclid_approx(q, r, l).unwrap();
        prop_assert!((binary_euclid_approx(q, 2.0 * r, l).unwrap() - 2.0 * base).abs() <= 1e-15);
        prop_assert!((binary_euclid_approx(q, r, 2.0 * l).unwrap() - 2.0 * base).abs() <= 1e-15);
    }

    #[test]
    fn random_feasible_points_do_not_beat_solver(
        w in prop::collection::vec(0.05..1.0f64, 6),
        raw in prop::collection::vec(-1.0..1.0f64, 2),
    ) {
        // 2x3 source, binary X̂ and U with uniform laws. A feasible point has
        // k_0 = -k_1 = c (1, -1)/√2 and k_x̂ = a_x̂ n with n ⊥ √P_X,
        // a_0 = -a_1 by the mixture constraint.
        let s: f64 = w.iter().sum();
        let p = JointPmf::new(&[2, 3], w.iter().map(|v| v / s).collect()).unwrap();
        let (r, l) = (0.01, 0.01);
        let best = approx(&p, r, l).value;
        let px = p.marginal_pmf(0).unwrap().probs().to_vec();
        let py = p.marginal_pmf(1).unwrap().probs().to_vec();
        let n = [px[1].sqrt(), -px[0].sqrt()];
        let c = (2.0 * r * LN2).sqrt() * raw[0];
        let a = (2.0 * l * LN2).sqrt() * raw[1];
        let ku = [c / 2f64.sqrt(), -c / 2f64.sqrt()];
        // P_{Y|U=0} - P_Y = W Φ ψ_0 with φ_x̂ = √P_X ∘ k_x̂, ψ_0 = √P_X̂ ∘ k_0.
        let mut diff = [0.0; 3];
        for (y, d) in diff.iter_mut().enumerate() {
            for x in 0..2 {
                let wyx = p.get(&[x, y]) / px[x];
                for xh in 0..2 {
                    let ax = if xh == 0 { a } else { -a };
                    *d += wyx * px[x].sqrt() * ax * n[x] * 0.5f64.sqrt() * ku[xh];
                }
            }
        }
        let val = 0.5 / LN2 * diff.iter().zip(&py).map(|(d, q)| d * d / q).sum::<f64>();
        prop_assert!(val <= best * (1.0 + 1e-9) + 1e-18, "{val} > {best}");
    }
}
