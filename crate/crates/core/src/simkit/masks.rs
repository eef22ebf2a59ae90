//! Sequences of length <= 64 stored as one bitmask per symbol. Joint type
//! counts are popcounts of mask intersections.

#[derive(Clone, Copy)]
pub(crate) struct Masks<'a>(pub &'a [u64]);

pub(crate) fn encode(seq: &[usize], k: usize, out: &mut Vec<u64>) {
    out.clear();
    out.resize(k, 0);
    for (i, &s) in seq.iter().enumerate() {
        out[s] |= 1u64 << i;
    }
}

/// Total variation between the type of `a` and `target`.
pub(crate) fn tv_single(a: Masks, target: &[f64], n: usize) -> f64 {
    let nf = n as f64;
    0.5 * a.0.iter().zip(target).map(|(m, t)| (m.count_ones() as f64 / nf - t).abs()).sum::<f64>()
}

/// Total variation between the joint type of (a, b) and `target`
/// (|a| x |b| row-major).
pub(crate) fn tv_joint(a: Masks, b: Masks, target: &[f64], n: usize) -> f64 {
    let nf = n as f64;
    let kb = b.0.len();
    let mut s = 0.0;
    for (i, ma) in a.0.iter().enumerate() {
        for (j, mb) in b.0.iter().enumerate() {
            s += ((ma & mb).count_ones() as f64 / nf - target[i * kb + j]).abs();
        }
    }
    0.5 * s
}

/// Joint counts of (a, b) added into `acc` (|a| x |b| row-major).
pub(crate) fn add_joint_counts(a: Masks, b: Masks, acc: &mut [u64]) {
    let kb = b.0.len();
    for (i, ma) in a.0.iter().enumerate() {
        for (j, mb) in b.0.iter().enumerate() {
            acc[i * kb + j] += (ma & mb).count_ones() as u64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::{empirical_type, tv_distance};

    #[test]
    fn matches_type_based_tv() {
        let a = [0usize, 1, 1, 2, 0, 1, 2, 2, 2, 0];
        let b = [1usize, 1, 0, 0, 0, 1, 1, 0, 1, 1];
        let target = [0.1, 0.2, 0.15, 0.15, 0.3, 0.1];
        let (mut ma, mut mb) = (Vec::new(), Vec::new());
        encode(&a, 3, &mut ma);
        encode(&b, 2, &mut mb);
        let t = empirical_type(&[&a, &b], &[3, 2]).unwrap();
        let want = tv_distance(t.probs(), &target);
        assert!((tv_joint(Masks(&ma), Masks(&mb), &target, 10) - want).abs() < 1e-15);
        let ta = empirical_type(&[&a], &[3]).unwrap();
        let pa = [0.3, 0.3, 0.4];
        assert!((tv_single(Masks(&ma), &pa, 10) - tv_distance(ta.probs(), &pa)).abs() < 1e-15);
    }
}
