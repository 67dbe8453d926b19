use std::sync::Arc;

use proptest::prelude::*;
use worldplan_core::evidence::{
    interval, joint_mass, plausibility, project, support, CompatibilityRelation, Direction, Frame, MassDistribution,
    Proposition,
};

/// Focal sets as bitmasks over `n` elements with masses summing to one.
fn distribution(max_elements: usize) -> impl Strategy<Value = (usize, Vec<(u32, f64)>)> {
    (1..=max_elements).prop_flat_map(|n| {
        let full = (1u32 << n) - 1;
        (Just(n), prop::collection::vec((1..=full, 1u32..1000), 1..8)).prop_map(|(n, raw)| {
            let total: u32 = raw.iter().map(|(_, w)| w).sum();
            (n, raw.into_iter().map(|(s, w)| (s, w as f64 / total as f64)).collect())
        })
    })
}

fn build(name: &str, n: usize, focal: &[(u32, f64)]) -> MassDistribution {
    let frame = Arc::new(Frame::new(name, (0..n).map(|i| format!("e{i}")), 1).unwrap());
    let entries = focal.iter().map(|&(mask, m)| (Proposition::from_indices(&frame, members(mask)).unwrap(), m));
    MassDistribution::new(frame.clone(), entries.collect::<Vec<_>>()).unwrap()
}

fn members(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask & (1 << i) != 0)
}

/// Brute-force support and plausibility of every subset.
fn oracle(n: usize, focal: &[(u32, f64)]) -> Vec<(f64, f64)> {
    (0..1u32 << n)
        .map(|a| {
            let spt = focal.iter().filter(|(b, _)| b & !a == 0).map(|(_, m)| m).sum();
            let pls = focal.iter().filter(|(b, _)| b & a != 0).map(|(_, m)| m).sum();
            (spt, pls)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn support_and_plausibility_match_powerset((n, focal) in distribution(5)) {
        let m = build("f", n, &focal);
        let frame = m.frame().clone();
        for (a, (spt, pls)) in oracle(n, &focal).into_iter().enumerate() {
            if a == 0 {
                continue;
            }
            let prop = Proposition::from_indices(&frame, members(a as u32)).unwrap();
            prop_assert!((support(&m, &prop).unwrap() - spt).abs() <= 1e-9);
            prop_assert!((plausibility(&m, &prop).unwrap() - pls).abs() <= 1e-9);
            let iv = interval(&m, &prop).unwrap();
            prop_assert!(iv.support <= iv.plausibility);
            prop_assert!((iv.support - spt).abs() <= 1e-9);
        }
    }

    #[test]
    fn joint_marginals_recover_sources((n1, f1) in distribution(3), (n2, f2) in distribution(3)) {
        let a = build("a", n1, &f1);
        let b = build("b", n2, &f2);
        let joint = joint_mass(&[a.clone(), b.clone()]).unwrap();
        prop_assert!((joint.total() - 1.0).abs() <= 1e-9);
        for (i, source) in [a, b].iter().enumerate() {
            let rel = CompatibilityRelation::marginal(joint.frame().clone(), i).unwrap();
            let back = project(&joint, &rel, Direction::Up).unwrap();
            for (set, m) in source.focal() {
                prop_assert!((back.mass_of(set) - m).abs() <= 1e-9);
            }
            prop_assert_eq!(back.focal_count(), source.focal_count());
        }
    }

    #[test]
    fn projection_preserves_mass((n, focal) in distribution(4), pairs in prop::collection::vec((0usize..4, 0usize..3), 0..12)) {
        let lower = build("lower", n, &focal);
        let upper = Arc::new(Frame::new("upper", ["u0", "u1", "u2"], 0).unwrap());
        // every element on both sides needs a partner
        let mut all: Vec<(usize, usize)> = pairs.into_iter().filter(|&(l, _)| l < n).collect();
        all.extend((0..n).map(|l| (l, l % 3)));
        all.extend((0..3).map(|u| (u % n, u)));
        let rel = CompatibilityRelation::from_indices(lower.frame().clone(), upper, all.into_iter().collect()).unwrap();
        let up = project(&lower, &rel, Direction::Up).unwrap();
        prop_assert!((up.total() - 1.0).abs() <= 1e-9);
        let down = project(&up, &rel, Direction::Down).unwrap();
        prop_assert!((down.total() - 1.0).abs() <= 1e-9);
    }
}
