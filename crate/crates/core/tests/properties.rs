use causal_bounds::bounds::{instrumental_lower, instrumental_upper, natural_bounds, tight_bounds_lp};
use causal_bounds::classical::{ace, forward, intervene, CanonicalModel};
use causal_bounds::trial_data::{estimate, naive_effect, validate, ObservedDistribution, TrialRecord};
use proptest::prelude::*;

/// Non-negative weights with a fair share of exact zeros, normalized to sum 1.
fn simplex<const N: usize>() -> impl Strategy<Value = [f64; N]> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..1.0], N)
        .prop_filter("needs positive mass", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| {
            let s: f64 = w.iter().sum();
            std::array::from_fn(|i| w[i] / s)
        })
}

fn distribution() -> impl Strategy<Value = ObservedDistribution> {
    (simplex::<4>(), simplex::<4>(), 0.05f64..0.95).prop_map(|(s0, s1, pz)| {
        let mut p = [[[0.0; 2]; 2]; 2];
        for (z, s) in [s0, s1].iter().enumerate() {
            for i in 0..4 {
                p[i / 2][i % 2][z] = s[i];
            }
        }
        ObservedDistribution::new(p, pz).unwrap()
    })
}

fn model() -> impl Strategy<Value = CanonicalModel> {
    (simplex::<16>(), 0.05f64..0.95).prop_map(|(w, pz)| {
        let q = std::array::from_fn(|b| std::array::from_fn(|r| w[4 * b + r]));
        CanonicalModel::new(q, pz).unwrap()
    })
}

fn mix(a: &CanonicalModel, b: &CanonicalModel, t: f64) -> CanonicalModel {
    let q = std::array::from_fn(|i| std::array::from_fn(|j| t * a.q()[i][j] + (1.0 - t) * b.q()[i][j]));
    CanonicalModel::new(q, 0.5).unwrap()
}

proptest! {
    #[test]
    fn estimate_recovers_exact_counts(counts in prop::array::uniform8(0u32..40), pz in 0.1f64..0.9) {
        let arm0: u32 = counts[..4].iter().sum();
        let arm1: u32 = counts[4..].iter().sum();
        prop_assume!(arm0 > 0 && arm1 > 0);
        let mut records = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            let (z, y, x) = ((i / 4) as u8, ((i % 4) / 2) as u8, (i % 2) as u8);
            records.extend((0..c).map(|_| TrialRecord::new(z, x, y).unwrap()));
        }
        let d = estimate(&records).unwrap();
        for (i, &c) in counts.iter().enumerate() {
            let (z, y, x) = (i / 4, (i % 4) / 2, i % 2);
            let n = if z == 0 { arm0 } else { arm1 };
            prop_assert!((d.prob(y, x, z) - c as f64 / n as f64).abs() < 1e-15);
        }
        prop_assert!(validate(&d, 1e-12).is_empty());
        // Expected counts of `d` at the arm sizes reproduce `d` itself.
        let again = ObservedDistribution::new(*d.cells(), pz).unwrap();
        prop_assert!(again.max_abs_diff(&d) < 1e-15);
    }

    #[test]
    fn naive_effect_is_antisymmetric_in_z(d in distribution()) {
        prop_assert!((naive_effect(&d.swap_z()) + naive_effect(&d)).abs() < 1e-12);
    }

    #[test]
    fn forward_is_affine(a in model(), b in model(), t in 0.0f64..1.0) {
        let m = mix(&a, &b, t);
        let (fa, fb, fm) = (forward(&a), forward(&b), forward(&m));
        for y in 0..2 {
            for x in 0..2 {
                for z in 0..2 {
                    let lin = t * fa.prob(y, x, z) + (1.0 - t) * fb.prob(y, x, z);
                    prop_assert!((fm.prob(y, x, z) - lin).abs() < 1e-12);
                }
            }
        }
        prop_assert!((ace(&m) - (t * ace(&a) + (1.0 - t) * ace(&b))).abs() < 1e-12);
    }

    #[test]
    fn pz_does_not_enter_forward_or_ace(m in model(), pz in 0.0f64..1.0) {
        let moved = m.with_pz(pz).unwrap();
        prop_assert_eq!(*forward(&moved).cells(), *forward(&m).cells());
        prop_assert_eq!(ace(&moved), ace(&m));
        prop_assert!((intervene(&m, 1) - intervene(&m, 0) - ace(&m)).abs() < 1e-15);
    }

    #[test]
    fn bounds_bracket_classical_ace(m in model()) {
        let d = forward(&m);
        let a = ace(&m);
        for (lo, hi) in instrumental_lower(&d).iter().zip(instrumental_upper(&d)) {
            prop_assert!(*lo <= a + 1e-9 && hi >= a - 1e-9);
        }
        let (nl, nu) = natural_bounds(&d);
        prop_assert!(nl <= a + 1e-9 && nu >= a - 1e-9);
    }

    #[test]
    fn lp_is_feasible_and_matches_closed_form(m in model()) {
        let d = forward(&m);
        let lp = tight_bounds_lp(&d);
        prop_assert!(lp.feasible);
        let max_lower = instrumental_lower(&d).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_upper = instrumental_upper(&d).iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((lp.lower.unwrap() - max_lower).abs() < 1e-7);
        prop_assert!((lp.upper.unwrap() - min_upper).abs() < 1e-7);
    }

    #[test]
    fn instrumental_bounds_imply_natural_bounds(d in distribution()) {
        let (nl, nu) = natural_bounds(&d);
        let max_lower = instrumental_lower(&d).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_upper = instrumental_upper(&d).iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(nl <= max_lower + 1e-9);
        prop_assert!(nu >= min_upper - 1e-9);
    }

    #[test]
    fn lower_list_symmetries(d in distribution()) {
        let l = instrumental_lower(&d);
        let lz = instrumental_lower(&d.swap_z());
        // z0 <-> z1 pairs 1-2, 3-4, 5-6, 7-8.
        for (i, j) in [(0, 1), (2, 3), (4, 5), (6, 7)] {
            prop_assert!((lz[i] - l[j]).abs() < 1e-12 && (lz[j] - l[i]).abs() < 1e-12);
        }
        // Joint x/y relabeling pairs 1-2, 3-8, 4-7 and fixes 5 and 6.
        let lxy = instrumental_lower(&d.swap_xy());
        for (i, j) in [(0, 1), (2, 7), (3, 6), (4, 4), (5, 5)] {
            prop_assert!((lxy[i] - l[j]).abs() < 1e-12 && (lxy[j] - l[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn upper_list_is_reflected_lower_list(d in distribution()) {
        let u = instrumental_upper(&d);
        let l = instrumental_lower(&d.swap_y());
        for i in 0..8 {
            prop_assert!((u[i] + l[i]).abs() < 1e-15);
        }
    }
}
