//! Property tests for certified sine maxima, class bounds, Turán-Nazarov and the search.

mod common;

use common::*;
use moran_core::sumsine::{
    bourgain_search, bourgain_to_spec, certified_sine_max, class_check, half_integer_pipeline, turan_nazarov_check, uniform_mask_bound, SineClass,
};
use moran_core::{mask_ft, Freq};
use num_complex::Complex64;
use proptest::prelude::*;

fn sine_set() -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::btree_set(1u64..=60, 1..=12).prop_map(|s| s.into_iter().collect())
}

fn lacunary_set() -> impl Strategy<Value = Vec<u64>> {
    (1u64..=5, proptest::collection::vec(0u64..=3, 1..=7)).prop_map(|(start, gaps)| {
        let mut v = vec![start];
        for g in gaps {
            let last = *v.last().unwrap();
            v.push(3 * last + g);
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Halving the grid keeps the brackets overlapping and the naive grid below both upper bounds.
    #[test]
    fn test_bracket_nesting(set in sine_set(), delta0 in 0.0f64..0.25) {
        let h = 1.0 / (8.0 * 60.0);
        let a = certified_sine_max(&set, None, delta0, Some(h)).unwrap();
        let b = certified_sine_max(&set, None, delta0, Some(h / 2.0)).unwrap();
        prop_assert!(a.best_value <= a.upper_bound && b.best_value <= b.upper_bound);
        prop_assert!(b.best_value <= a.upper_bound + 1e-12 && a.best_value <= b.upper_bound + 1e-12);
        prop_assert!(b.upper_bound - b.best_value <= a.upper_bound - a.best_value + 1e-9);
        let naive = naive_sine_max(&set, 0.5 - delta0, 20_000);
        prop_assert!(naive <= a.upper_bound.min(b.upper_bound) + 1e-9);
        prop_assert!((naive_sine_sum(&set, a.best_x).abs() - a.best_value).abs() <= 1e-9);
    }

    #[test]
    fn test_lacunary_class_bound(set in lacunary_set()) {
        let r = class_check(&set, SineClass::Lacunary { a: 3.0 }).unwrap();
        prop_assert!(r.member);
        let m = certified_sine_max(&set, None, r.max_delta0, None).unwrap();
        prop_assert!(r.lower_bound <= m.upper_bound, "{} > {}", r.lower_bound, m.upper_bound);
    }

    #[test]
    fn test_dense_class_bound(len in 2u64..=40, holes in proptest::collection::btree_set(1u64..40, 0..6)) {
        let set: Vec<u64> = (1..=len).filter(|b| !holes.contains(b)).collect();
        prop_assume!(!set.is_empty());
        let c = set.len() as f64 / *set.last().unwrap() as f64;
        let r = class_check(&set, SineClass::Dense { c: c.min(1.0) }).unwrap();
        prop_assert!(r.member);
        let m = certified_sine_max(&set, None, r.max_delta0, None).unwrap();
        prop_assert!(r.lower_bound <= m.upper_bound, "{} > {}", r.lower_bound, m.upper_bound);
    }

    #[test]
    fn test_bounded_class_bound(set in proptest::collection::btree_set(1u64..=200, 1..=4)) {
        let set: Vec<u64> = set.into_iter().collect();
        let r = class_check(&set, SineClass::Bounded { m: 4 }).unwrap();
        prop_assert!(r.member);
        let m = certified_sine_max(&set, None, r.max_delta0, None).unwrap();
        prop_assert!(r.lower_bound <= m.upper_bound);
    }

    #[test]
    fn test_turan_nazarov(coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=5),
                          exps in proptest::collection::btree_set(-20i64..=20, 5), s in 0.1f64..=1.0) {
        let n = coeffs.len();
        let c: Vec<Complex64> = coeffs.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let e: Vec<i64> = exps.into_iter().take(n).collect();
        let r = turan_nazarov_check(&c, &e, s).unwrap();
        prop_assert!(r.holds, "{r:?}");
        prop_assert!(r.sup_lower <= r.sup_upper);
        let naive = (0..=4000)
            .map(|i| {
                let x = s * i as f64 / 4000.0;
                c.iter().zip(&e).map(|(c, &m)| c * Complex64::from_polar(1.0, std::f64::consts::TAU * m as f64 * x)).sum::<Complex64>().norm()
            })
            .fold(0.0, f64::max);
        prop_assert!(naive <= r.sup_upper + 1e-9);
    }

    /// The half-integer pipeline's guarantee is a true lower bound on the mask.
    #[test]
    fn test_pipeline_guarantee(set in sine_set(), padding in 3usize..=10, x in 0.0f64..0.5) {
        let stage = bourgain_to_spec(&set, padding).unwrap();
        let r = half_integer_pipeline(&stage, 0.3, x).unwrap();
        prop_assert!(r.mask_abs >= r.guaranteed - 1e-12, "{r:?}");
        let o = naive_mask(stage.modulus, &stage.digits, 0.5 + r.k.to_string().parse::<f64>().unwrap()).norm();
        prop_assert!((o - r.mask_abs).abs() <= 1e-9);
    }

    /// The uniform bound dominates every half-integer mask value.
    #[test]
    fn test_uniform_mask_bound(set in proptest::collection::btree_set(1u64..=20, 1..=5), padding in 2usize..=4, k in 0i64..4096) {
        let set: Vec<u64> = set.into_iter().collect();
        let stage = bourgain_to_spec(&set, padding).unwrap();
        let sup = certified_sine_max(&set, None, 0.0, None).unwrap().upper_bound;
        let bound = uniform_mask_bound(&set, stage.modulus, sup);
        let v = mask_ft(stage.modulus, &stage.digits, &Freq::ratio(2 * k + 1, 2)).norm();
        prop_assert!(v <= bound + 1e-12, "{} > {}", v, bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn test_search_monotone_and_reproducible(seed in any::<u64>(), n in 4usize..=8) {
        let a = bourgain_search(n, 4 * n as u64 + 8, 200, seed).unwrap();
        let b = bourgain_search(n, 4 * n as u64 + 8, 200, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.best_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(a.objective <= a.initial_objective);
        prop_assert_eq!(a.set.len(), n);
        prop_assert!(a.objective <= a.certified.upper_bound + 1e-9);
    }
}

// ---------------------------------------------------------------------------
// Frozen examples
// ---------------------------------------------------------------------------

#[test]
fn sine_one_two_maximum() {
    // sin 2πx + sin 4πx peaks at cos θ = (√33 − 1)/8 with θ = 2πx
    let c = (33f64.sqrt() - 1.0) / 8.0;
    let s = (1.0 - c * c).sqrt();
    let expect = s + 2.0 * s * c;
    let r = certified_sine_max(&[1, 2], None, 0.0, None).unwrap();
    assert!((r.best_value - expect).abs() < 1e-9);
    assert!(r.upper_bound >= expect);
}

#[test]
fn bourgain_stage_shape() {
    let st = bourgain_to_spec(&[1, 3], 2).unwrap();
    assert_eq!(st.modulus, 13);
    assert_eq!(st.digits, vec![0, 1, 3, 10, 12]);
    assert_eq!(st.spectrum.as_ref().unwrap().len(), 5);
}
