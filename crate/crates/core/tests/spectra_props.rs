//! Property tests for canonical and greedy spectra.

mod common;

use common::*;
use moran_core::spectra::{canonical_levels, delta_lambda, greedy_spectrum, orthogonality_check, parseval_sum, GreedyParams};
use moran_core::{EvalConfig, Freq, MoranError, MoranSpec, StageSource};
use proptest::prelude::*;

fn cfg() -> EvalConfig {
    EvalConfig::with_tol(1e-10)
}

fn hadamard_tower() -> impl Strategy<Value = MoranSpec> {
    prop_oneof![periodic_hadamard_spec(), Just(MoranSpec::jp4()), Just(MoranSpec::example45()), Just(MoranSpec::example92())]
}

fn product_size(spec: &MoranSpec, n: usize) -> usize {
    (1..=n).map(|j| spec.stage(j).unwrap().size()).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Canonical levels of a Hadamard tower are orthogonal, so Σ|μ̂(x + λ)|² ≤ 1.
    #[test]
    fn test_bessel_inequality(spec in hadamard_tower(), level in 1usize..=4, (p, q) in small_ratio()) {
        let tree = canonical_levels(&spec, level).unwrap();
        let s = parseval_sum(&spec, &tree, level, &Freq::ratio(p, q), &cfg()).unwrap();
        prop_assert!(s.value <= 1.0 + s.radius, "{} > 1 + {}", s.value, s.radius);
        let o = orthogonality_check(&spec, &tree, level, &cfg()).unwrap();
        prop_assert!(o.max_abs <= o.radius);
    }

    /// Parseval sums grow along the nested levels.
    #[test]
    fn test_parseval_monotone(spec in hadamard_tower(), (p, q) in small_ratio()) {
        let tree = canonical_levels(&spec, 4).unwrap();
        let x = Freq::ratio(p, q);
        let mut prev = parseval_sum(&spec, &tree, 1, &x, &cfg()).unwrap();
        for k in 2..=4 {
            let s = parseval_sum(&spec, &tree, k, &x, &cfg()).unwrap();
            prop_assert!(s.value + s.radius >= prev.value - prev.radius);
            prev = s;
        }
    }

    #[test]
    fn test_canonical_tree_invariants(spec in hadamard_tower(), depth in 1usize..=5) {
        let tree = canonical_levels(&spec, depth).unwrap();
        prop_assert!(tree.validate().is_ok());
        for k in 1..=depth {
            prop_assert_eq!(tree.level(k).unwrap().len(), product_size(&spec, k));
        }
    }

    /// Every greedy level carries its certificate |ν̂_{>n_k}(λ/P_{n_k})| ≥ ε₀.
    #[test]
    fn test_greedy_certificate(spec in hadamard_tower(), depth in 1usize..=3) {
        let params = GreedyParams::default();
        match greedy_spectrum(&spec, depth, &params, &cfg()) {
            Ok(tree) => {
                prop_assert!(tree.validate().is_ok());
                let d = delta_lambda(&spec, &tree, &cfg()).unwrap();
                for v in &d.per_level {
                    prop_assert!(v.value + v.radius >= params.eps0 * params.eps0 - 1e-9);
                }
                for (k, &n) in tree.boundaries.iter().enumerate() {
                    prop_assert_eq!(tree.levels[k].len(), product_size(&spec, n));
                }
            }
            Err(e) => prop_assert!(matches!(e, MoranError::NoShiftFound { .. }), "{e}"),
        }
    }

    /// With every shift forced to zero the greedy levels are canonical levels at the block ends.
    #[test]
    fn test_forced_zero_greedy_is_canonical(spec in hadamard_tower(), depth in 1usize..=3) {
        let params = GreedyParams { force_zero_shifts: true, ..GreedyParams::default() };
        let tree = greedy_spectrum(&spec, depth, &params, &cfg()).unwrap();
        let last = *tree.boundaries.last().unwrap();
        let canon = canonical_levels(&spec, last).unwrap();
        for (k, &n) in tree.boundaries.iter().enumerate() {
            prop_assert_eq!(&tree.levels[k], &canon.levels[n - 1]);
            prop_assert!(tree.shifts[k].iter().all(|s| s.k == 0));
        }
    }
}

// ---------------------------------------------------------------------------
// Frozen examples
// ---------------------------------------------------------------------------

#[test]
fn jp4_parseval_approaches_one() {
    let tree = canonical_levels(&MoranSpec::jp4(), 6).unwrap();
    let s = parseval_sum(&MoranSpec::jp4(), &tree, 6, &Freq::ratio(1, 3), &cfg()).unwrap();
    assert!(s.value > 0.99 && s.value <= 1.0 + s.radius);
}

#[test]
fn example92_tail_vanishes_on_third_plus_integers() {
    // 1 + 3k = 2^a·odd, so the factor cos(π(1 + 3k)/2^{a+1}) is zero
    let spec = MoranSpec::example92();
    let tail = moran_core::TailSpec::new(&spec, 1);
    for k in -40..=40 {
        let v = moran_core::moran_ft(&tail, &Freq::ratio(1 + 3 * k, 3), &cfg()).unwrap();
        assert!(v.value.norm() <= v.radius, "k = {k}");
    }
}

#[test]
fn example92_greedy_has_no_shift() {
    let r = greedy_spectrum(&MoranSpec::example92(), 2, &GreedyParams::default(), &cfg());
    assert!(matches!(r, Err(MoranError::NoShiftFound { .. })), "{r:?}");
}
