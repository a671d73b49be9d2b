//! Property tests for the certified Fourier transform of Moran towers.

mod common;

use common::*;
use moran_core::measure::mask_chain_eval;
use moran_core::{
    certified_depth, mask_ft, moran_ft, partial_measure, truncated_product, EvalConfig, FourierTransform, Freq, MoranSpec, StageSource,
    TailSpec,
};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use proptest::prelude::*;

fn cfg() -> EvalConfig {
    EvalConfig::with_tol(1e-10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// |μ̂(ξ)| never exceeds 1 beyond the certified radius.
    #[test]
    fn test_ft_bounded_by_one(spec in any_spec(), (p, q) in small_ratio()) {
        let v = moran_ft(&spec, &Freq::ratio(p, q), &cfg()).unwrap();
        prop_assert!(v.value.norm() <= 1.0 + v.radius + 1e-15);
    }

    #[test]
    fn test_ft_at_zero_is_one(spec in any_spec()) {
        let v = moran_ft(&spec, &Freq::integer(0), &cfg()).unwrap();
        prop_assert!((v.value - 1.0).norm() <= v.radius + 1e-15);
    }

    /// μ̂(−ξ) is the conjugate of μ̂(ξ).
    #[test]
    fn test_conjugate_symmetry(spec in any_spec(), (p, q) in small_ratio()) {
        let a = moran_ft(&spec, &Freq::ratio(p, q), &cfg()).unwrap();
        let b = moran_ft(&spec, &Freq::ratio(-p, q), &cfg()).unwrap();
        prop_assert!((a.value - b.value.conj()).norm() <= a.radius + b.radius);
    }

    /// Exact phase reduction makes the mask bit-for-bit N-periodic, however large the shift.
    #[test]
    fn test_mask_periodicity_bit_exact(stage in standard_stage(), (p, q) in small_ratio(), k in -1_000_000_000_000i64..1_000_000_000_000) {
        let xi = Freq::ratio(p, q);
        let shifted = xi.add_int(&(BigInt::from(k) * BigInt::from(stage.modulus)));
        let a = mask_ft(stage.modulus, &stage.digits, &xi);
        let b = mask_ft(stage.modulus, &stage.digits, &shifted);
        prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
        prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    /// Deeper truncations stay inside the certified disc.
    #[test]
    fn test_tail_soundness(spec in any_spec(), (p, q) in small_ratio(), extra in 0usize..12) {
        let xi = Freq::ratio(p, q);
        let v = moran_ft(&spec, &xi, &cfg()).unwrap();
        let k = certified_depth(&spec, &xi, &cfg()).unwrap();
        let d = spec.depth().map_or(k + extra, |d| d.min(k + extra));
        let t = truncated_product(&spec, &xi, d).unwrap();
        prop_assert!((t - v.value).norm() <= v.radius, "depth {} vs {}: {}", d, k, (t - v.value).norm());
    }

    /// |μ̂(ξ) − μ̂(η)| ≤ 2π·sup(supp)·|ξ − η|.
    #[test]
    fn test_lipschitz(spec in any_spec(), (p, q) in small_ratio(), dp in -50i64..50) {
        let xi = Freq::ratio(p, q);
        let eta = Freq::ratio(p * 997 + dp, q * 997);
        let a = moran_ft(&spec, &xi, &cfg()).unwrap();
        let b = moran_ft(&spec, &eta, &cfg()).unwrap();
        let gap = (xi.to_f64() - eta.to_f64()).abs();
        let bound = std::f64::consts::TAU * spec.support_bound() * gap * (1.0 + 1e-9);
        prop_assert!((a.value - b.value).norm() <= bound + a.radius + b.radius);
    }

    /// The n-stage partial measure has exactly the n-factor mask product as transform.
    #[test]
    fn test_partial_measure_matches_product(spec in any_spec(), n in 1usize..=5, (p, q) in small_ratio()) {
        let n = spec.depth().map_or(n, |d| d.min(n));
        let m = partial_measure(&spec, n, 1 << 14).unwrap();
        prop_assert!((m.total_mass() - 1.0).abs() < 1e-12);
        let xi = Freq::ratio(p, q);
        let a = m.fourier(&xi, &cfg()).unwrap().value;
        let b = truncated_product(&spec, &xi, n).unwrap();
        prop_assert!((a - b).norm() <= 1e-12);
    }

    /// Against the naive f64 product for finite towers.
    #[test]
    fn test_finite_ft_matches_oracle(spec in finite_spec(), (p, q) in small_ratio()) {
        let xi = Freq::ratio(p, q);
        let v = moran_ft(&spec, &xi, &cfg()).unwrap();
        let stages = stage_pairs(&spec, spec.depth().unwrap());
        let o = naive_product(&stages, p as f64 / q as f64);
        prop_assert!((v.value - o).norm() <= v.radius + 1e-11);
        let direct = naive_partial_ft(&stages, p as f64 / q as f64);
        prop_assert!((v.value - direct).norm() <= v.radius + 1e-11);
    }

    /// Against a 48-stage naive product for infinite towers.
    #[test]
    fn test_infinite_ft_matches_oracle(spec in prop_oneof![periodic_spec(), Just(MoranSpec::jp4()), Just(MoranSpec::example92())], (p, q) in small_ratio()) {
        let v = moran_ft(&spec, &Freq::ratio(p, q), &cfg()).unwrap();
        let o = naive_product(&stage_pairs(&spec, 48), p as f64 / q as f64);
        prop_assert!((v.value - o).norm() <= v.radius + 1e-11);
    }

    /// μ̂(ξ) = Π_{n≤j} masks · ν̂_{>j}(ξ / P_j).
    #[test]
    fn test_tail_factorization(spec in prop_oneof![periodic_spec(), Just(MoranSpec::jp4()), Just(MoranSpec::example45())], j in 0usize..4, (p, q) in small_ratio()) {
        let xi = Freq::ratio(p, q);
        let tail = TailSpec::new(&spec, j);
        for n in 1..6 {
            prop_assert_eq!(tail.stage(n).unwrap().into_owned(), spec.stage(n + j).unwrap().into_owned());
        }
        let pj: BigUint = (1..=j).map(|n| BigUint::from(spec.stage(n).unwrap().modulus)).product();
        let head = truncated_product(&spec, &xi, j).unwrap();
        let t = moran_ft(&tail, &xi.div_big(&pj), &cfg()).unwrap();
        let whole = moran_ft(&spec, &xi, &cfg()).unwrap();
        prop_assert!((head * t.value - whole.value).norm() <= whole.radius + t.radius + 1e-14);
    }

    /// The mask chain reproduces the tail transform at 1/2 + k.
    #[test]
    fn test_mask_chain_identity(spec in prop_oneof![periodic_spec(), Just(MoranSpec::jp4()), Just(MoranSpec::example45())], skip in 0usize..3, k in 0u64..4096) {
        let tail = TailSpec::new(&spec, skip);
        let k = BigUint::from(k);
        let mut r = 1;
        let chain = loop {
            match mask_chain_eval(&tail, &k, r) {
                Ok(c) => break c,
                Err(_) => r += 1,
            }
        };
        let a = chain.value(&tail, &cfg()).unwrap();
        let xi = Freq::exact(BigRational::new(BigInt::from(k) * 2 + 1, BigInt::from(2)));
        let b = moran_ft(&tail, &xi, &cfg()).unwrap();
        prop_assert!((a.value - b.value).norm() <= a.radius + b.radius);
    }

    /// f64 inputs are carried exactly, with a half-ulp slack.
    #[test]
    fn test_from_f64_exact(x in -1e6f64..1e6f64) {
        let f = Freq::from_f64(x);
        prop_assert_eq!(f.to_f64(), x);
        prop_assert!(f.slack() <= x.abs() * f64::EPSILON);
    }

    /// An f64 frequency certifies a disc containing the value at the exact neighbour.
    #[test]
    fn test_f64_slack_certified(spec in any_spec(), x in -20f64..20.0) {
        let v = moran_ft(&spec, &Freq::from_f64(x), &EvalConfig::with_tol(1e-8)).unwrap();
        let exact = moran_ft(&spec, &Freq::exact(BigRational::from_float(x).unwrap()), &cfg()).unwrap();
        prop_assert!((v.value - exact.value).norm() <= v.radius + exact.radius);
    }
}

// ---------------------------------------------------------------------------
// Frozen examples
// ---------------------------------------------------------------------------

#[test]
fn jp4_at_integers() {
    // μ̂(1) = mask(4,{0,2},1)·… and mask(4,{0,2},1) = (1 + e^{-πi})/2 = 0
    let v = moran_ft(&MoranSpec::jp4(), &Freq::integer(1), &cfg()).unwrap();
    assert!(v.value.norm() <= v.radius);
    let v = moran_ft(&MoranSpec::jp4(), &Freq::integer(0), &cfg()).unwrap();
    assert_eq!(v.value.re, 1.0);
    assert_eq!(v.radius, 0.0);
}

#[test]
fn example92_transform_matches_cosine_product() {
    // stage 1 gives e^{-πiξ/2}cos(πξ/2); stage n ≥ 2 gives e^{-3πiξ/2^n}cos(3πξ/2^n)
    let xi = 0.37f64;
    let mut expect = (std::f64::consts::PI * xi / 2.0).cos();
    for n in 2..60 {
        expect *= (3.0 * std::f64::consts::PI * xi / 2f64.powi(n)).cos();
    }
    let v = moran_ft(&MoranSpec::example92(), &Freq::ratio(37, 100), &cfg()).unwrap();
    assert!((v.value.norm() - expect.abs()).abs() <= v.radius + 1e-13, "{} vs {} r {}", v.value.norm(), expect.abs(), v.radius);
}

#[test]
fn partial_measure_caps_atoms() {
    assert!(partial_measure(&MoranSpec::jp4(), 30, 1 << 12).is_err());
}
