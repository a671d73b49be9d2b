//! Naive f64 oracles and proptest strategies shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::TAU;

use moran_core::{MoranSpec, Stage};
use num_complex::Complex64;
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// (1/#B) Σ_b e^{-2πi b ξ / N}, straight from the definition.
pub fn naive_mask(modulus: u64, digits: &[u64], xi: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &b in digits {
        let t = TAU * b as f64 * xi / modulus as f64;
        acc += Complex64::new(t.cos(), -t.sin());
    }
    acc / digits.len() as f64
}

/// Product of naive masks over the given stages.
pub fn naive_product(stages: &[(u64, Vec<u64>)], xi: f64) -> Complex64 {
    let mut p = 1.0;
    let mut acc = Complex64::new(1.0, 0.0);
    for (n, b) in stages {
        acc *= naive_mask(*n, b, xi / p);
        p *= *n as f64;
    }
    acc
}

/// Fourier transform of the n-stage partial measure by direct summation over all digit words.
pub fn naive_partial_ft(stages: &[(u64, Vec<u64>)], xi: f64) -> Complex64 {
    let mut points = vec![(0.0f64, 1.0f64)];
    let mut scale = 1.0;
    for (n, b) in stages {
        scale /= *n as f64;
        let w = 1.0 / b.len() as f64;
        points = points.iter().flat_map(|&(x, m)| b.iter().map(move |&d| (x + d as f64 * scale, m * w))).collect();
    }
    points.iter().map(|&(x, w)| Complex64::from_polar(w, -TAU * x * xi)).sum()
}

/// max |H*H − I| for H_{b,l} = e^{-2πi b l / N} / √#B.
pub fn naive_gram_defect(modulus: u64, digits: &[u64], spectrum: &[i64]) -> f64 {
    let m = digits.len();
    let h = |b: u64, l: i64| {
        let r = ((b as i128 * l as i128).rem_euclid(modulus as i128)) as f64 / modulus as f64;
        Complex64::from_polar(1.0 / (m as f64).sqrt(), -TAU * r)
    };
    let mut worst: f64 = 0.0;
    for (i, &li) in spectrum.iter().enumerate() {
        for (j, &lj) in spectrum.iter().enumerate() {
            let g: Complex64 = digits.iter().map(|&b| h(b, li).conj() * h(b, lj)).sum();
            let id = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - id).norm());
        }
    }
    worst
}

pub fn naive_sine_sum(digits: &[u64], x: f64) -> f64 {
    digits.iter().map(|&b| (TAU * b as f64 * x).sin()).sum()
}

/// Dense-grid estimate of max |Σ sin 2πbx| on [0, hi].
pub fn naive_sine_max(digits: &[u64], hi: f64, points: usize) -> f64 {
    (0..=points).map(|i| naive_sine_sum(digits, hi * i as f64 / points as f64).abs()).fold(0.0, f64::max)
}

pub fn stage_pairs(spec: &MoranSpec, depth: usize) -> Vec<(u64, Vec<u64>)> {
    use moran_core::StageSource;
    (1..=depth)
        .map(|n| {
            let s = spec.stage(n).unwrap();
            (s.modulus, s.digits.clone())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

/// Standard stage: N ∈ [2, 12], 0 ∈ B ⊂ [0, N), no spectrum.
pub fn standard_stage() -> impl Strategy<Value = Stage> {
    (2u64..=12)
        .prop_flat_map(|n| (Just(n), proptest::collection::btree_set(1..n, 0..(n as usize).min(4))))
        .prop_map(|(n, rest)| {
            let mut digits = vec![0];
            digits.extend(rest);
            Stage::new(n, digits, None).unwrap()
        })
}

/// Hadamard stage N = a·m·c, B = a·{0..m}, L = c·{0..m}.
pub fn hadamard_stage() -> impl Strategy<Value = Stage> {
    (1u64..=4, 1u64..=3, 1u64..=3)
        .prop_filter("N ≥ 2", |(m, a, c)| m * a * c >= 2)
        .prop_map(|(m, a, c)| {
            let digits = (0..m).map(|j| a * j).collect();
            let spectrum = (0..m).map(|j| (c * j) as i64).collect();
            Stage::new(a * m * c, digits, Some(spectrum)).unwrap()
        })
}

pub fn finite_spec() -> impl Strategy<Value = MoranSpec> {
    proptest::collection::vec(standard_stage(), 1..=4).prop_map(|s| MoranSpec::finite(s).unwrap())
}

pub fn periodic_spec() -> impl Strategy<Value = MoranSpec> {
    proptest::collection::vec(standard_stage(), 1..=3).prop_map(|s| MoranSpec::periodic(s).unwrap())
}

pub fn periodic_hadamard_spec() -> impl Strategy<Value = MoranSpec> {
    proptest::collection::vec(hadamard_stage(), 1..=3).prop_map(|s| MoranSpec::periodic(s).unwrap())
}

pub fn any_spec() -> impl Strategy<Value = MoranSpec> {
    prop_oneof![
        finite_spec(),
        periodic_spec(),
        Just(MoranSpec::jp4()),
        Just(MoranSpec::example45()),
        Just(MoranSpec::example92()),
    ]
}

/// Rational frequency p/q with |p/q| ≤ 40.
pub fn small_ratio() -> impl Strategy<Value = (i64, i64)> {
    (1i64..=64).prop_flat_map(|q| (-40 * q..=40 * q, Just(q)))
}
