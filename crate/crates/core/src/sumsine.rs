//! Certified sine-sum maxima, class bounds, Turán-Nazarov checks and Bourgain-style search.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::{PI, TAU};

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::symmetric_split;
use crate::error::{MoranError, Result};
use crate::freq::Freq;
use crate::measure::mask_ft;
use crate::stage::Stage;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Certified maximum of |Σ m_b sin 2πbx| on [0, 1/2 − δ₀].
#[derive(Clone, Debug, PartialEq)]
pub struct SineMaxResult {
    pub digits: Vec<u64>,
    pub weights: Vec<u8>,
    pub delta0: f64,
    pub grid_h: f64,
    pub best_x: f64,
    pub best_value: f64,
    pub upper_bound: f64,
    pub lipschitz: f64,
    pub ratio_linear: f64,
    pub ratio_bourgain: f64,
}

fn sine_sum(digits: &[u64], weights: &[u8], x: f64) -> f64 {
    let mut acc = 0.0;
    for (&b, &m) in digits.iter().zip(weights) {
        let t = b as f64 * x;
        acc += m as f64 * libm::sin(TAU * (t - libm::round(t)));
    }
    acc
}

fn check_weights(digits: &[u64], weights: Option<&[u8]>) -> Result<Vec<u8>> {
    match weights {
        None => Ok(vec![1; digits.len()]),
        Some(w) if w.len() != digits.len() => Err(MoranError::InvalidParams(format!("{} weights for {} digits", w.len(), digits.len()))),
        Some(w) if w.iter().any(|&m| m != 1 && m != 2) => Err(MoranError::InvalidParams("weights must be 1 or 2".into())),
        Some(w) => Ok(w.to_vec()),
    }
}

/// Default grid spacing min(1/(8·max B), 10⁻³).
pub fn default_grid_h(digits: &[u64]) -> f64 {
    let m = digits.iter().copied().max().unwrap_or(0);
    if m == 0 {
        1e-3
    } else {
        (1.0 / (8.0 * m as f64)).min(1e-3)
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

pub fn certified_sine_max(digits: &[u64], weights: Option<&[u8]>, delta0: f64, grid_h: Option<f64>) -> Result<SineMaxResult> {
    if digits.is_empty() {
        return Err(MoranError::EmptySet);
    }
    let weights = check_weights(digits, weights)?;
    if !(0.0..=0.5).contains(&delta0) {
        return Err(MoranError::InvalidParams("delta0 must lie in [0, 1/2]".into()));
    }
    let h = grid_h.unwrap_or_else(|| default_grid_h(digits));
    if !(h > 0.0) {
        return Err(MoranError::InvalidParams("grid_h must be positive".into()));
    }
    let hi = 0.5 - delta0;
    let lipschitz = TAU * digits.iter().zip(&weights).map(|(&b, &m)| b as f64 * m as f64).sum::<f64>();
    let steps = libm::ceil(hi / h).max(1.0) as usize;
    let spacing = hi / steps as f64;
    let f = |x: f64| libm::fabs(sine_sum(digits, &weights, x));
    let (mut best_x, mut best_value) = (0.0, f(0.0));
    for i in 1..=steps {
        let x = i as f64 * spacing;
        let v = f(x);
        if v > best_value {
            best_value = v;
            best_x = x;
        }
    }
    let grid_best = best_value;
    if spacing > 0.0 {
        let (x, v) = golden_max(f, (best_x - spacing).max(0.0), (best_x + spacing).min(hi));
        if v > best_value {
            best_value = v;
            best_x = x;
        }
    }
    let mass: f64 = weights.iter().map(|&m| m as f64).sum();
    let rounding = mass * 8.0 * f64::EPSILON;
    let upper_bound = grid_best + lipschitz * spacing / 2.0 + rounding;
    let n = digits.len() as f64;
    Ok(SineMaxResult {
        digits: digits.to_vec(),
        weights,
        delta0,
        grid_h: spacing,
        best_x,
        best_value,
        upper_bound: upper_bound.max(best_value),
        lipschitz,
        ratio_linear: best_value / n,
        ratio_bourgain: best_value / libm::pow(n, 2.0 / 3.0),
    })
}

/// (x, |Σ m_b sin 2πbx|) at `points` equally spaced x in [lo, hi].
pub fn sine_profile(digits: &[u64], weights: Option<&[u8]>, lo: f64, hi: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    let w = check_weights(digits, weights)?;
    let n = points.max(2);
    Ok((0..n)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            (x, libm::fabs(sine_sum(digits, &w, x)))
        })
        .collect())
}

/// Set classes with analytic lower bounds on the sine maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SineClass {
    Bounded { m: usize },
    Dense { c: f64 },
    Lacunary { a: f64 },
    DenseTail { c: f64, ell: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassReport {
    pub member: bool,
    /// Valid lower bound on the maximum over [0, 1/2 − δ₀] for every δ₀ ≤ `max_delta0`.
    pub lower_bound: f64,
    pub max_delta0: f64,
    pub epsilon0: Option<f64>,
}

pub fn class_check(digits: &[u64], class: SineClass) -> Result<ClassReport> {
    let mut pos: Vec<u64> = digits.iter().copied().filter(|&b| b > 0).collect();
    pos.sort_unstable();
    pos.dedup();
    if pos.is_empty() {
        return Err(MoranError::EmptySet);
    }
    let p = *pos.last().unwrap_or(&1) as f64;
    let total = {
        let mut all = digits.to_vec();
        all.sort_unstable();
        all.dedup();
        all.len() as f64
    };
    let bad = |m: &str| Err(MoranError::InvalidParams(m.into()));
    match class {
        SineClass::Bounded { m } => {
            if m < 1 {
                return bad("M ≥ 1");
            }
            let k = pos.len();
            let lower_bound = libm::pow(1.0 / 42.0, (2 * m - 1) as f64) * k as f64;
            Ok(ClassReport { member: k <= m, lower_bound, max_delta0: 1.0 / 6.0, epsilon0: None })
        }
        SineClass::Dense { c } => {
            if !(c > 0.0 && c <= 1.0) {
                return bad("c ∈ (0, 1]");
            }
            Ok(ClassReport { member: total / p >= c, lower_bound: c / TAU * total, max_delta0: 0.25, epsilon0: None })
        }
        SineClass::Lacunary { a } => {
            if !(a > 2.0) {
                return bad("A > 2");
            }
            let member = pos.windows(2).all(|w| w[1] as f64 >= a * w[0] as f64);
            let eps0 = libm::cos(PI / a);
            let max_delta0 = libm::asin(eps0) / TAU;
            Ok(ClassReport { member, lower_bound: eps0 * pos.len() as f64, max_delta0, epsilon0: Some(eps0) })
        }
        SineClass::DenseTail { c, ell } => {
            if !(c > 0.0 && c <= 1.0) || !(ell > 0.0) {
                return bad("c ∈ (0, 1] and ℓ > 0");
            }
            let cut = p / libm::pow(2.0, ell);
            let inside = digits.iter().filter(|&&b| b as f64 >= cut).count() as f64;
            let lower_bound = c * libm::sin(PI / libm::pow(2.0, 1.0 + ell)) * total;
            Ok(ClassReport { member: inside / total >= c, lower_bound, max_delta0: 0.25, epsilon0: None })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuranReport {
    /// Σ |c_k|.
    pub lhs: f64,
    /// (14/s)^{n−1} · (certified lower estimate of sup_E |p|).
    pub rhs: f64,
    pub sup_lower: f64,
    pub sup_upper: f64,
    pub holds: bool,
}

/// Σ|c_k| ≤ (14/|E|)^{n−1} sup_{x∈E} |Σ c_k e^{2πi m_k x}| with E = [0, s].
pub fn turan_nazarov_check(coeffs: &[Complex64], exponents: &[i64], s: f64) -> Result<TuranReport> {
    if coeffs.is_empty() {
        return Err(MoranError::EmptySet);
    }
    if coeffs.len() != exponents.len() {
        return Err(MoranError::InvalidParams("coefficient and exponent counts differ".into()));
    }
    let mut e = exponents.to_vec();
    e.sort_unstable();
    if e.windows(2).any(|w| w[0] == w[1]) {
        return Err(MoranError::InvalidParams("exponents must be distinct".into()));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(MoranError::InvalidParams("E = [0, s] needs 0 < s ≤ 1".into()));
    }
    let p = |x: f64| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, &m) in coeffs.iter().zip(exponents) {
            let t = m as f64 * x;
            let (sn, cs) = libm::sincos(TAU * (t - libm::round(t)));
            acc += c * Complex64::new(cs, sn);
        }
        acc.norm()
    };
    let max_m = exponents.iter().map(|m| m.unsigned_abs()).max().unwrap_or(0).max(1) as f64;
    let h = (1.0 / (16.0 * max_m)).min(1e-3);
    let steps = libm::ceil(s / h) as usize;
    let spacing = s / steps as f64;
    let mut best = (0.0, p(0.0));
    for i in 1..=steps {
        let x = i as f64 * spacing;
        let v = p(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let grid_best = best.1;
    let (_, refined) = golden_max(p, (best.0 - spacing).max(0.0), (best.0 + spacing).min(s));
    let sup_lower = grid_best.max(refined);
    let lip = TAU * coeffs.iter().zip(exponents).map(|(c, &m)| c.norm() * m.unsigned_abs() as f64).sum::<f64>();
    let sup_upper = grid_best + lip * spacing / 2.0 + 8.0 * f64::EPSILON * coeffs.len() as f64;
    let lhs: f64 = coeffs.iter().map(|c| c.norm()).sum();
    let factor = libm::pow(14.0 / s, (coeffs.len() - 1) as f64);
    let rhs = factor * sup_lower;
    Ok(TuranReport { lhs, rhs, sup_lower, sup_upper: sup_upper.max(sup_lower), holds: lhs <= rhs * (1.0 + 1e-12) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BourgainSearch {
    pub set: Vec<u64>,
    pub seed: u64,
    pub iterations: usize,
    pub initial_objective: f64,
    /// Grid objective of the best set.
    pub objective: f64,
    /// Best objective after each iteration.
    pub best_history: Vec<f64>,
    /// Certification of the best set over the full period.
    pub certified: SineMaxResult,
}

struct Profile {
    m: usize,
    table: Vec<f64>,
    values: Vec<f64>,
}

impl Profile {
    fn new(range: u64) -> Self {
        let m = (8 * range as usize).next_power_of_two();
        let table = (0..m).map(|j| libm::sin(TAU * j as f64 / m as f64)).collect();
        Self { m, table, values: vec![0.0; m / 2 + 1] }
    }

    fn contribution(&self, b: u64, j: usize) -> f64 {
        self.table[(b as usize * j) & (self.m - 1)]
    }

    fn add(&mut self, b: u64, sign: f64) {
        for j in 0..self.values.len() {
            self.values[j] += sign * self.table[(b as usize * j) & (self.m - 1)];
        }
    }

    fn objective(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(libm::fabs(*v)))
    }

    fn swapped_objective(&self, old: u64, new: u64) -> f64 {
        let mut best: f64 = 0.0;
        for (j, v) in self.values.iter().enumerate() {
            best = best.max(libm::fabs(v - self.contribution(old, j) + self.contribution(new, j)));
        }
        best
    }
}

/// Simulated annealing over n-subsets of {1,…,R} minimizing max_x |Σ sin 2πbx|.
pub fn bourgain_search(n: usize, range: u64, iterations: usize, seed: u64) -> Result<BourgainSearch> {
    if n < 4 || range < 4 * n as u64 {
        return Err(MoranError::InvalidParams(format!("need n ≥ 4 and R ≥ 4n (n = {n}, R = {range})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set: Vec<u64> = Vec::with_capacity(n);
    while set.len() < n {
        let b = rng.gen_range(1..=range);
        if !set.contains(&b) {
            set.push(b);
        }
    }
    let mut prof = Profile::new(range);
    for &b in &set {
        prof.add(b, 1.0);
    }
    let mut current = prof.objective();
    let initial_objective = current;
    let mut best = (set.clone(), current);
    let mut temp = 1.0;
    let mut best_history = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let i = rng.gen_range(0..n);
        let mut cand = rng.gen_range(1..=range);
        while set.contains(&cand) {
            cand = rng.gen_range(1..=range);
        }
        let next = prof.swapped_objective(set[i], cand);
        let delta = next - current;
        let u: f64 = rng.gen();
        if delta <= 0.0 || u < libm::exp(-delta / temp) {
            prof.add(set[i], -1.0);
            prof.add(cand, 1.0);
            set[i] = cand;
            current = next;
            if current < best.1 {
                best = (set.clone(), current);
            }
        }
        temp *= 0.995;
        best_history.push(best.1);
    }
    let mut best_set = best.0;
    best_set.sort_unstable();
    let certified = certified_sine_max(&best_set, None, 0.0, None)?;
    Ok(BourgainSearch { set: best_set, seed, iterations, initial_objective, objective: best.1, best_history, certified })
}

/// Symmetric stage from a sine set: N is the least integer above max(B*)·2^padding and 3·max(B*).
pub fn bourgain_to_spec(set: &[u64], padding: usize) -> Result<Stage> {
    let mut pos: Vec<u64> = set.iter().copied().filter(|&b| b > 0).collect();
    pos.sort_unstable();
    pos.dedup();
    let max = *pos.last().ok_or(MoranError::EmptySet)?;
    if padding < 1 {
        return Err(MoranError::InvalidParams("padding ≥ 1".into()));
    }
    let shifted = if padding >= 64 { None } else { max.checked_mul(1u64 << padding) };
    let shifted = shifted.ok_or(MoranError::StageOverflow(0))?;
    let modulus = shifted.max(3 * max).checked_add(1).ok_or(MoranError::StageOverflow(0))?;
    let mut digits = vec![0];
    digits.extend(pos.iter().copied());
    digits.extend(pos.iter().map(|&b| modulus - b));
    let half = (modulus / 2) as i64;
    let mut spectrum = vec![0, half];
    let mut next = 1i64;
    while spectrum.len() < digits.len() {
        if next != half {
            spectrum.push(next);
        }
        next += 1;
    }
    Stage::new(modulus, digits, Some(spectrum))
}

/// Upper bound on |mask(N, B, 1/2 + k)| over all k for a symmetric stage built from B* with sine supremum `sine_sup`.
pub fn uniform_mask_bound(set: &[u64], modulus: u64, sine_sup: f64) -> f64 {
    let pos: Vec<u64> = set.iter().copied().filter(|&b| b > 0).collect();
    let m = (1 + 2 * pos.len()) as f64;
    let shift = PI * pos.iter().map(|&b| b as f64).sum::<f64>() / modulus as f64;
    let s = 2.0 * (sine_sup + shift) / m;
    libm::sqrt(1.0 / (m * m) + s * s)
}

/// From a sine maximizer x to a half-integer mask lower bound.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    pub x: f64,
    pub k: BigInt,
    /// |(2/#B) Σ_{B0} sin 2πbx|.
    pub eps0: f64,
    /// (4π/#B) Σ_{B0} b/N.
    pub error_bound: f64,
    pub guaranteed: f64,
    pub mask_abs: f64,
}

pub fn half_integer_pipeline(stage: &Stage, delta: f64, x: f64) -> Result<PipelineReport> {
    let split = symmetric_split(stage.modulus, &stage.digits, delta)?;
    if !split.is_symmetric {
        return Err(MoranError::InvalidParams("stage is not symmetric at this delta".into()));
    }
    let n = stage.modulus as f64;
    let m = stage.size() as f64;
    let s: f64 = split.b0.iter().map(|&b| libm::sin(TAU * b as f64 * x)).sum();
    let eps0 = libm::fabs(2.0 * s / m);
    let k = libm::round(n * x) as i64;
    let k = BigInt::from(k);
    let error_bound = 2.0 * TAU / m * split.b0.iter().map(|&b| b as f64 / n).sum::<f64>();
    let xi = Freq::exact(num_rational::BigRational::new(&k * 2 + 1, BigInt::from(2)));
    let mask_abs = mask_ft(stage.modulus, &stage.digits, &xi).norm();
    Ok(PipelineReport { x, k, eps0, error_bound, guaranteed: eps0 - error_bound, mask_abs })
}
