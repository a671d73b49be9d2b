//! Weak-limit classification, zero-set scans, half-line probes, Wiener averages and mask identities.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::certified::CertifiedReal;
use crate::error::{MoranError, Result};
use crate::freq::{ratio_to_f64, turn_exp, Freq};
use crate::measure::{mask_ft, DiscreteMeasure, EvalConfig, FourierTransform};
use crate::stage::{hull_partial, Family, MoranSpec, StageSource, TailRule, TailSpec};

// ---------------------------------------------------------------------------
// Weak limit ν_{>n} → ρ
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoThresholds {
    /// Largest |ν̂_{>n}(1/2)| accepted as "→ 0".
    pub half: f64,
    /// Largest interior mass accepted as "→ 0".
    pub interior: f64,
    /// Allowed distance of the lower B-mass from ½.
    pub balance: f64,
}

impl Default for RhoThresholds {
    fn default() -> Self {
        Self { half: 1e-3, interior: 1e-12, balance: 0.1 }
    }
}

/// Evidence that ν_{>n} does not converge weakly to ρ.
#[derive(Clone, Debug, PartialEq)]
pub enum RhoWitness {
    /// Every tail is supported in [0, c] with c < 1.
    HullBound { c: BigRational },
    /// N_n ≤ M throughout and N_n − 1 ∈ B_n recurs; I carries mass ≥ `mass_lower` at stage `stage` of each period.
    BoundedModulus { sup_modulus: u64, stage: usize, period: usize, interval: (BigRational, BigRational), mass_lower: BigRational },
}

#[derive(Clone, Debug, PartialEq)]
pub enum RhoVerdict {
    ConvergesToRho,
    NotRho(RhoWitness),
    Undetermined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RhoSample {
    pub n: usize,
    /// |ν̂_{>n}(1/2)|.
    pub half_value: CertifiedReal,
    /// δ_{B_n/N_n}((δ, 1−δ)).
    pub interior_mass: f64,
    /// δ_{B_n/N_n}([0, δ]).
    pub lower_mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RhoLimitReport {
    pub delta: f64,
    pub samples: Vec<RhoSample>,
    pub verdict: RhoVerdict,
}

/// sup_n of the exact hull Σ_j maxB_{n+j}/(N_{n+1}⋯N_{n+j}) when it is computable.
pub fn hull_sup(spec: &MoranSpec) -> Result<Option<BigRational>> {
    let len = spec.prefix.len();
    let best = |xs: Vec<BigRational>| xs.into_iter().max();
    match &spec.tail {
        TailRule::Finite => {
            let mut v = Vec::with_capacity(len);
            for n in 1..len.max(1) {
                v.push(hull_partial(spec, n, len - n)?);
            }
            Ok(Some(best(v).unwrap_or_else(BigRational::zero)))
        }
        TailRule::PeriodicRepeat => {
            let cycle: BigInt = spec.prefix.iter().map(|s| BigInt::from(s.modulus)).product();
            let scale = BigRational::one() - BigRational::new(BigInt::one(), cycle);
            let mut v = Vec::with_capacity(len);
            for s in 0..len {
                v.push(hull_partial(spec, s, len)? / &scale);
            }
            Ok(best(v))
        }
        TailRule::Parametric(Family::Jp4) => {
            let two_thirds = BigRational::new(BigInt::from(2), BigInt::from(3));
            let mut v = alloc::vec![two_thirds.clone()];
            for n in 1..len {
                let head = hull_partial(spec, n, len - n)?;
                let den: BigInt = spec.prefix[n..].iter().map(|s| BigInt::from(s.modulus)).product();
                v.push(head + &two_thirds / BigRational::from_integer(den));
            }
            Ok(best(v))
        }
        TailRule::Parametric(_) => Ok(None),
    }
}

/// Bounded-modulus witness for periodic towers whose cycle contains a stage with N − 1 ∈ B.
pub fn bounded_modulus_witness(spec: &MoranSpec) -> Option<RhoWitness> {
    if spec.tail != TailRule::PeriodicRepeat {
        return None;
    }
    let len = spec.prefix.len();
    let sup_modulus = spec.prefix.iter().map(|s| s.modulus).max()?;
    let pos = spec.prefix.iter().position(|s| s.max_digit() == s.modulus - 1)?;
    let st = &spec.prefix[pos];
    let next = &spec.prefix[(pos + 1) % len];
    let n = BigInt::from(st.modulus);
    let lo = BigRational::new(&n - 1, n.clone());
    let hi = &lo + BigRational::new(BigInt::one(), &n * 2);
    let mass_lower = BigRational::new(BigInt::one(), BigInt::from(st.size() as u64 * next.size() as u64));
    Some(RhoWitness::BoundedModulus { sup_modulus, stage: pos + 1, period: len, interval: (lo, hi), mass_lower })
}

/// Independent re-check of a witness.
pub fn verify_rho_witness(spec: &MoranSpec, w: &RhoWitness) -> Result<bool> {
    match w {
        RhoWitness::HullBound { c } => {
            // the first stages of every tail stay within c
            if *c >= BigRational::one() {
                return Ok(false);
            }
            let period = match spec.tail {
                TailRule::PeriodicRepeat | TailRule::Finite => spec.prefix.len(),
                _ => spec.prefix.len() + 1,
            };
            for n in 0..period.max(1) {
                let avail = spec.depth().map(|d| d.saturating_sub(n)).unwrap_or(40);
                let h = hull_partial(spec, n, avail.min(40))?;
                if h > *c {
                    return Ok(false);
                }
            }
            Ok(hull_sup(spec)?.map_or(false, |s| s <= *c))
        }
        RhoWitness::BoundedModulus { sup_modulus, stage, period, interval, mass_lower } => {
            if spec.tail != TailRule::PeriodicRepeat || *period != spec.prefix.len() {
                return Ok(false);
            }
            if spec.prefix.iter().any(|s| s.modulus > *sup_modulus) {
                return Ok(false);
            }
            // mass of the first two stages of ν_{>stage−1} inside the interval
            let tail = TailSpec::new(spec, stage - 1);
            let two = crate::measure::partial_measure(&tail, 2, 1 << 20)?;
            let st = tail.stage(2)?;
            let slack = BigRational::new(BigInt::one(), BigInt::from(st.modulus)) / BigRational::from_integer(BigInt::from(tail.stage(1)?.modulus));
            let mut mass = 0.0;
            for a in two.atoms() {
                // the remaining tail adds at most slack
                if a.location >= interval.0 && &a.location + &slack <= interval.1 {
                    mass += a.weight;
                }
            }
            let m = BigRational::from_integer(BigInt::from(*sup_modulus));
            let floor = BigRational::one() / (&m * &m);
            Ok(mass + 1e-12 >= ratio_to_f64(mass_lower) && *mass_lower >= floor && interval.0 > BigRational::zero() && interval.1 < BigRational::one())
        }
    }
}

fn masses(digits: &[u64], modulus: u64, delta: f64) -> (f64, f64) {
    let n = modulus as f64;
    let inside = digits.iter().filter(|&&b| (b as f64) > delta * n && (b as f64) < (1.0 - delta) * n).count();
    let lower = digits.iter().filter(|&&b| (b as f64) <= delta * n).count();
    let m = digits.len() as f64;
    (inside as f64 / m, lower as f64 / m)
}

pub fn rho_limit_probe(spec: &MoranSpec, n_max: usize, delta: f64, thr: &RhoThresholds, cfg: &EvalConfig) -> Result<RhoLimitReport> {
    if n_max < 2 || !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(MoranError::InvalidParams("need n_max ≥ 2 and 0 < delta < 1/3".into()));
    }
    let depth = spec.depth().map_or(n_max, |d| d.min(n_max));
    let half = Freq::ratio(1, 2);
    let mut samples = Vec::with_capacity(depth);
    for n in 1..=depth {
        let st = spec.stage(n)?;
        let (interior_mass, lower_mass) = masses(&st.digits, st.modulus, delta);
        let v = TailSpec::new(spec, n).fourier(&half, cfg)?.abs();
        samples.push(RhoSample { n, half_value: v, interior_mass, lower_mass });
    }
    let verdict = if let Some(c) = hull_sup(spec)?.filter(|c| *c < BigRational::one()) {
        RhoVerdict::NotRho(RhoWitness::HullBound { c })
    } else if let Some(w) = bounded_modulus_witness(spec) {
        RhoVerdict::NotRho(w)
    } else {
        match samples.last() {
            Some(s) if s.half_value.upper() <= thr.half && s.interior_mass <= thr.interior && (s.lower_mass - 0.5).abs() <= thr.balance => {
                RhoVerdict::ConvergesToRho
            }
            _ => RhoVerdict::Undetermined,
        }
    };
    Ok(RhoLimitReport { delta, samples, verdict })
}

/// max_{|k|≤window} |ν̂_{>n}(ξ + k)| for each n; contrasts decay at ξ = 1/2 with other points.
pub fn window_max_profile(spec: &MoranSpec, xi: &Freq, ns: &[usize], window: i64, cfg: &EvalConfig) -> Result<Vec<f64>> {
    ns.iter()
        .map(|&n| {
            let tail = TailSpec::new(spec, n);
            let mut best: f64 = 0.0;
            for k in -window..=window {
                best = best.max(tail.fourier(&xi.add_i64(k), cfg)?.abs().upper());
            }
            Ok(best)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Integral periodic zero set
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanParams {
    pub grid: usize,
    pub window: i64,
    pub tol: f64,
    /// Largest denominator tried when snapping near-zero cells to rationals.
    pub snap_denominator: u64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self { grid: 4096, window: 32, tol: 1e-6, snap_denominator: 64 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub j: usize,
    /// Certified upper bound of max_k |μ̂(j/grid + k)|, or a value above the refine threshold.
    pub upper: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroCandidate {
    pub xi: BigRational,
    pub max_abs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroScan {
    pub candidates: Vec<ZeroCandidate>,
    pub refine_threshold: f64,
    pub min_grid_value: f64,
    pub radius_budget: f64,
    pub refined_cells: usize,
}

pub fn refine_threshold<M: FourierTransform + ?Sized>(m: &M, p: &ScanParams) -> f64 {
    p.tol + core::f64::consts::PI * m.support_bound() / p.grid as f64 * (1.0 + 1e-9)
}

fn window_upper<M: FourierTransform + ?Sized>(m: &M, xi: &Freq, window: i64, cutoff: f64, cfg: &EvalConfig) -> Result<(f64, f64)> {
    let mut best: f64 = 0.0;
    let mut radius: f64 = 0.0;
    for i in 0..=2 * window {
        let k = if i % 2 == 1 { (i + 1) / 2 } else { -(i / 2) };
        let v = m.fourier(&xi.add_i64(k), cfg)?.abs();
        radius = radius.max(v.radius);
        best = best.max(v.upper());
        if v.lower() > cutoff {
            break;
        }
    }
    Ok((best, radius))
}

/// Evaluates grid point j of the scan.
pub fn scan_grid_point<M: FourierTransform + ?Sized>(m: &M, j: usize, p: &ScanParams, cfg: &EvalConfig) -> Result<GridPoint> {
    let xi = Freq::ratio(j as i64, p.grid as i64);
    let (upper, radius) = window_upper(m, &xi, p.window, refine_threshold(m, p), cfg)?;
    Ok(GridPoint { j, upper, radius })
}

/// Turns evaluated grid points into candidates, snapping near-zero cells to small-denominator rationals.
pub fn finish_scan<M: FourierTransform + ?Sized>(m: &M, p: &ScanParams, points: &[GridPoint], cfg: &EvalConfig) -> Result<ZeroScan> {
    let thr = refine_threshold(m, p);
    let mut found: Vec<ZeroCandidate> = Vec::new();
    let mut radius_budget: f64 = 0.0;
    let mut min_grid_value = f64::INFINITY;
    let mut refined_cells = 0;
    let grid = BigInt::from(p.grid as u64);
    for gp in points {
        radius_budget = radius_budget.max(gp.radius);
        min_grid_value = min_grid_value.min(gp.upper);
        if gp.upper < p.tol {
            found.push(ZeroCandidate { xi: BigRational::new(BigInt::from(gp.j as u64), grid.clone()), max_abs: gp.upper });
        }
        if gp.upper > thr {
            continue;
        }
        refined_cells += 1;
        // rationals a/q within half a cell of j/grid
        let two_g = 2 * p.grid as u64;
        for q in 1..=p.snap_denominator {
            let lo = (2 * gp.j as i64 - 1) as i128 * q as i128;
            let hi = (2 * gp.j as i64 + 1) as i128 * q as i128;
            // a with lo ≤ 2·grid·a ≤ hi
            let a_lo = Integer::div_ceil(&lo, &(two_g as i128)).max(0);
            let a_hi = Integer::div_floor(&hi, &(two_g as i128));
            for a in a_lo..=a_hi {
                if a >= q as i128 {
                    continue;
                }
                let r = BigRational::new(BigInt::from(a), BigInt::from(q));
                if r.denom() != &BigInt::from(q) && q > 1 {
                    continue;
                }
                if found.iter().any(|c| c.xi == r) {
                    continue;
                }
                let (v, rad) = window_upper(m, &Freq::exact(r.clone()), p.window, p.tol, cfg)?;
                radius_budget = radius_budget.max(rad);
                if v < p.tol {
                    found.push(ZeroCandidate { xi: r, max_abs: v });
                }
            }
        }
    }
    found.sort_by(|a, b| a.xi.cmp(&b.xi));
    found.dedup_by(|a, b| a.xi == b.xi);
    Ok(ZeroScan { candidates: found, refine_threshold: thr, min_grid_value, radius_budget, refined_cells })
}

/// Scans ξ ∈ [0, 1) for points where |μ̂(ξ + k)| < tol for all |k| ≤ window.
pub fn zero_set_scan<M: FourierTransform + ?Sized>(m: &M, p: &ScanParams, cfg: &EvalConfig) -> Result<ZeroScan> {
    if p.grid < 2 || p.window < 0 || !(p.tol > 0.0) {
        return Err(MoranError::InvalidParams("grid ≥ 2, window ≥ 0, tol > 0".into()));
    }
    let points = (0..p.grid).map(|j| scan_grid_point(m, j, p, cfg)).collect::<Result<Vec<_>>>()?;
    finish_scan(m, p, &points, cfg)
}

// ---------------------------------------------------------------------------
// Half-line probe
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct HalfLineProbe {
    pub best_k: i64,
    pub value: CertifiedReal,
}

/// Maximizes certified |μ̂(1/2 + k)| over |k| ≤ window; ties go to the smallest |k|, then nonnegative.
pub fn half_line_probe<M: FourierTransform + ?Sized>(m: &M, window: i64, cfg: &EvalConfig) -> Result<HalfLineProbe> {
    if window < 1 {
        return Err(MoranError::InvalidParams("window ≥ 1".into()));
    }
    let half = Freq::ratio(1, 2);
    let mut best = HalfLineProbe { best_k: 0, value: CertifiedReal::new(-1.0, 0.0) };
    for i in 0..=2 * window {
        let k = if i % 2 == 1 { (i + 1) / 2 } else { -(i / 2) };
        let v = m.fourier(&half.add_i64(k), cfg)?.abs();
        if v.value > best.value.value {
            best = HalfLineProbe { best_k: k, value: v };
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Wiener averaging and the tight-frame identity
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct WienerAverage {
    /// Mean of |μ̂(ξ + k)|² over k ∈ [−periods·q, periods·q).
    pub average: f64,
    /// Σ w².
    pub atom_sum: f64,
    /// Σ over classes mod 1 of |Σ_{a in class} w_a e^{−2πi a ξ}|²; equals `atom_sum` when atoms are distinct mod 1.
    pub folded_sum: f64,
    pub defect: f64,
    pub terms: usize,
}

pub fn wiener_average(m: &DiscreteMeasure, xi: &Freq, periods: usize) -> Result<WienerAverage> {
    if !xi.is_exact() {
        return Err(MoranError::NonRationalAtoms);
    }
    if periods == 0 {
        return Err(MoranError::InvalidParams("periods ≥ 1".into()));
    }
    let q = m.atoms().iter().fold(BigInt::one(), |acc, a| acc.lcm(a.location.denom()));
    let span = (&q * BigInt::from(periods as u64)).to_i64().ok_or_else(|| MoranError::InvalidParams(format!("period {q} too large")))?;
    let cfg = EvalConfig::default();
    let mut acc = 0.0;
    for k in -span..span {
        let v = m.fourier(&xi.add_i64(k), &cfg)?.value;
        acc += v.norm_sqr();
    }
    let terms = (2 * span) as usize;
    let average = acc / terms as f64;
    let atom_sum = m.atoms().iter().map(|a| a.weight * a.weight).sum();
    // group atoms by location mod 1
    let mut classes: Vec<(BigRational, num_complex::Complex64)> = Vec::new();
    for a in m.atoms() {
        let frac = &a.location - a.location.floor();
        let t = &a.location * xi.value();
        let z = turn_exp(t.numer(), t.denom().magnitude()) * a.weight;
        match classes.iter_mut().find(|c| c.0 == frac) {
            Some(c) => c.1 += z,
            None => classes.push((frac, z)),
        }
    }
    let folded_sum: f64 = classes.iter().map(|c| c.1.norm_sqr()).sum();
    Ok(WienerAverage { average, atom_sum, folded_sum, defect: (average - folded_sum).abs(), terms })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TightFrame {
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
}

/// 1/#B against (1/N) Σ_{k<N} |mask(N, B, 1/2 + k)|².
pub fn tight_frame_identity(modulus: u64, digits: &[u64]) -> Result<TightFrame> {
    if digits.is_empty() {
        return Err(MoranError::EmptySet);
    }
    let lhs = 1.0 / digits.len() as f64;
    let mut acc = 0.0;
    for k in 0..modulus {
        acc += mask_ft(modulus, digits, &Freq::ratio(2 * k as i64 + 1, 2)).norm_sqr();
    }
    let rhs = acc / modulus as f64;
    Ok(TightFrame { lhs, rhs, defect: (lhs - rhs).abs() })
}

// ---------------------------------------------------------------------------
// Symmetric splits
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSplit {
    pub delta: f64,
    /// B_δ ∩ [0, Nδ].
    pub b0: Vec<u64>,
    /// N − (B_δ ∩ [N(1−δ), N)).
    pub b1: Vec<u64>,
    /// B \ B_δ.
    pub dropped: Vec<u64>,
    pub is_symmetric: bool,
    /// Symmetry also holds at δ/2.
    pub symmetric_at_half_delta: bool,
}

fn split_parts(modulus: u64, digits: &[u64], delta: f64) -> (Vec<u64>, Vec<u64>, Vec<u64>) {
    let n = modulus as f64;
    let mut b0 = Vec::new();
    let mut b1 = Vec::new();
    let mut dropped = Vec::new();
    for &b in digits {
        let x = b as f64;
        if x <= delta * n {
            b0.push(b);
        } else if x >= (1.0 - delta) * n {
            b1.push(modulus - b);
        } else {
            dropped.push(b);
        }
    }
    b0.sort_unstable();
    b1.sort_unstable();
    (b0, b1, dropped)
}

fn symmetric_parts(b0: &[u64], b1: &[u64], dropped: &[u64]) -> bool {
    dropped.is_empty() && b0.first() == Some(&0) && b0[1..] == *b1
}

pub fn symmetric_split(modulus: u64, digits: &[u64], delta: f64) -> Result<SymmetricSplit> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(MoranError::InvalidParams("0 < delta < 1/3".into()));
    }
    if digits.is_empty() {
        return Err(MoranError::EmptySet);
    }
    if let Some(&b) = digits.iter().find(|&&b| b >= modulus) {
        return Err(MoranError::InvalidParams(format!("digit {b} not below N = {modulus}")));
    }
    let (b0, b1, dropped) = split_parts(modulus, digits, delta);
    let is_symmetric = symmetric_parts(&b0, &b1, &dropped);
    let (h0, h1, hd) = split_parts(modulus, digits, delta / 2.0);
    let symmetric_at_half_delta = symmetric_parts(&h0, &h1, &hd);
    Ok(SymmetricSplit { delta, b0, b1, dropped, is_symmetric, symmetric_at_half_delta })
}

/// sin 2π(b/2N + bk/N) with exact reduction.
pub fn half_line_sine(modulus: u64, b: u64, k: &BigInt) -> f64 {
    let num = BigInt::from(b) * (k * 2 + 1);
    -turn_exp(&num, &BigUint::from(2 * modulus as u128)).im
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskIdentity {
    pub symmetric: bool,
    /// |mask(N, B, 1/2 + k)|² for symmetric stages, |mask| otherwise.
    pub lhs: f64,
    /// The symmetric closed form, or the one-sided lower bound for general stages.
    pub rhs: f64,
    /// |lhs − rhs| when symmetric, max(0, rhs − lhs) otherwise.
    pub defect: f64,
}

pub fn symmetric_mask_identity(modulus: u64, digits: &[u64], delta: f64, k: &BigInt) -> Result<MaskIdentity> {
    let split = symmetric_split(modulus, digits, delta)?;
    let m = digits.len() as f64;
    let xi = Freq::exact(BigRational::new(k * 2 + 1, BigInt::from(2)));
    let mask = mask_ft(modulus, digits, &xi).norm();
    if split.is_symmetric {
        let s: f64 = split.b0.iter().map(|&b| half_line_sine(modulus, b, k)).sum();
        let lhs = mask * mask;
        let rhs = 1.0 / (m * m) + (2.0 * s / m) * (2.0 * s / m);
        Ok(MaskIdentity { symmetric: true, lhs, rhs, defect: (lhs - rhs).abs() })
    } else {
        // m_b = 2 on B0 ∩ B1, 1 otherwise
        let mut s = 0.0;
        for &b in &split.b0 {
            s += half_line_sine(modulus, b, k);
        }
        for &b in &split.b1 {
            s += half_line_sine(modulus, b, k);
        }
        let rhs = (s / m).abs() - split.dropped.len() as f64 / m;
        Ok(MaskIdentity { symmetric: false, lhs: mask, rhs, defect: (rhs - mask).max(0.0) })
    }
}

/// Formats a rational as "p/q".
pub fn fmt_ratio(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
