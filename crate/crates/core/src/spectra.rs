//! Canonical and greedy spectrum construction, δ(Λ), orthogonality and Parseval probes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::certified::CertifiedReal;
use crate::error::{MoranError, Result};
use crate::freq::{big_ratio_to_f64, Freq};
use crate::measure::{moran_ft, EvalConfig};
use crate::stage::{MoranSpec, StageSource, TailSpec};
use crate::triples::factorize_block;

/// A shift chosen for one block spectrum entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shift {
    pub ell: BigInt,
    /// ℓ/𝐍 mod 1.
    pub x: BigRational,
    pub k: i64,
}

/// Nested candidate spectra Λ_1 ⊂ Λ_2 ⊂ … with the block structure that produced them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumTree {
    /// Sorted levels; `levels[0]` is Λ_1.
    pub levels: Vec<Vec<BigInt>>,
    /// Stage index n_k closing the block of level k.
    pub boundaries: Vec<usize>,
    /// Shifts per level; empty for canonical trees.
    pub shifts: Vec<Vec<Shift>>,
}

impl SpectrumTree {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> Result<&[BigInt]> {
        if k == 0 || k > self.levels.len() {
            return Err(MoranError::OutOfRange(k));
        }
        Ok(&self.levels[k - 1])
    }

    /// Structural invariants: nesting, 0 ∈ Λ_1, distinct sorted entries, increasing boundaries.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(MoranError::InvalidParams(m.into()));
        if self.levels.len() != self.boundaries.len() {
            return bad("levels and boundaries differ in length");
        }
        if let Some(first) = self.levels.first() {
            if first.binary_search(&BigInt::zero()).is_err() {
                return bad("0 missing from the first level");
            }
        }
        for l in &self.levels {
            if l.windows(2).any(|w| w[0] >= w[1]) {
                return bad("level not strictly sorted");
            }
        }
        for w in self.levels.windows(2) {
            if w[0].iter().any(|x| w[1].binary_search(x).is_err()) {
                return bad("levels not nested");
            }
        }
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) || self.boundaries.first() == Some(&0) {
            return bad("block boundaries not increasing");
        }
        Ok(())
    }
}

fn product_upto<S: StageSource + ?Sized>(src: &S, n: usize) -> Result<BigUint> {
    let mut p = BigUint::one();
    for j in 1..=n {
        p *= BigUint::from(src.stage(j)?.modulus);
    }
    Ok(p)
}

fn signed(x: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x.clone())
}

/// Λ_n = L_1 + N_1 L_2 + … + N_1⋯N_{n−1} L_n.
pub fn canonical_levels(spec: &MoranSpec, depth: usize) -> Result<SpectrumTree> {
    let mut levels = Vec::with_capacity(depth);
    let mut prev = vec![BigInt::zero()];
    let mut p = BigInt::one();
    for n in 1..=depth {
        let st = spec.stage(n)?;
        let l = st.spectrum.as_ref().ok_or(MoranError::MissingL(n))?;
        let mut next = Vec::with_capacity(prev.len() * l.len());
        for lam in &prev {
            for &ell in l {
                next.push(lam + &p * BigInt::from(ell));
            }
        }
        next.sort();
        next.dedup();
        p *= BigInt::from(st.modulus);
        levels.push(next.clone());
        prev = next;
    }
    Ok(SpectrumTree { levels, boundaries: (1..=depth).collect(), shifts: vec![Vec::new(); depth] })
}

/// Controls for the greedy builder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyParams {
    pub eps0: f64,
    pub delta0: f64,
    pub window: i64,
    /// Take k' = 0 everywhere and skip certification.
    pub force_zero_shifts: bool,
}

impl Default for GreedyParams {
    fn default() -> Self {
        Self { eps0: 0.2, delta0: 0.05, window: 64, force_zero_shifts: false }
    }
}

/// min over λ of the certified lower bound of |ν̂_{>n}(λ/P + t)|.
fn min_lower(tail: &TailSpec<'_>, prev: &[BigInt], p: &BigUint, t: &BigRational, cfg: &EvalConfig) -> Result<f64> {
    let pd = signed(p);
    let mut best = f64::INFINITY;
    for lam in prev {
        let xi = Freq::exact(BigRational::new(lam.clone(), pd.clone()) + t);
        let v = moran_ft(tail, &xi, cfg)?;
        best = best.min(v.value.norm() - v.radius);
    }
    Ok(best)
}

/// Shift order 0, 1, −1, 2, −2, …
fn shift_order(window: i64) -> impl Iterator<Item = i64> {
    (0..=2 * window).map(|i| if i % 2 == 1 { (i + 1) / 2 } else { -(i / 2) })
}

/// Builds Λ_k block by block, choosing integer shifts so every new element keeps |ν̂_{>n_k}| ≥ eps0.
pub fn greedy_spectrum(spec: &MoranSpec, depth: usize, params: &GreedyParams, cfg: &EvalConfig) -> Result<SpectrumTree> {
    if !(params.eps0 > 0.0) || !(params.delta0 > 0.0) || params.window < 0 {
        return Err(MoranError::InvalidParams("eps0, delta0 must be positive and window ≥ 0".into()));
    }
    let mut levels = Vec::with_capacity(depth);
    let mut boundaries = Vec::with_capacity(depth);
    let mut all_shifts = Vec::with_capacity(depth);
    let mut prev = vec![BigInt::zero()];
    let mut n_prev = 0usize;
    let mut p_prev = BigUint::one();
    for level in 1..=depth {
        let max_abs = prev.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero);
        let mut m = n_prev + 1;
        let mut p = &p_prev * BigUint::from(spec.stage(m)?.modulus);
        loop {
            let small = big_ratio_to_f64(&max_abs, &signed(&p)) < params.delta0;
            let ok = small
                && (params.force_zero_shifts
                    || min_lower(&TailSpec::new(spec, m), &prev, &p, &BigRational::zero(), cfg)? >= params.eps0);
            if ok {
                break;
            }
            if m - n_prev >= cfg.depth_cap {
                return Err(MoranError::NoShiftFound { x: "0".into(), level });
            }
            m += 1;
            p *= BigUint::from(spec.stage(m)?.modulus);
        }
        let block = factorize_block(spec, n_prev + 1, m)?;
        let ells = block.spectrum.as_ref().ok_or(MoranError::MissingL(n_prev + 1))?;
        let nb = signed(&block.modulus);
        let tail = TailSpec::new(spec, m);
        let mut shifts = Vec::with_capacity(ells.len());
        for ell in ells {
            let r = BigRational::new(ell.clone(), nb.clone());
            let x = &r - r.floor();
            let k = if params.force_zero_shifts {
                0
            } else {
                let mut found = None;
                for k in shift_order(params.window) {
                    let t = &r + BigRational::from_integer(BigInt::from(k));
                    if min_lower(&tail, &prev, &p, &t, cfg)? >= params.eps0 {
                        found = Some(k);
                        break;
                    }
                }
                found.ok_or_else(|| MoranError::NoShiftFound { x: format!("{x}"), level })?
            };
            shifts.push(Shift { ell: ell.clone(), x, k });
        }
        let pp = signed(&p_prev);
        let pd = signed(&p);
        let mut next = Vec::with_capacity(prev.len() * shifts.len());
        for lam in &prev {
            for s in &shifts {
                next.push(lam + &pp * &s.ell + &pd * BigInt::from(s.k));
            }
        }
        next.sort();
        next.dedup();
        levels.push(next.clone());
        boundaries.push(m);
        all_shifts.push(shifts);
        prev = next;
        n_prev = m;
        p_prev = p;
    }
    Ok(SpectrumTree { levels, boundaries, shifts: all_shifts })
}

/// Minimum of |ν̂_{>n_k}(λ/P_{n_k})|² over computed levels.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaLambda {
    pub value: CertifiedReal,
    pub per_level: Vec<CertifiedReal>,
}

pub fn delta_lambda(spec: &MoranSpec, tree: &SpectrumTree, cfg: &EvalConfig) -> Result<DeltaLambda> {
    let mut per_level = Vec::with_capacity(tree.depth());
    for (lvl, &n) in tree.levels.iter().zip(&tree.boundaries) {
        let p = signed(&product_upto(spec, n)?);
        let tail = TailSpec::new(spec, n);
        let mut best = CertifiedReal::new(f64::INFINITY, 0.0);
        let mut max_r: f64 = 0.0;
        for lam in lvl {
            let v = moran_ft(&tail, &Freq::big_ratio(lam.clone(), p.clone()), cfg)?.norm_sqr();
            max_r = max_r.max(v.radius);
            if v.value < best.value {
                best = v;
            }
        }
        per_level.push(CertifiedReal::new(best.value, max_r));
    }
    let value = per_level
        .iter()
        .fold(CertifiedReal::new(1.0, 0.0), |a, v| if v.value < a.value { CertifiedReal::new(v.value, a.radius.max(v.radius)) } else { CertifiedReal::new(a.value, a.radius.max(v.radius)) });
    Ok(DeltaLambda { value, per_level })
}

/// Largest |μ̂(λ − λ')| over distinct pairs of a level.
#[derive(Clone, Debug, PartialEq)]
pub struct Orthogonality {
    pub max_abs: f64,
    pub radius: f64,
    pub pairs: usize,
}

pub fn orthogonality_check(spec: &MoranSpec, tree: &SpectrumTree, level: usize, cfg: &EvalConfig) -> Result<Orthogonality> {
    let lvl = tree.level(level)?;
    let mut out = Orthogonality { max_abs: 0.0, radius: 0.0, pairs: 0 };
    for (i, a) in lvl.iter().enumerate() {
        for b in &lvl[i + 1..] {
            let v = moran_ft(spec, &Freq::exact(BigRational::from_integer(a - b)), cfg)?;
            out.max_abs = out.max_abs.max(v.value.norm());
            out.radius = out.radius.max(v.radius);
            out.pairs += 2;
        }
    }
    Ok(out)
}

/// Σ_{λ∈Λ_level} |μ̂(x + λ)|².
pub fn parseval_sum(spec: &MoranSpec, tree: &SpectrumTree, level: usize, x: &Freq, cfg: &EvalConfig) -> Result<CertifiedReal> {
    let lvl = tree.level(level)?;
    let mut acc = CertifiedReal::new(0.0, 0.0);
    for lam in lvl {
        let v = moran_ft(spec, &x.add_int(lam), cfg)?.norm_sqr();
        acc.value += v.value;
        acc.radius += v.radius;
    }
    acc.radius += 4.0 * f64::EPSILON * lvl.len() as f64;
    Ok(acc)
}

/// Probe points used when none are supplied.
pub fn default_probes() -> Vec<Freq> {
    vec![Freq::ratio(1, 3), Freq::ratio(1, 7), Freq::from_f64(core::f64::consts::SQRT_2 - 1.0), Freq::ratio(49, 100)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stage::Stage;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn canonical_examples() {
        let t = canonical_levels(&MoranSpec::jp4(), 2).unwrap();
        assert_eq!(t.levels, vec![ints(&[0, 1]), ints(&[0, 1, 4, 5])]);
        let t = canonical_levels(&MoranSpec::example45(), 2).unwrap();
        assert_eq!(t.levels[1], ints(&[0, 2, 32, 34]));
        t.validate().unwrap();
    }

    #[test]
    fn trivial_tower() {
        let s = MoranSpec::periodic(vec![Stage::new(3, vec![0], Some(vec![0])).unwrap()]).unwrap();
        let g = greedy_spectrum(&s, 3, &GreedyParams::default(), &EvalConfig::default()).unwrap();
        assert!(g.levels.iter().all(|l| l == &ints(&[0])));
        let d = delta_lambda(&s, &g, &EvalConfig::default()).unwrap();
        assert!((d.value.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_middle_fourth_zero_shifts() {
        let p = GreedyParams { eps0: 0.3, delta0: 0.1, window: 8, force_zero_shifts: false };
        let g = greedy_spectrum(&MoranSpec::jp4(), 3, &p, &EvalConfig::default()).unwrap();
        assert!(g.shifts.iter().flatten().all(|s| s.k == 0));
        g.validate().unwrap();
    }

    #[test]
    fn orthogonality_small() {
        let spec = MoranSpec::jp4();
        let t = canonical_levels(&spec, 2).unwrap();
        let o = orthogonality_check(&spec, &t, 2, &EvalConfig::default()).unwrap();
        assert!(o.max_abs <= 1e-9);
        assert_eq!(o.pairs, 12);
        let bad = MoranSpec::periodic(vec![Stage::new(4, vec![0, 1], Some(vec![0, 1])).unwrap()]).unwrap();
        let t = canonical_levels(&bad, 2).unwrap();
        assert!(orthogonality_check(&bad, &t, 2, &EvalConfig::default()).unwrap().max_abs > 0.1);
    }

    #[test]
    fn parseval_at_zero_is_one() {
        let spec = MoranSpec::jp4();
        let t = canonical_levels(&spec, 3).unwrap();
        let q = parseval_sum(&spec, &t, 3, &Freq::integer(0), &EvalConfig::default()).unwrap();
        assert!((q.value - 1.0).abs() <= 1e-12 + q.radius);
    }
}
