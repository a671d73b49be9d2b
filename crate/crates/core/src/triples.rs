//! Hadamard and frame triples, tower summability and block factorization.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{MoranError, Result};
use crate::freq::{turn_exp, Freq};
use crate::linalg::hermitian_eigenvalues;
use crate::measure::{mask_ft, mask_ft_big};
use crate::stage::{Family, MoranSpec, Stage, StageSource, TailRule};

pub const DEFAULT_UNITARITY_TOL: f64 = 1e-9;
pub const SEARCH_MAX_MODULUS: u64 = 24;
pub const SEARCH_MAX_DIGITS: usize = 6;

/// Singular-value summary of H = (1/√M)[e^{−2πi b l / N}].
#[derive(Clone, Debug, PartialEq)]
pub struct TripleReport {
    pub modulus: BigUint,
    pub size: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub unitarity_defect: f64,
    pub is_hadamard: bool,
    pub epsilon: f64,
}

fn report_from_matrix(modulus: BigUint, h: &[Complex64], m: usize, tol: f64) -> TripleReport {
    // G = H*H, H indexed [b][l]
    let mut g = alloc::vec![Complex64::new(0.0, 0.0); m * m];
    let mut defect: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for b in 0..m {
                acc += h[b * m + i].conj() * h[b * m + j];
            }
            g[i * m + j] = acc;
            let id = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((acc - id).norm());
        }
    }
    let ev = hermitian_eigenvalues(&g, m);
    let sigma_min = libm::sqrt(ev[0].max(0.0));
    let sigma_max = libm::sqrt(ev[m - 1].max(0.0)).max(sigma_min);
    let is_hadamard = defect <= tol;
    let epsilon = if is_hadamard { 0.0 } else { (1.0 - sigma_min).max(sigma_max - 1.0).max(0.0) };
    TripleReport { modulus, size: m, sigma_min, sigma_max, unitarity_defect: defect, is_hadamard, epsilon }
}

fn distinct_mod(values: &[BigInt], modulus: &BigInt) -> bool {
    let mut r: Vec<BigInt> = values.iter().map(|v| v.mod_floor(modulus)).collect();
    r.sort();
    r.windows(2).all(|w| w[0] != w[1])
}

/// Checks a triple with arbitrary-size integers.
pub fn check_triple_big(modulus: &BigUint, digits: &[BigInt], spectrum: &[BigInt], tol: f64) -> Result<TripleReport> {
    if digits.len() != spectrum.len() {
        return Err(MoranError::SizeMismatch { digits: digits.len(), spectrum: spectrum.len() });
    }
    if digits.is_empty() {
        return Err(MoranError::EmptySet);
    }
    let n = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let small = modulus.to_u64().unwrap_or(u64::MAX);
    if !distinct_mod(spectrum, &n) || !distinct_mod(digits, &n) {
        return Err(MoranError::DuplicateResidue { modulus: small });
    }
    let m = digits.len();
    let scale = 1.0 / libm::sqrt(m as f64);
    let mut h = Vec::with_capacity(m * m);
    for b in digits {
        for l in spectrum {
            h.push(turn_exp(&(b * l), modulus) * scale);
        }
    }
    Ok(report_from_matrix(modulus.clone(), &h, m, tol))
}

/// Checks (N, B, L). Entries of B and L must be distinct mod N.
pub fn check_triple(modulus: u64, digits: &[u64], spectrum: &[i64], tol: f64) -> Result<TripleReport> {
    let b: Vec<BigInt> = digits.iter().map(|&x| BigInt::from(x)).collect();
    let l: Vec<BigInt> = spectrum.iter().map(|&x| BigInt::from(x)).collect();
    check_triple_big(&BigUint::from(modulus), &b, &l, tol)
}

pub fn check_stage(stage: &Stage, index: usize, tol: f64) -> Result<TripleReport> {
    let l = stage.spectrum.as_ref().ok_or(MoranError::MissingL(index))?;
    check_triple(stage.modulus, &stage.digits, l, tol)
}

/// First L ⊂ {0,…,N−1} in lexicographic order with 0 ∈ L making (N, B, L) Hadamard.
pub fn hadamard_exists(modulus: u64, digits: &[u64]) -> Result<Option<Vec<i64>>> {
    if modulus > SEARCH_MAX_MODULUS || digits.len() > SEARCH_MAX_DIGITS {
        return Err(MoranError::SearchSpaceTooLarge(format!(
            "N = {modulus}, #B = {} (caps N ≤ {SEARCH_MAX_MODULUS}, #B ≤ {SEARCH_MAX_DIGITS})",
            digits.len()
        )));
    }
    if digits.is_empty() {
        return Err(MoranError::EmptySet);
    }
    let mut res: Vec<u64> = digits.iter().map(|b| b % modulus).collect();
    res.sort_unstable();
    if res.windows(2).any(|w| w[0] == w[1]) {
        return Err(MoranError::DuplicateResidue { modulus });
    }
    if digits.len() as u64 > modulus {
        return Ok(None);
    }
    // columns l, l' are orthogonal iff the mask vanishes at l − l'
    let zero: Vec<bool> = (0..modulus).map(|d| mask_ft(modulus, digits, &Freq::integer(d as i64)).norm() < 1e-9).collect();
    let m = digits.len();
    let mut chosen: Vec<u64> = alloc::vec![0];
    fn extend(chosen: &mut Vec<u64>, start: u64, m: usize, modulus: u64, zero: &[bool]) -> bool {
        if chosen.len() == m {
            return true;
        }
        for l in start..modulus {
            if chosen.iter().all(|&c| zero[((l + modulus - c) % modulus) as usize]) {
                chosen.push(l);
                if extend(chosen, l + 1, m, modulus, zero) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    if !extend(&mut chosen, 1, m, modulus, &zero) {
        return Ok(None);
    }
    let l: Vec<i64> = chosen.iter().map(|&x| x as i64).collect();
    let rep = check_triple(modulus, digits, &l, DEFAULT_UNITARITY_TOL)?;
    Ok(if rep.is_hadamard { Some(l) } else { None })
}

/// Summability verdict for Σ ε_n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TowerVerdict {
    Summable,
    Divergent,
    Undetermined { depth: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TowerReport {
    pub epsilons: Vec<f64>,
    pub partial_sum: f64,
    /// Π (1 − ε_n) and Π (1 + ε_n) over the computed stages.
    pub frame_bounds: (f64, f64),
    pub verdict: TowerVerdict,
}

/// Families whose stages are all Hadamard by construction.
fn registered_hadamard(f: &Family) -> bool {
    matches!(f, Family::Jp4 | Family::Example45 | Family::Example92)
}

pub fn check_tower(spec: &MoranSpec, n_max: usize, tol: f64) -> Result<TowerReport> {
    let depth = match (&spec.tail, spec.depth()) {
        (_, Some(d)) => d,
        (TailRule::PeriodicRepeat, None) => n_max.max(spec.prefix.len()),
        _ => n_max,
    };
    let mut epsilons = Vec::with_capacity(depth);
    for n in 1..=depth {
        let st = spec.stage(n)?;
        epsilons.push(check_stage(&st, n, tol)?.epsilon);
    }
    let partial_sum = epsilons.iter().sum();
    let lo = epsilons.iter().fold(1.0, |a, e| a * (1.0 - e).max(0.0));
    let hi = epsilons.iter().fold(1.0, |a, e| a * (1.0 + e));
    let all_zero = epsilons.iter().all(|&e| e == 0.0);
    let verdict = match &spec.tail {
        TailRule::Finite => TowerVerdict::Summable,
        TailRule::PeriodicRepeat => {
            if all_zero {
                TowerVerdict::Summable
            } else {
                TowerVerdict::Divergent
            }
        }
        TailRule::Parametric(f) => {
            if registered_hadamard(f) && epsilons.iter().take(spec.prefix.len()).all(|e| e.is_finite()) {
                TowerVerdict::Summable
            } else {
                TowerVerdict::Undetermined { depth }
            }
        }
    };
    Ok(TowerReport { epsilons, partial_sum, frame_bounds: (lo, hi), verdict })
}

/// One-stage representation of stages n..=m.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorBlock {
    pub from: usize,
    pub to: usize,
    pub modulus: BigUint,
    pub digits: Vec<BigInt>,
    /// Absent when some stage lacks L.
    pub spectrum: Option<Vec<BigInt>>,
}

impl FactorBlock {
    pub fn mask_ft(&self, xi: &Freq) -> Complex64 {
        mask_ft_big(&self.modulus, &self.digits, xi)
    }

    pub fn check(&self, tol: f64) -> Result<TripleReport> {
        let l = self.spectrum.as_ref().ok_or(MoranError::MissingL(self.from))?;
        check_triple_big(&self.modulus, &self.digits, l, tol)
    }

    /// Narrows to a `Stage` when all values fit.
    pub fn to_stage(&self) -> Option<Stage> {
        let n = self.modulus.to_u64()?;
        let b: Option<Vec<u64>> = self.digits.iter().map(|d| d.to_u64()).collect();
        let l = match &self.spectrum {
            Some(l) => Some(l.iter().map(|d| d.to_i64()).collect::<Option<Vec<i64>>>()?),
            None => None,
        };
        Stage::new_unchecked_range(n, b?, l).ok()
    }
}

/// 𝐁 = N_{n+1}⋯N_m B_n + … + B_m, 𝐋 = L_n + N_n L_{n+1} + … + N_n⋯N_{m−1} L_m.
pub fn factorize_block<S: StageSource + ?Sized>(src: &S, n: usize, m: usize) -> Result<FactorBlock> {
    if n == 0 || m < n {
        return Err(MoranError::InvalidParams(format!("block {n}..{m}")));
    }
    let mut modulus = BigUint::one();
    let mut digits: Vec<BigInt> = alloc::vec![BigInt::zero()];
    let mut spectrum: Option<Vec<BigInt>> = Some(alloc::vec![BigInt::zero()]);
    for j in n..=m {
        let st = src.stage(j)?;
        let nj = BigInt::from(st.modulus);
        let mut next = Vec::with_capacity(digits.len() * st.size());
        for d in &digits {
            let base = d * &nj;
            for &b in &st.digits {
                next.push(&base + BigInt::from(b));
            }
        }
        digits = next;
        spectrum = match (spectrum, &st.spectrum) {
            (Some(acc), Some(lj)) => {
                let scale = BigInt::from_biguint(Sign::Plus, modulus.clone());
                let mut next = Vec::with_capacity(acc.len() * lj.len());
                for a in &acc {
                    for &l in lj {
                        next.push(a + &scale * BigInt::from(l));
                    }
                }
                Some(next)
            }
            _ => None,
        };
        modulus *= BigUint::from(st.modulus);
    }
    digits.sort();
    if let Some(l) = spectrum.as_mut() {
        l.sort();
    }
    Ok(FactorBlock { from: n, to: m, modulus, digits, spectrum })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jp4_is_hadamard() {
        let r = check_triple(4, &[0, 2], &[0, 1], DEFAULT_UNITARITY_TOL).unwrap();
        assert!(r.is_hadamard);
        assert!((r.sigma_min - 1.0).abs() < 1e-12 && (r.sigma_max - 1.0).abs() < 1e-12);
        assert_eq!(r.epsilon, 0.0);
    }

    #[test]
    fn frame_triple_singular_values() {
        // H*H = [[1, (1+i)/2·…]]; eigenvalues 1 ± √2/2
        let r = check_triple(4, &[0, 1], &[0, 1], DEFAULT_UNITARITY_TOL).unwrap();
        assert!(!r.is_hadamard);
        assert!((r.sigma_max - libm::sqrt(1.0 + libm::sqrt(0.5))).abs() < 1e-12);
        assert!((r.sigma_min - libm::sqrt(1.0 - libm::sqrt(0.5))).abs() < 1e-12);
        assert!((r.epsilon - (1.0 - libm::sqrt(1.0 - libm::sqrt(0.5)))).abs() < 1e-12);
    }

    #[test]
    fn triple_errors() {
        assert!(matches!(check_triple(4, &[0, 2], &[0, 4], 1e-9), Err(MoranError::DuplicateResidue { .. })));
        assert!(matches!(check_triple(4, &[0, 2], &[0], 1e-9), Err(MoranError::SizeMismatch { .. })));
    }

    #[test]
    fn search_examples() {
        assert_eq!(hadamard_exists(4, &[0, 2]).unwrap(), Some(alloc::vec![0, 1]));
        assert_eq!(hadamard_exists(3, &[0, 2]).unwrap(), None);
        assert_eq!(hadamard_exists(2, &[0, 1]).unwrap(), Some(alloc::vec![0, 1]));
        assert!(matches!(hadamard_exists(25, &[0, 1]), Err(MoranError::SearchSpaceTooLarge(_))));
    }

    #[test]
    fn blocks() {
        let s = Stage::new(2, alloc::vec![0, 1], Some(alloc::vec![0, 1])).unwrap();
        let spec = MoranSpec::periodic(alloc::vec![s]).unwrap();
        let b = factorize_block(&spec, 1, 2).unwrap();
        let ints = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert_eq!(b.modulus, BigUint::from(4u32));
        assert_eq!(b.digits, ints(&[0, 1, 2, 3]));
        assert_eq!(b.spectrum, Some(ints(&[0, 1, 2, 3])));
        let j = factorize_block(&MoranSpec::jp4(), 1, 2).unwrap();
        assert_eq!(j.modulus, BigUint::from(16u32));
        assert_eq!(j.digits, ints(&[0, 2, 8, 10]));
        assert_eq!(j.spectrum, Some(ints(&[0, 1, 4, 5])));
        assert!(j.check(1e-9).unwrap().is_hadamard);
    }

    #[test]
    fn tower_verdicts() {
        let r = check_tower(&MoranSpec::jp4(), 10, 1e-9).unwrap();
        assert_eq!(r.verdict, TowerVerdict::Summable);
        assert!(r.epsilons.iter().all(|&e| e == 0.0));
        let r = check_tower(&MoranSpec::example45(), 8, 1e-9).unwrap();
        assert!(r.epsilons.iter().all(|&e| e == 0.0));
        let bad = Stage::new(4, alloc::vec![0, 1], Some(alloc::vec![0, 1])).unwrap();
        let good = Stage::new(4, alloc::vec![0, 2], Some(alloc::vec![0, 1])).unwrap();
        let r = check_tower(&MoranSpec::periodic(alloc::vec![good, bad]).unwrap(), 4, 1e-9).unwrap();
        assert_eq!(r.verdict, TowerVerdict::Divergent);
        assert!(r.epsilons[1] > 0.4);
        let nol = Stage::new(4, alloc::vec![0, 2], None).unwrap();
        assert!(matches!(check_tower(&MoranSpec::finite(alloc::vec![nol]).unwrap(), 1, 1e-9), Err(MoranError::MissingL(1))));
    }
}
