//! Stages, Moran specifications and tails.

use alloc::borrow::Cow;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{MoranError, Result};

/// One stage of a Moran tower: modulus N, digit set B and an optional spectrum L.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub modulus: u64,
    pub digits: Vec<u64>,
    pub spectrum: Option<Vec<i64>>,
}

impl Stage {
    /// Sorts and validates. Requires N ≥ 2, 0 ∈ B, B ⊂ [0, N), distinct entries, and 0 ∈ L when L is given.
    pub fn new(modulus: u64, digits: Vec<u64>, spectrum: Option<Vec<i64>>) -> Result<Self> {
        let s = Self::new_unchecked_range(modulus, digits, spectrum)?;
        if let Some(&b) = s.digits.iter().find(|&&b| b >= modulus) {
            return Err(MoranError::InvalidStage { index: 0, reason: format!("digit {b} not below N = {modulus}") });
        }
        Ok(s)
    }

    /// Like `new` but allows digits at or beyond N.
    pub fn new_unchecked_range(modulus: u64, mut digits: Vec<u64>, spectrum: Option<Vec<i64>>) -> Result<Self> {
        let bad = |reason: alloc::string::String| MoranError::InvalidStage { index: 0, reason };
        if modulus < 2 {
            return Err(bad(format!("modulus {modulus} < 2")));
        }
        digits.sort_unstable();
        if digits.first() != Some(&0) {
            return Err(bad("0 must belong to B".into()));
        }
        if digits.windows(2).any(|w| w[0] == w[1]) {
            return Err(bad("repeated digit".into()));
        }
        let spectrum = match spectrum {
            Some(mut l) => {
                l.sort_unstable();
                if l.binary_search(&0).is_err() {
                    return Err(bad("0 must belong to L".into()));
                }
                if l.len() != digits.len() {
                    return Err(bad(format!("#L = {} but #B = {}", l.len(), digits.len())));
                }
                let mut res: Vec<i64> = l.iter().map(|x| x.rem_euclid(modulus as i64)).collect();
                res.sort_unstable();
                if res.windows(2).any(|w| w[0] == w[1]) {
                    return Err(bad("L entries not distinct mod N".into()));
                }
                Some(l)
            }
            None => None,
        };
        Ok(Self { modulus, digits, spectrum })
    }

    pub fn size(&self) -> usize {
        self.digits.len()
    }

    pub fn max_digit(&self) -> u64 {
        *self.digits.last().unwrap_or(&0)
    }

    /// B ⊂ [0, N).
    pub fn is_standard(&self) -> bool {
        self.max_digit() < self.modulus
    }
}

/// Built-in infinite families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// (4, {0,2}, {0,1}) at every stage.
    Jp4,
    /// N = 4^n, B = {0, 4^n − 1}, L = {0, 2^{2n−1}}.
    Example45,
    /// (2, {0,1}, {0,1}) then (2, {0,3}, {0,1}).
    Example92,
    /// Symmetric stage built from a sine set with modulus growing in n.
    Bourgain { set: Vec<u64>, padding: u32 },
}

impl Family {
    /// Stage n ≥ 1.
    pub fn stage(&self, n: usize) -> Result<Stage> {
        assert!(n >= 1);
        match self {
            Family::Jp4 => Ok(Stage { modulus: 4, digits: vec![0, 2], spectrum: Some(vec![0, 1]) }),
            Family::Example45 => {
                if n >= 32 {
                    return Err(MoranError::StageOverflow(n));
                }
                let m = 1u64 << (2 * n);
                Ok(Stage { modulus: m, digits: vec![0, m - 1], spectrum: Some(vec![0, (m / 2) as i64]) })
            }
            Family::Example92 => {
                let digits = if n == 1 { vec![0, 1] } else { vec![0, 3] };
                Ok(Stage { modulus: 2, digits, spectrum: Some(vec![0, 1]) })
            }
            Family::Bourgain { set, padding } => {
                let pad = (*padding as usize).checked_add(n - 1).ok_or(MoranError::StageOverflow(n))?;
                crate::sumsine::bourgain_to_spec(set, pad).map_err(|e| match e {
                    MoranError::StageOverflow(_) => MoranError::StageOverflow(n),
                    other => other,
                })
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Jp4 => "jp4",
            Family::Example45 => "example45",
            Family::Example92 => "example92",
            Family::Bourgain { .. } => "bourgain",
        }
    }

    /// Supremum of the support of the tail measure after `n` family stages.
    fn tail_support(&self, n: usize) -> f64 {
        match self {
            Family::Example92 => {
                if n == 0 {
                    2.0
                } else {
                    3.0
                }
            }
            _ => 1.0,
        }
    }

    pub fn is_standard(&self) -> bool {
        !matches!(self, Family::Example92)
    }
}

/// How stages continue after the explicit prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TailRule {
    /// Only the prefix; the tower is finite.
    Finite,
    /// The prefix repeats forever.
    PeriodicRepeat,
    /// Stage n beyond the prefix comes from a family at absolute index n.
    Parametric(Family),
}

/// A Moran tower: explicit stages followed by a tail rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoranSpec {
    pub prefix: Vec<Stage>,
    pub tail: TailRule,
}

impl MoranSpec {
    pub fn new(prefix: Vec<Stage>, tail: TailRule) -> Result<Self> {
        if prefix.is_empty() && !matches!(tail, TailRule::Parametric(_)) {
            return Err(MoranError::InvalidParams("empty stage list".into()));
        }
        for (i, s) in prefix.iter().enumerate() {
            if !s.is_standard() {
                return Err(MoranError::InvalidStage { index: i + 1, reason: format!("digit {} not below N = {}", s.max_digit(), s.modulus) });
            }
        }
        Ok(Self { prefix, tail })
    }

    pub fn finite(prefix: Vec<Stage>) -> Result<Self> {
        Self::new(prefix, TailRule::Finite)
    }

    pub fn periodic(cycle: Vec<Stage>) -> Result<Self> {
        Self::new(cycle, TailRule::PeriodicRepeat)
    }

    pub fn family(family: Family) -> Self {
        Self { prefix: Vec::new(), tail: TailRule::Parametric(family) }
    }

    /// The middle-fourth tower (4, {0,2}, {0,1}).
    pub fn jp4() -> Self {
        Self::family(Family::Jp4)
    }

    pub fn example45() -> Self {
        Self::family(Family::Example45)
    }

    pub fn example92() -> Self {
        Self::family(Family::Example92)
    }

    pub fn family_kind(&self) -> Option<&Family> {
        match &self.tail {
            TailRule::Parametric(f) => Some(f),
            _ => None,
        }
    }
}

/// Source of stages indexed from 1.
pub trait StageSource {
    fn stage(&self, n: usize) -> Result<Cow<'_, Stage>>;
    /// Number of stages when finite.
    fn depth(&self) -> Option<usize>;
    /// An upper bound on the support of the tail measure after `n` stages; the support lies in [0, bound].
    fn tail_support(&self, n: usize) -> f64;
}

impl StageSource for MoranSpec {
    fn stage(&self, n: usize) -> Result<Cow<'_, Stage>> {
        if n == 0 {
            return Err(MoranError::OutOfRange(0));
        }
        if n <= self.prefix.len() {
            return Ok(Cow::Borrowed(&self.prefix[n - 1]));
        }
        match &self.tail {
            TailRule::Finite => Err(MoranError::OutOfRange(n)),
            TailRule::PeriodicRepeat => Ok(Cow::Borrowed(&self.prefix[(n - 1) % self.prefix.len()])),
            TailRule::Parametric(f) => f.stage(n).map(Cow::Owned),
        }
    }

    fn depth(&self) -> Option<usize> {
        match self.tail {
            TailRule::Finite => Some(self.prefix.len()),
            _ => None,
        }
    }

    fn tail_support(&self, n: usize) -> f64 {
        let len = self.prefix.len();
        match &self.tail {
            TailRule::Finite | TailRule::PeriodicRepeat => 1.0,
            TailRule::Parametric(f) => {
                if n >= len {
                    return f.tail_support(n - len);
                }
                if f.is_standard() {
                    return 1.0;
                }
                // standard prefix then the family from offset 0
                let mut scale = 1.0;
                let mut sum = 0.0;
                for s in &self.prefix[n..] {
                    scale /= s.modulus as f64;
                    sum += s.max_digit() as f64 * scale;
                }
                (sum + f.tail_support(0) * scale) * (1.0 + 1e-12)
            }
        }
    }
}

/// The tail tower ν_{>skip}: stages skip+1, skip+2, …
#[derive(Clone, Copy, Debug)]
pub struct TailSpec<'a> {
    pub base: &'a MoranSpec,
    pub skip: usize,
}

impl<'a> TailSpec<'a> {
    pub fn new(base: &'a MoranSpec, skip: usize) -> Self {
        Self { base, skip }
    }
}

impl StageSource for TailSpec<'_> {
    fn stage(&self, n: usize) -> Result<Cow<'_, Stage>> {
        if n == 0 {
            return Err(MoranError::OutOfRange(0));
        }
        self.base.stage(n + self.skip)
    }

    fn depth(&self) -> Option<usize> {
        self.base.depth().map(|d| d.saturating_sub(self.skip))
    }

    fn tail_support(&self, n: usize) -> f64 {
        self.base.tail_support(n + self.skip)
    }
}

/// Exact sum Σ_{j=1}^{count} maxB_{n+j} / (N_{n+1} ⋯ N_{n+j}) over the next `count` stages.
pub fn hull_partial<S: StageSource + ?Sized>(src: &S, n: usize, count: usize) -> Result<BigRational> {
    let mut sum = BigRational::zero();
    let mut den = BigInt::one();
    for j in 1..=count {
        let s = src.stage(n + j)?;
        den *= BigInt::from(s.modulus);
        sum += BigRational::new(BigInt::from(s.max_digit()), den.clone());
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example45_stages() {
        let s = MoranSpec::example45();
        let st = s.stage(2).unwrap();
        assert_eq!(st.modulus, 16);
        assert_eq!(st.digits, vec![0, 15]);
        assert_eq!(st.spectrum, Some(vec![0, 8]));
        assert!(matches!(s.stage(32), Err(MoranError::StageOverflow(32))));
    }

    #[test]
    fn example92_nonstandard_support() {
        let s = MoranSpec::example92();
        assert_eq!(s.stage(1).unwrap().digits, vec![0, 1]);
        assert_eq!(s.stage(5).unwrap().digits, vec![0, 3]);
        assert_eq!(s.tail_support(0), 2.0);
        assert_eq!(s.tail_support(3), 3.0);
    }

    #[test]
    fn periodic_cycles() {
        let a = Stage::new(4, vec![0, 2], None).unwrap();
        let b = Stage::new(3, vec![0, 1], None).unwrap();
        let s = MoranSpec::periodic(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(*s.stage(3).unwrap(), a);
        assert_eq!(*s.stage(4).unwrap(), b);
        let t = TailSpec::new(&s, 1);
        assert_eq!(*t.stage(1).unwrap(), b);
    }

    #[test]
    fn stage_validation() {
        assert!(Stage::new(4, vec![1, 2], None).is_err());
        assert!(Stage::new(4, vec![0, 4], None).is_err());
        assert!(Stage::new(4, vec![0, 2, 2], None).is_err());
        assert!(Stage::new(4, vec![0, 2], Some(vec![1, 3])).is_err());
        assert!(Stage::new(4, vec![0, 2], Some(vec![0])).is_err());
        assert!(Stage::new(4, vec![0, 2], Some(vec![0, 4])).is_err());
        assert!(Stage::new(1, vec![0], None).is_err());
        assert!(MoranSpec::finite(vec![]).is_err());
    }
}
