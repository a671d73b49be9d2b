//! Masks, certified Fourier transforms and discrete measures.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::certified::CertifiedComplex;
use crate::error::{MoranError, Result};
use crate::freq::{ratio_to_f64, turn_exp, Freq, PhaseKernel};
use crate::stage::{MoranSpec, StageSource, TailSpec};

const ROUNDING_PER_STAGE: f64 = 16.0 * f64::EPSILON;

/// Evaluation controls for infinite products.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalConfig {
    pub tol: f64,
    pub depth_cap: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { tol: 1e-10, depth_cap: 64 }
    }
}

impl EvalConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

fn mask_with_kernel(digits: &[u64], kernel: &PhaseKernel) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &b in digits {
        acc += kernel.phase_u64(b);
    }
    acc / digits.len() as f64
}

/// (1/#B) Σ_b e^{-2πi b ξ / N}.
pub fn mask_ft(modulus: u64, digits: &[u64], xi: &Freq) -> Complex64 {
    let v = xi.value();
    let den = v.denom().magnitude() * BigUint::from(modulus);
    mask_with_kernel(digits, &PhaseKernel::new(v.numer(), &den))
}

/// Mask over big digits and a big modulus.
pub fn mask_ft_big(modulus: &BigUint, digits: &[BigInt], xi: &Freq) -> Complex64 {
    let v = xi.value();
    let den = v.denom().magnitude() * modulus;
    let kernel = PhaseKernel::new(v.numer(), &den);
    let mut acc = Complex64::new(0.0, 0.0);
    for b in digits {
        acc += kernel.phase_big(b);
    }
    acc / digits.len() as f64
}

/// Certified ν̂(ξ) for a tower or tail: Π_n mask(N_n, B_n, ξ / (N_1⋯N_{n−1})).
pub fn moran_ft<S: StageSource + ?Sized>(src: &S, xi: &Freq, cfg: &EvalConfig) -> Result<CertifiedComplex> {
    if xi.is_exact() && xi.value().is_zero() {
        return Ok(CertifiedComplex::new(Complex64::new(1.0, 0.0), 0.0));
    }
    let abs_xi = xi.abs_upper();
    let slack_term = if xi.slack() > 0.0 {
        core::f64::consts::TAU * src.tail_support(0) * xi.slack() * (1.0 + 1e-12)
    } else {
        0.0
    };
    let num = xi.value().numer();
    let mut den = xi.value().denom().magnitude().clone();
    let mut value = Complex64::new(1.0, 0.0);
    let mut p = 1.0f64;
    let mut k = 0usize;
    let finite = src.depth();
    let tail = loop {
        if finite == Some(k) {
            break 0.0;
        }
        let c = src.tail_support(k);
        let tail = libm::expm1(core::f64::consts::TAU * c * abs_xi / p) * (1.0 + 1e-12);
        let rounding = ROUNDING_PER_STAGE * (k + 1) as f64;
        if tail + rounding + slack_term <= cfg.tol {
            break tail;
        }
        if k >= cfg.depth_cap {
            return Err(MoranError::TolUnreachable { tol: cfg.tol, depth_cap: cfg.depth_cap });
        }
        let st = src.stage(k + 1)?;
        den *= BigUint::from(st.modulus);
        value *= mask_with_kernel(&st.digits, &PhaseKernel::new(num, &den));
        p *= st.modulus as f64;
        k += 1;
    };
    if finite.is_some() && slack_term > cfg.tol {
        return Err(MoranError::TolUnreachable { tol: cfg.tol, depth_cap: cfg.depth_cap });
    }
    let radius = tail + ROUNDING_PER_STAGE * (k + 1) as f64 + slack_term;
    Ok(CertifiedComplex::new(value, radius))
}

/// Π_{n≤depth} mask(N_n, B_n, ξ/(N_1⋯N_{n−1})) without tail control.
pub fn truncated_product<S: StageSource + ?Sized>(src: &S, xi: &Freq, depth: usize) -> Result<Complex64> {
    let num = xi.value().numer();
    let mut den = xi.value().denom().magnitude().clone();
    let mut value = Complex64::new(1.0, 0.0);
    for n in 1..=depth {
        let st = src.stage(n)?;
        den *= BigUint::from(st.modulus);
        value *= mask_with_kernel(&st.digits, &PhaseKernel::new(num, &den));
    }
    Ok(value)
}

/// Number of stages `moran_ft` multiplies before the tail radius drops below `cfg.tol`.
pub fn certified_depth<S: StageSource + ?Sized>(src: &S, xi: &Freq, cfg: &EvalConfig) -> Result<usize> {
    let abs_xi = xi.abs_upper();
    let mut p = 1.0f64;
    for k in 0..=cfg.depth_cap {
        if src.depth() == Some(k) {
            return Ok(k);
        }
        let tail = libm::expm1(core::f64::consts::TAU * src.tail_support(k) * abs_xi / p) * (1.0 + 1e-12);
        if tail + ROUNDING_PER_STAGE * (k + 1) as f64 <= cfg.tol {
            return Ok(k);
        }
        p *= src.stage(k + 1)?.modulus as f64;
    }
    Err(MoranError::TolUnreachable { tol: cfg.tol, depth_cap: cfg.depth_cap })
}

/// Measures with a certified Fourier transform.
pub trait FourierTransform {
    fn fourier(&self, xi: &Freq, cfg: &EvalConfig) -> Result<CertifiedComplex>;
    /// Support lies in [−bound, bound].
    fn support_bound(&self) -> f64;
}

impl FourierTransform for MoranSpec {
    fn fourier(&self, xi: &Freq, cfg: &EvalConfig) -> Result<CertifiedComplex> {
        moran_ft(self, xi, cfg)
    }

    fn support_bound(&self) -> f64 {
        self.tail_support(0)
    }
}

impl FourierTransform for TailSpec<'_> {
    fn fourier(&self, xi: &Freq, cfg: &EvalConfig) -> Result<CertifiedComplex> {
        moran_ft(self, xi, cfg)
    }

    fn support_bound(&self) -> f64 {
        self.tail_support(0)
    }
}

/// A weighted point.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub location: BigRational,
    pub weight: f64,
}

/// A finite measure Σ w_a δ_{x_a} with rational locations.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    /// Sorts, merges coincident locations, rejects negative weights.
    pub fn new(mut atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(MoranError::EmptySet);
        }
        if let Some(a) = atoms.iter().find(|a| !(a.weight >= 0.0) || !a.weight.is_finite()) {
            return Err(MoranError::InvalidParams(format!("bad weight {}", a.weight)));
        }
        atoms.sort_by(|a, b| a.location.cmp(&b.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.location == a.location => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        Ok(Self { atoms: merged })
    }

    /// δ_A = (1/#A) Σ_{a∈A} δ_a.
    pub fn uniform(points: &[BigRational]) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        Self::new(points.iter().map(|p| Atom { location: p.clone(), weight: w }).collect())
    }

    /// ½(δ_0 + δ_1).
    pub fn rho() -> Self {
        Self::uniform(&[BigRational::zero(), BigRational::one()]).expect("two atoms")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= 1e-12
    }

    /// Mass of the open interval (lo, hi).
    pub fn mass_in_open(&self, lo: f64, hi: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| {
                let x = ratio_to_f64(&a.location);
                x > lo && x < hi
            })
            .map(|a| a.weight)
            .sum()
    }
}

impl FourierTransform for DiscreteMeasure {
    fn fourier(&self, xi: &Freq, _cfg: &EvalConfig) -> Result<CertifiedComplex> {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut lip = 0.0;
        for a in &self.atoms {
            let t = &a.location * xi.value();
            acc += turn_exp(t.numer(), t.denom().magnitude()) * a.weight;
            lip += a.weight * ratio_to_f64(&a.location.abs());
        }
        let radius = 4.0 * f64::EPSILON * (self.atoms.len() as f64 + 1.0)
            + core::f64::consts::TAU * lip * xi.slack() * (1.0 + 1e-12);
        Ok(CertifiedComplex::new(acc, radius))
    }

    fn support_bound(&self) -> f64 {
        self.atoms.iter().map(|a| ratio_to_f64(&a.location.abs())).fold(0.0, f64::max)
    }
}

/// The finite convolution of the first n stages: atoms Σ_{j≤n} b_j / (N_1⋯N_j).
pub fn partial_measure<S: StageSource + ?Sized>(src: &S, n: usize, cap: usize) -> Result<DiscreteMeasure> {
    let mut nums: Vec<BigInt> = vec![BigInt::zero()];
    let mut den = BigInt::one();
    let mut weight = 1.0f64;
    for j in 1..=n {
        let st = src.stage(j)?;
        let count = nums.len().saturating_mul(st.size());
        if count > cap {
            return Err(MoranError::AtomExplosion { count, cap });
        }
        let m = BigInt::from(st.modulus);
        let mut next = Vec::with_capacity(count);
        for x in &nums {
            let base = x * &m;
            for &b in &st.digits {
                next.push(&base + BigInt::from(b));
            }
        }
        nums = next;
        den *= m;
        weight /= st.size() as f64;
    }
    let atoms = nums
        .into_iter()
        .map(|x| Atom { location: BigRational::new(x, den.clone()), weight })
        .collect();
    DiscreteMeasure::new(atoms)
}

/// Result of the mask-chain evaluation of ν̂_{>n}(1/2 + k).
#[derive(Clone, Debug, PartialEq)]
pub struct MaskChain {
    /// Mixed-radix digits ℓ_t of k in bases N_{n+1}, N_{n+2}, …
    pub digits: Vec<u64>,
    /// mask(N_{n+t}, B_{n+t}, ξ_t + ℓ_t).
    pub factors: Vec<Complex64>,
    /// ξ_{r+1}.
    pub remainder: Freq,
}

impl MaskChain {
    pub fn product(&self) -> Complex64 {
        self.factors.iter().fold(Complex64::new(1.0, 0.0), |a, f| a * f)
    }

    /// Product times the certified tail ν̂_{>n+r}(ξ_{r+1}).
    pub fn value(&self, tail: &TailSpec<'_>, cfg: &EvalConfig) -> Result<CertifiedComplex> {
        let rest = TailSpec::new(tail.base, tail.skip + self.factors.len());
        let t = moran_ft(&rest, &self.remainder, cfg)?;
        let p = self.product();
        let r = t.radius * p.norm() + 4.0 * f64::EPSILON * self.factors.len() as f64;
        Ok(CertifiedComplex::new(p * t.value, r))
    }
}

/// Splits 1/2 + k into r mask factors along the tail stages.
pub fn mask_chain_eval(tail: &TailSpec<'_>, k: &BigUint, r: usize) -> Result<MaskChain> {
    let mut rest = k.clone();
    let mut xi = Freq::ratio(1, 2);
    let mut digits = Vec::with_capacity(r);
    let mut factors = Vec::with_capacity(r);
    for t in 1..=r {
        let st = tail.stage(t)?;
        let (q, l) = rest.div_rem(&BigUint::from(st.modulus));
        let l = l.to_u64().expect("digit below modulus");
        let arg = xi.add_int(&BigInt::from(l));
        factors.push(mask_ft(st.modulus, &st.digits, &arg));
        xi = arg.div_big(&BigUint::from(st.modulus));
        digits.push(l);
        rest = q;
    }
    if !rest.is_zero() {
        return Err(MoranError::RadixOverflow { k: format!("{k}"), digits: r });
    }
    Ok(MaskChain { digits, factors, remainder: xi })
}

/// Converts a non-negative big integer into a signed one.
pub fn to_signed(x: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x.clone())
}
