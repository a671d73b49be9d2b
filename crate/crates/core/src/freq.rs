//! Frequencies and exact phase reduction.

use core::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A frequency: an exact rational plus a bound on its distance to the intended real value.
///
/// `Freq::from_f64` stores the binary64 number exactly and records half an ulp as slack.
#[derive(Clone, Debug, PartialEq)]
pub struct Freq {
    value: BigRational,
    slack: f64,
}

impl Freq {
    pub fn integer(n: i64) -> Self {
        Self::exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn big_ratio(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Self::exact(BigRational::new(num, den))
    }

    pub fn exact(value: BigRational) -> Self {
        Self { value, slack: 0.0 }
    }

    /// Panics on non-finite input.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite frequency");
        let value = BigRational::from_float(x).unwrap_or_else(BigRational::zero);
        let slack = if x == 0.0 { 0.0 } else { half_ulp(x) };
        Self { value, slack }
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn is_exact(&self) -> bool {
        self.slack == 0.0
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.value)
    }

    /// Upper bound on |ξ| including slack.
    pub fn abs_upper(&self) -> f64 {
        let a = ratio_to_f64(&self.value.abs());
        (a + self.slack) * (1.0 + 4.0 * f64::EPSILON)
    }

    pub fn add(&self, other: &Freq) -> Freq {
        Freq { value: &self.value + &other.value, slack: self.slack + other.slack }
    }

    pub fn sub(&self, other: &Freq) -> Freq {
        Freq { value: &self.value - &other.value, slack: self.slack + other.slack }
    }

    pub fn add_int(&self, k: &BigInt) -> Freq {
        Freq {
            value: &self.value + BigRational::from_integer(k.clone()),
            slack: self.slack,
        }
    }

    pub fn add_i64(&self, k: i64) -> Freq {
        self.add_int(&BigInt::from(k))
    }

    /// ξ / d.
    pub fn div_big(&self, d: &BigUint) -> Freq {
        let d = BigInt::from_biguint(Sign::Plus, d.clone());
        let df = d.to_f64().unwrap_or(f64::INFINITY);
        Freq { value: &self.value / BigRational::from_integer(d), slack: self.slack / df }
    }

    /// Fractional part in [0, 1).
    pub fn frac(&self) -> Freq {
        let fl = self.value.floor();
        Freq { value: &self.value - fl, slack: self.slack }
    }
}

impl fmt::Display for Freq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value.denom().is_one() {
            write!(f, "{}", self.value.numer())?;
        } else {
            write!(f, "{}/{}", self.value.numer(), self.value.denom())?;
        }
        if self.slack > 0.0 {
            write!(f, " (±{:e})", self.slack)?;
        }
        Ok(())
    }
}

fn half_ulp(x: f64) -> f64 {
    let a = libm::fabs(x);
    let next = f64::from_bits(a.to_bits() + 1);
    (next - a) * 0.5
}

/// Rational to nearest-ish f64 without overflow for huge numerators and denominators.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    big_ratio_to_f64(r.numer(), r.denom())
}

pub fn big_ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    if nb <= 1000 && db <= 1000 {
        if let (Some(n), Some(d)) = (num.to_f64(), den.to_f64()) {
            if n.is_finite() && d.is_finite() && d != 0.0 {
                return n / d;
            }
        }
    }
    // scale so the quotient carries about 64 significant bits
    let shift = db - nb + 64;
    let q = if shift >= 0 { (num << (shift as usize)) / den } else { num / (den << ((-shift) as usize)) };
    let qf = q.to_f64().unwrap_or(0.0);
    libm::ldexp(qf, -(shift as i32))
}

/// e^{-2πi t} for t = r / m with 0 ≤ r < m. Exact at multiples of 1/4.
fn turn_reduced_i128(r: i128, m: i128) -> Complex64 {
    if (4 * r) % m == 0 {
        return quarter((4 * r / m) as u8);
    }
    let centered = if 2 * r > m { r - m } else { r };
    let t = centered as f64 / m as f64;
    cis_neg(t)
}

fn quarter(q: u8) -> Complex64 {
    match q & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// e^{-2πi t} for |t| ≤ 1/2.
fn cis_neg(t: f64) -> Complex64 {
    let (s, c) = libm::sincos(core::f64::consts::TAU * t);
    Complex64::new(c, -s)
}

/// e^{-2πi num/den} with exact reduction of num mod den.
pub fn turn_exp(num: &BigInt, den: &BigUint) -> Complex64 {
    let den_i = BigInt::from_biguint(Sign::Plus, den.clone());
    let r = num.mod_floor(&den_i);
    if let (Some(r), Some(m)) = (r.to_i128(), den_i.to_i128()) {
        if m < (1i128 << 124) {
            return turn_reduced_i128(r, m);
        }
    }
    let four_r: BigInt = &r << 2usize;
    if (&four_r % &den_i).is_zero() {
        return quarter((four_r / &den_i).to_u8().unwrap_or(0));
    }
    let centered = if (&r << 1usize) > den_i { r - &den_i } else { r };
    cis_neg(big_ratio_to_f64(&centered, &den_i))
}

/// e^{-2πi ξ} evaluated at the stored rational.
pub fn turn_exp_freq(xi: &Freq) -> Complex64 {
    let (n, d) = (xi.value.numer(), xi.value.denom());
    turn_exp(n, d.magnitude())
}

/// Precomputed exact phase evaluator for e^{-2πi b p / m}, b ranging over digits.
pub(crate) enum PhaseKernel {
    Small { p: i128, m: i128 },
    Big { p: BigInt, m: BigUint },
}

impl PhaseKernel {
    /// Phases b·num/den for the given numerator and denominator.
    pub(crate) fn new(num: &BigInt, den: &BigUint) -> Self {
        let den_i = BigInt::from_biguint(Sign::Plus, den.clone());
        let p = num.mod_floor(&den_i);
        match (p.to_i128(), den_i.to_i128()) {
            (Some(p), Some(m)) if m < (1i128 << 62) => PhaseKernel::Small { p, m },
            _ => PhaseKernel::Big { p, m: den.clone() },
        }
    }

    pub(crate) fn phase_u64(&self, b: u64) -> Complex64 {
        match self {
            PhaseKernel::Small { p, m } => {
                let r = ((b as i128 % m) * p).rem_euclid(*m);
                turn_reduced_i128(r, *m)
            }
            PhaseKernel::Big { p, m } => turn_exp(&(p * BigInt::from(b)), m),
        }
    }

    pub(crate) fn phase_big(&self, b: &BigInt) -> Complex64 {
        match self {
            PhaseKernel::Small { p, m } => {
                let bm = b.mod_floor(&BigInt::from(*m)).to_i128().unwrap_or(0);
                turn_reduced_i128((bm * p).rem_euclid(*m), *m)
            }
            PhaseKernel::Big { p, m } => turn_exp(&(p * b), m),
        }
    }
}
