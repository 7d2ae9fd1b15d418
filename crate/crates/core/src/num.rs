//! Numeric traits shared across the crate.
//!
//! Action values are generic over [`Scalar`] (`f32` or `f64`). Everything the
//! size analysis produces is an exact [`Rational`]. Closed-form ratios can also
//! be evaluated in any [`Field`], which is how charts get `f64` curves from the
//! same formulas the tests check exactly.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Float, One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational used for every size ratio.
pub type Rational = Ratio<i64>;

/// Floating point type used for action values.
pub trait Scalar: Float + Debug + Display + Default + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
}

/// The arithmetic needed to evaluate the closed-form size ratios.
pub trait Field:
    Clone
    + PartialOrd
    + Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_count(n: u64) -> Self;
    fn from_rational(r: Rational) -> Self;
}

impl Field for Rational {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i64)
    }

    fn from_rational(r: Rational) -> Self {
        r
    }
}

impl Field for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn from_rational(r: Rational) -> Self {
        rational_to_f64(r)
    }
}

pub fn rational_to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"3/10"`, `"1"` or `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Ok(r) = Rational::from_str(s) {
        return Ok(r);
    }
    // Finite decimal literal.
    let (int, frac) = s
        .split_once('.')
        .ok_or_else(|| Error::invalid("rational", s.to_string()))?;
    let neg = int.starts_with('-');
    let digits = format!("{}{}", int.trim_start_matches('-'), frac);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
        return Err(Error::invalid("rational", s.to_string()));
    }
    let numer: i64 = digits.parse().map_err(|_| Error::invalid("rational", s.to_string()))?;
    let denom = 10i64.pow(frac.len() as u32);
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Fraction of STM states staged to LTM, `0 < kappa <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Kappa(Rational);

impl Kappa {
    pub fn new(value: Rational) -> Result<Self> {
        if value <= Rational::zero() || value > Rational::one() {
            return Err(Error::invalid("kappa", format!("{value} is outside (0, 1]")));
        }
        Ok(Kappa(value))
    }

    pub fn one() -> Self {
        Kappa(Rational::one())
    }

    pub fn value(self) -> Rational {
        self.0
    }

    /// `floor(kappa * m)`.
    pub fn staged_count(self, m: usize) -> usize {
        let numer = *self.0.numer() as u128;
        let denom = *self.0.denom() as u128;
        (numer * m as u128 / denom) as usize
    }

    /// True when `kappa * t` is an integer.
    pub fn is_integral_for(self, t: u64) -> bool {
        (*self.0.numer() as u128 * t as u128).is_multiple_of(*self.0.denom() as u128)
    }
}

impl Display for Kappa {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        Display::fmt(&self.0, f)
    }
}

impl FromStr for Kappa {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kappa::new(parse_rational(s)?)
    }
}
