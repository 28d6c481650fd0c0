//! Number types shared by the exact and floating-point code paths.
//!
//! Most of the crate is generic over [`Scalar`] so the same closed forms can
//! be evaluated over exact rationals, over `f64`, or over the quadratic field
//! `Q(sqrt 2)` ([`Surd2`]) when a landmark point involves `sqrt 2`.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Slack allowed when two values should agree identically. Zero for
    /// exact types.
    fn tolerance() -> Self {
        Self::zero()
    }

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn magnitude(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn below_zero(&self) -> bool {
        *self < Self::zero()
    }

    fn powu(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for Rational {
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn magnitude(&self) -> Self {
        Signed::abs(self)
    }

    fn below_zero(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tolerance() -> Self {
        1e-12
    }

    fn magnitude(&self) -> Self {
        f64::abs(*self)
    }
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::from_ratio(num, den)
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"num/den"`, an integer, or a decimal literal (with optional
/// exponent) into an exact rational. Decimals are read digit-for-digit, so
/// `"0.42"` is exactly `21/50`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|e| Error::Parse(format!("`{s}`: {e}")))?;
        let den = BigInt::from_str(den.trim()).map_err(|e| Error::Parse(format!("`{s}`: {e}")))?;
        if den.is_zero() {
            return Err(Error::Parse(format!("`{s}`: zero denominator")));
        }
        return Ok(Rational::new(num, den));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..]
                .parse()
                .map_err(|e| Error::Parse(format!("`{s}`: {e}")))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(Error::Parse(format!("`{s}` is not a number")));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(
        BigInt::from_str(if all_digits.is_empty() {
            "0"
        } else {
            &all_digits
        })
        .map_err(|e| Error::Parse(format!("`{s}`: {e}")))?,
    );
    let shift = exponent - frac_part.len() as i64;
    let ten = Rational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num_traits::pow(ten, shift as usize);
    } else {
        value /= num_traits::pow(ten, (-shift) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
pub fn rational_from_f64(x: f64, max_den: u64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Parse(format!("{x} is not finite")));
    }
    let max_den = max_den.max(1);
    let negative = x < 0.0;
    let target = x.abs();

    let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    let mut rem = target;
    loop {
        let a = rem.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let q2 = q0 + a * q1;
        if q2 > max_den as u128 {
            // largest semiconvergent that still fits
            let k = (max_den as u128 - q0) / q1.max(1);
            let (ps, qs) = (p0 + k * p1, q0 + k * q1);
            if q1 > 0 {
                let err_conv = (p1 as f64 / q1 as f64 - target).abs();
                let err_semi = (ps as f64 / qs as f64 - target).abs();
                if qs > 0 && err_semi < err_conv {
                    p1 = ps;
                    q1 = qs;
                }
            } else {
                p1 = ps;
                q1 = qs;
            }
            break;
        }
        let p2 = p0 + a * p1;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = rem - rem.floor();
        if frac < 1e-300 || (p1 as f64 / q1 as f64 - target).abs() == 0.0 {
            break;
        }
        rem = 1.0 / frac;
    }
    let value = Rational::new(BigInt::from(p1), BigInt::from(q1.max(1)));
    Ok(if negative { -value } else { value })
}

/// Formats an exact rational as `"num/den"` (or `"num"` for integers).
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

/// An element `a + b*sqrt(2)` of the quadratic field `Q(sqrt 2)`.
///
/// Ordering is exact: the sign of `a + b*sqrt 2` is decided by comparing
/// `a^2` with `2 b^2` when the parts disagree in sign.
#[derive(Clone, PartialEq, Eq)]
pub struct Surd2 {
    pub rational: Rational,
    pub sqrt2: Rational,
}

impl Surd2 {
    pub fn new(rational: Rational, sqrt2: Rational) -> Self {
        Self { rational, sqrt2 }
    }

    pub fn sqrt2() -> Self {
        Self::new(Rational::zero(), Rational::one())
    }

    pub fn from_rational(r: Rational) -> Self {
        Self::new(r, Rational::zero())
    }

    pub fn signum(&self) -> Ordering {
        let a = &self.rational;
        let b = &self.sqrt2;
        let za = a.cmp(&Rational::zero());
        let zb = b.cmp(&Rational::zero());
        match (za, zb) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (sa, sb) if sa == sb => sa,
            (sa, _) => {
                // parts of opposite sign: compare magnitudes a^2 vs 2 b^2
                let lhs = a * a;
                let rhs = b * b * int(2);
                match lhs.cmp(&rhs) {
                    Ordering::Equal => Ordering::Equal,
                    Ordering::Greater => sa,
                    Ordering::Less => sa.reverse(),
                }
            }
        }
    }
}

impl Debug for Surd2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*sqrt2", self.rational, self.sqrt2)
    }
}

impl Display for Surd2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Debug::fmt(self, f)
    }
}

impl PartialOrd for Surd2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some((self.clone() - other.clone()).signum())
    }
}

impl Add for Surd2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.rational + rhs.rational, self.sqrt2 + rhs.sqrt2)
    }
}

impl Sub for Surd2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.rational - rhs.rational, self.sqrt2 - rhs.sqrt2)
    }
}

impl Mul for Surd2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let rational = &self.rational * &rhs.rational + &self.sqrt2 * &rhs.sqrt2 * int(2);
        let sqrt2 = &self.rational * &rhs.sqrt2 + &self.sqrt2 * &rhs.rational;
        Self::new(rational, sqrt2)
    }
}

impl Neg for Surd2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.rational, -self.sqrt2)
    }
}

impl Zero for Surd2 {
    fn zero() -> Self {
        Self::from_rational(Rational::zero())
    }

    fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.sqrt2.is_zero()
    }
}

impl One for Surd2 {
    fn one() -> Self {
        Self::from_rational(Rational::one())
    }
}

impl Scalar for Surd2 {
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(rat(num, den))
    }

    fn to_f64(&self) -> f64 {
        Scalar::to_f64(&self.rational) + Scalar::to_f64(&self.sqrt2) * std::f64::consts::SQRT_2
    }
}

/// Least common multiple of the denominators of `values`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}
