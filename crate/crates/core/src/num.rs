//! Exact arithmetic primitives.
//!
//! Every amount inside the engine is an arbitrary-precision rational. Values
//! are only quantized when they leave the engine (JSON snapshots, CSV rows,
//! printed quotes), always at [`DECIMAL_PLACES`] fractional digits with
//! round-half-even.

use std::fmt;
use std::ops::{Add, Div, Mul};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Signed exact rational.
pub type Rational = num_rational::BigRational;

/// Fractional digits used for every decimal rendering at the interfaces.
pub const DECIMAL_PLACES: u32 = 18;

/// Builds `num / den` from machine integers. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `10^-exp` as an exact rational.
pub fn pow10_neg(exp: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(10u32).pow(exp))
}

/// Parses `"12"`, `"-0.25"`, `"1e-9"`, `"3/7"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("invalid number `{s}`"));
    let t = s.trim();
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = t[i + 1..].parse().map_err(|_| bad())?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let mut value = Rational::from_integer(BigInt::from_str(&digits).map_err(|_| bad())?);
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10u32);
    if scale >= 0 {
        value *= Rational::from_integer(ten.pow(scale as u32));
    } else {
        value /= Rational::from_integer(ten.pow(scale.unsigned_abs()));
    }
    Ok(if neg { -value } else { value })
}

/// Renders `value` with exactly `places` fractional digits, round-half-even.
pub fn format_decimal(value: &Rational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = value.abs() * Rational::from_integer(scale.clone());
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let twice = &r * 2u32;
    let mut q = q;
    match twice.cmp(scaled.denom()) {
        std::cmp::Ordering::Greater => q += 1u32,
        std::cmp::Ordering::Equal if q.is_odd() => q += 1u32,
        _ => {}
    }
    let (int_part, frac_part) = q.div_rem(&scale);
    let sign = if value.is_negative() && !q.is_zero() { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{int_part}");
    }
    let frac = frac_part.to_string();
    format!("{sign}{int_part}.{frac:0>width$}", width = places as usize)
}

/// Interface rendering at [`DECIMAL_PLACES`].
pub fn to_decimal(value: &Rational) -> String {
    format_decimal(value, DECIMAL_PLACES)
}

/// Lossy conversion for logging and summary statistics only.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact nonnegative amount of a token, of base currency, or of LP shares.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Quantity(Rational);

impl Quantity {
    pub fn new(value: Rational) -> Result<Self> {
        if value.is_negative() {
            return Err(Error::NegativeQuantity(to_decimal(&value)));
        }
        Ok(Self(value))
    }

    pub fn zero() -> Self {
        Self(Rational::zero())
    }

    pub fn from_int(n: u64) -> Self {
        Self(Rational::from_integer(BigInt::from(n)))
    }

    /// `num / den`. Panics on a zero denominator.
    pub fn from_ratio(num: u64, den: u64) -> Self {
        Self(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(parse_rational(s)?)
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn checked_sub(&self, other: &Quantity) -> Option<Quantity> {
        let d = &self.0 - &other.0;
        (!d.is_negative()).then_some(Quantity(d))
    }

    /// Multiplication by a nonnegative rational (rates, ratios, prices).
    pub fn scale(&self, factor: &Rational) -> Result<Quantity> {
        Quantity::new(&self.0 * factor)
    }

    pub fn to_decimal(&self) -> String {
        to_decimal(&self.0)
    }
}

impl fmt::Debug for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Quantity({})", self.0)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Quantity {
    type Output = Quantity;
    fn add(self, rhs: Quantity) -> Quantity {
        Quantity(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Quantity> for &'a Quantity {
    type Output = Quantity;
    fn add(self, rhs: &Quantity) -> Quantity {
        Quantity(&self.0 + &rhs.0)
    }
}

impl<'a> Mul<&'a Quantity> for &'a Quantity {
    type Output = Quantity;
    fn mul(self, rhs: &Quantity) -> Quantity {
        Quantity(&self.0 * &rhs.0)
    }
}

impl<'a> Div<&'a Quantity> for &'a Quantity {
    type Output = Rational;
    /// Panics when `rhs` is zero; callers check first.
    fn div(self, rhs: &Quantity) -> Rational {
        &self.0 / &rhs.0
    }
}

impl std::iter::Sum for Quantity {
    fn sum<I: Iterator<Item = Quantity>>(iter: I) -> Quantity {
        Quantity(iter.fold(Rational::zero(), |acc, q| acc + q.0))
    }
}

/// Strictly positive price in base currency per token unit.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Price(Rational);

impl Price {
    pub fn new(value: Rational) -> Result<Self> {
        if !value.is_positive() {
            return Err(Error::NonPositivePrice(to_decimal(&value)));
        }
        Ok(Self(value))
    }

    /// `num / den`. Panics unless both are positive.
    pub fn from_ratio(num: u64, den: u64) -> Self {
        Self::new(Rational::new(BigInt::from(num), BigInt::from(den)))
            .expect("price must be positive")
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(parse_rational(s)?)
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn to_decimal(&self) -> String {
        to_decimal(&self.0)
    }
}

impl fmt::Debug for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Price({})", self.0)
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Sign of a rational as -1, 0, 1.
pub fn signum(value: &Rational) -> i8 {
    match value.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}
