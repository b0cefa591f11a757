//! Weight scalars and the exact threshold arithmetic behind every merge test.
//!
//! All graph distances are integers, so every comparison of the form
//! `d <= scale * r^alpha` collapses to `d <= reach`, where `reach` is the
//! largest integer below the threshold. Exact scalars (`u64`, `BigRational`)
//! compute it with arbitrary-precision integers, so boundary cases such as
//! `d = r^(5/2)` are decided without rounding. Floating scalars compare in
//! their own precision with no epsilon.

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

/// Reaches at or above this value are reported as `REACH_CAP`. No finite graph
/// handled here has a diameter anywhere near it.
pub const REACH_CAP: u64 = 1 << 52;

/// A non-negative rational with an `f64` shadow, parsed from decimal text.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    ratio: Ratio<u64>,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        Some(Rational {
            ratio: Ratio::new(num, den),
        })
    }

    pub fn integer(k: u64) -> Self {
        Rational {
            ratio: Ratio::from_integer(k),
        }
    }

    pub fn numer(&self) -> u64 {
        *self.ratio.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.ratio.denom()
    }

    pub fn value(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn is_integer(&self) -> bool {
        self.denom() == 1
    }

    /// Parses `"2.5"`, `"5/2"`, `"3"` or `"1e-1"`-free decimals exactly.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            return Rational::new(n.trim().parse().ok()?, d.trim().parse().ok()?);
        }
        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let den = 10u64.checked_pow(frac.len() as u32)?;
        let int_part: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let frac_part: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
        let num = int_part.checked_mul(den)?.checked_add(frac_part)?;
        Rational::new(num, den)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}", self.value())
        }
    }
}

/// The expansion exponent `alpha >= 1`, held as an exact rational.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Exponent(Rational);

impl Exponent {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        let r = Rational::new(num, den)?;
        (r.numer() >= r.denom()).then_some(Exponent(r))
    }

    pub fn integer(k: u64) -> Option<Self> {
        Exponent::new(k, 1)
    }

    pub fn one() -> Self {
        Exponent(Rational::integer(1))
    }

    pub fn parse(s: &str) -> Option<Self> {
        let r = Rational::parse(s)?;
        Exponent::new(r.numer(), r.denom())
    }

    pub fn rational(&self) -> Rational {
        self.0
    }

    pub fn value(&self) -> f64 {
        self.0.value()
    }

    pub fn is_one(&self) -> bool {
        self.0.numer() == self.0.denom()
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl serde::Serialize for Exponent {
    /// Decimal when that round-trips exactly, otherwise `"p/q"`.
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text = self.to_string();
        if Exponent::parse(&text) == Some(*self) {
            s.serialize_str(&text)
        } else {
            s.serialize_str(&format!("{}/{}", self.0.numer(), self.0.denom()))
        }
    }
}

impl<'de> serde::Deserialize<'de> for Exponent {
    /// Accepts `"p/q"`, a decimal string, or a JSON number.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        let text = match Repr::deserialize(d)? {
            Repr::Text(t) => t,
            Repr::Number(x) => x.to_string(),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Exponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Exponent::parse(s).ok_or_else(|| format!("invalid expansion exponent {s:?} (need a decimal or p/q >= 1)"))
    }
}

/// Scalar type carried by vertex and cluster weights.
///
/// Implemented for `u64` and `BigRational` (exact) and for `f32`/`f64`
/// (floating, compared without epsilon).
pub trait Weight:
    Clone + fmt::Debug + PartialOrd + Zero + for<'a> AddAssign<&'a Self> + Send + Sync + 'static
{
    /// Largest integer `d` with `d <= scale * self^alpha`, capped at [`REACH_CAP`].
    fn scaled_reach(&self, alpha: &Exponent, scale: Rational) -> u64;

    /// Largest integer `d` with `d <= self^alpha`.
    fn reach(&self, alpha: &Exponent) -> u64 {
        self.scaled_reach(alpha, Rational::integer(1))
    }

    fn to_f64(&self) -> f64;

    /// Builds a weight from an integer count (degrees, 0/1 indicators).
    fn from_count(k: u64) -> Self;

    /// Weights must be finite and non-negative.
    fn is_valid(&self) -> bool;

    fn parse_decimal(s: &str) -> Option<Self>;

    /// Text used by the `wgraph` writer; `parse_decimal` reads it back exactly.
    fn to_decimal(&self) -> String;

    fn to_json(&self) -> serde_json::Value;

    /// Whether comparisons are carried out in exact arithmetic.
    const EXACT: bool;
}

/// `max d >= 0` with `(d * ed)^q * b^p <= en^q * a^p`, i.e. `d <= (en/ed) (a/b)^(p/q)`.
fn exact_reach(a: &BigUint, b: &BigUint, alpha: &Exponent, scale: Rational, approx: f64) -> u64 {
    if a.is_zero() || scale.numer() == 0 {
        return 0;
    }
    let p = alpha.rational().numer();
    let q = alpha.rational().denom();
    let en = BigUint::from(scale.numer());
    let ed = BigUint::from(scale.denom());
    let rhs = Pow::pow(&en, q) * Pow::pow(a, p);
    let bp = Pow::pow(b, p);
    let fits = |d: u64| -> bool {
        let lhs = Pow::pow(&(BigUint::from(d) * &ed), q) * &bp;
        lhs <= rhs
    };
    if !approx.is_finite() || approx >= REACH_CAP as f64 {
        if fits(REACH_CAP) {
            return REACH_CAP;
        }
    }
    let mut d = if approx.is_finite() && approx > 0.0 {
        (approx.floor() as u64).min(REACH_CAP)
    } else {
        0
    };
    while d > 0 && !fits(d) {
        d -= 1;
    }
    while d < REACH_CAP && fits(d + 1) {
        d += 1;
    }
    d
}

/// `u128` version of [`exact_reach`] for integer weights; `None` on overflow.
fn small_exact_reach(r: u64, alpha: &Exponent, scale: Rational, approx: f64) -> Option<u64> {
    let p = u32::try_from(alpha.rational().numer()).ok()?;
    let q = u32::try_from(alpha.rational().denom()).ok()?;
    if !approx.is_finite() || approx > 1e15 {
        return None;
    }
    let rhs = (scale.numer() as u128).checked_pow(q)?.checked_mul((r as u128).checked_pow(p)?)?;
    let ed = scale.denom() as u128;
    let fits = |d: u64| -> Option<bool> { Some((d as u128).checked_mul(ed)?.checked_pow(q)? <= rhs) };
    let mut d = approx.max(0.0).floor() as u64;
    while d > 0 && !fits(d)? {
        d -= 1;
    }
    while fits(d + 1)? {
        d += 1;
    }
    Some(d)
}

fn float_reach(x: f64) -> u64 {
    if x.is_nan() || x < 1.0 {
        0
    } else if x >= REACH_CAP as f64 {
        REACH_CAP
    } else {
        x.floor() as u64
    }
}

impl Weight for u64 {
    const EXACT: bool = true;

    fn scaled_reach(&self, alpha: &Exponent, scale: Rational) -> u64 {
        if *self == 0 {
            return 0;
        }
        if alpha.rational().is_integer() && scale.is_integer() {
            let p = alpha.rational().numer();
            if let Ok(p32) = u32::try_from(p) {
                if let Some(v) = (*self as u128).checked_pow(p32) {
                    let v = v.saturating_mul(scale.numer() as u128);
                    return v.min(REACH_CAP as u128) as u64;
                }
            }
            return REACH_CAP;
        }
        let approx = scale.value() * (*self as f64).powf(alpha.value());
        if let Some(d) = small_exact_reach(*self, alpha, scale, approx) {
            return d;
        }
        exact_reach(&BigUint::from(*self), &BigUint::one(), alpha, scale, approx)
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn from_count(k: u64) -> Self {
        k
    }

    fn is_valid(&self) -> bool {
        true
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }

    fn to_decimal(&self) -> String {
        self.to_string()
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::from(*self)
    }
}

impl Weight for BigRational {
    const EXACT: bool = true;

    fn scaled_reach(&self, alpha: &Exponent, scale: Rational) -> u64 {
        if !self.is_positive() {
            return 0;
        }
        let a = self.numer().magnitude();
        let b = self.denom().magnitude();
        let approx = scale.value() * num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::INFINITY).powf(alpha.value());
        exact_reach(a, b, alpha, scale, approx)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::INFINITY)
    }

    fn from_count(k: u64) -> Self {
        BigRational::from_integer(BigInt::from(k))
    }

    fn is_valid(&self) -> bool {
        !self.is_negative()
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            return Some(BigRational::new(n, d));
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if (int.is_empty() && frac.is_empty())
            || !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return None;
        }
        let digits = format!("{int}{frac}");
        let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
        let den = Pow::pow(&BigInt::from(10u32), frac.len());
        let r = BigRational::new(num, den);
        Some(if neg { -r } else { r })
    }

    fn to_decimal(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            // Terminating decimals are written as such, everything else as p/q.
            let mut den = self.denom().magnitude().clone();
            let two = BigUint::from(2u32);
            let five = BigUint::from(5u32);
            while (&den % &two).is_zero() {
                den /= &two;
            }
            while (&den % &five).is_zero() {
                den /= &five;
            }
            if !den.is_one() {
                return format!("{}/{}", self.numer(), self.denom());
            }
            let mut digits = 0usize;
            let mut scaled = self.clone();
            while !scaled.is_integer() {
                scaled *= BigRational::from_integer(BigInt::from(10u32));
                digits += 1;
            }
            let s = scaled.numer().magnitude().to_string();
            let s = format!("{:0>width$}", s, width = digits + 1);
            let (i, f) = s.split_at(s.len() - digits);
            let sign = if self.is_negative() { "-" } else { "" };
            format!("{sign}{i}.{f}")
        }
    }

    fn to_json(&self) -> serde_json::Value {
        if self.is_integer() {
            if let Some(v) = self.numer().to_u64() {
                return serde_json::Value::from(v);
            }
        }
        serde_json::Value::from(self.to_decimal())
    }
}

macro_rules! float_weight {
    ($t:ty) => {
        impl Weight for $t {
            const EXACT: bool = false;

            fn scaled_reach(&self, alpha: &Exponent, scale: Rational) -> u64 {
                if !(*self > 0.0) {
                    return 0;
                }
                let x = num_traits::Float::powf(*self, alpha.value() as $t) * scale.value() as $t;
                float_reach(x as f64)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn from_count(k: u64) -> Self {
                k as $t
            }

            fn is_valid(&self) -> bool {
                self.is_finite() && *self >= 0.0
            }

            fn parse_decimal(s: &str) -> Option<Self> {
                s.trim().parse().ok()
            }

            fn to_decimal(&self) -> String {
                // Rust's shortest round-trip formatting.
                format!("{:?}", self)
            }

            fn to_json(&self) -> serde_json::Value {
                serde_json::Value::from(*self as f64)
            }
        }
    };
}

float_weight!(f32);
float_weight!(f64);

/// Sum of weights, used for cluster totals.
pub fn total<'a, W: Weight>(ws: impl IntoIterator<Item = &'a W>) -> W {
    let mut acc = W::zero();
    for w in ws {
        acc += w;
    }
    acc
}

/// `true` when integer `d` satisfies `d <= scale * r^alpha`.
pub fn within<W: Weight>(d: u64, r: &W, alpha: &Exponent, scale: Rational) -> bool {
    d <= r.scaled_reach(alpha, scale)
}
