//! Exact number types shared by every solver in the crate.
//!
//! Two representations matter here:
//!
//! * [`Rat`], an arbitrary-precision rational. All SINR values, LP
//!   coefficients and chromatic indices are held as `Rat`; nothing in the
//!   solver pipeline ever rounds.
//! * [`Dec`], an exact base-10 decimal (`mantissa * 10^exponent`). Input
//!   files carry physical parameters and coordinates as decimal literals,
//!   and `Dec` preserves them bit-for-bit through parse/print round trips
//!   before they are promoted to `Rat` for arithmetic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::fmt;
use std::str::FromStr;

/// Arbitrary-precision integer.
pub type Int = BigInt;

/// Arbitrary-precision rational, the working type of every solver.
pub type Rat = num_rational::BigRational;

/// Errors from parsing decimal or rational literals.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseNumberError {
    #[error("empty number literal")]
    Empty,
    #[error("invalid number literal {0:?}")]
    Invalid(String),
    #[error("number literal {0:?} out of supported range")]
    OutOfRange(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Builds a rational from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(Int::from(n))
}

/// Builds the rational `num/den`. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(Int::from(num), Int::from(den))
}

/// Formats a rational as `p/q`, omitting the denominator when it is 1.
///
/// This is the canonical text form used in result files: `11/2`, `6`, `-3/4`.
pub fn format_rat(r: &Rat) -> String {
    r.to_string()
}

/// Parses the output of [`format_rat`]: `p/q`, a bare integer, or a decimal
/// literal such as `5.5`.
pub fn parse_rat(s: &str) -> Result<Rat, ParseNumberError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseNumberError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = Int::from_str(num.trim())
            .map_err(|_| ParseNumberError::Invalid(s.to_string()))?;
        let d = Int::from_str(den.trim())
            .map_err(|_| ParseNumberError::Invalid(s.to_string()))?;
        if d.is_zero() {
            return Err(ParseNumberError::ZeroDenominator(s.to_string()));
        }
        return Ok(Rat::new(n, d));
    }
    if let Ok(n) = Int::from_str(s) {
        return Ok(Rat::from_integer(n));
    }
    Dec::from_str(s).map(|d| d.to_rat())
}

/// Least common multiple of the denominators of `values`, as reduced
/// rationals. Integer entries (denominator 1, including zero) do not affect
/// the result. Errors on an empty slice: an LCM of nothing is undefined and
/// the callers that build schedules from LP supports must never see it.
pub fn lcm_of_denominators(values: &[Rat]) -> Result<Int, EmptyLcmError> {
    if values.is_empty() {
        return Err(EmptyLcmError);
    }
    let mut acc = Int::one();
    for v in values {
        acc = acc.lcm(v.denom());
    }
    Ok(acc)
}

/// Error from [`lcm_of_denominators`] on an empty input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("lcm of denominators over an empty set is undefined")]
pub struct EmptyLcmError;

/// An exact base-10 decimal: `mantissa * 10^exponent`.
///
/// The representation is normalized: the mantissa has no trailing zero
/// digits, and zero is stored as `0 * 10^0`. Two `Dec`s are equal exactly
/// when they denote the same real number, and `to_string` followed by
/// `from_str` reproduces the value exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dec {
    mant: i128,
    exp: i32,
}

const DEC_MAX_EXP: i32 = 64;

impl Dec {
    pub const ZERO: Dec = Dec { mant: 0, exp: 0 };

    pub fn new(mant: i128, exp: i32) -> Dec {
        let mut d = Dec { mant, exp };
        d.normalize();
        d
    }

    fn normalize(&mut self) {
        if self.mant == 0 {
            self.exp = 0;
            return;
        }
        while self.mant % 10 == 0 {
            self.mant /= 10;
            self.exp += 1;
        }
    }

    pub fn from_int(n: i64) -> Dec {
        Dec::new(n as i128, 0)
    }

    /// Reads a length in micrometers into a `Dec` denoting meters.
    pub fn from_micrometers(um: i128) -> Dec {
        Dec::new(um, -6)
    }

    /// `self · 10^k`, exact; converts between metric prefixes.
    pub fn scale_pow10(&self, k: i32) -> Dec {
        Dec::new(self.mant, self.exp + k)
    }

    /// The value in micrometers, when it is an exact micrometer count.
    pub fn to_micrometers(&self) -> Option<i128> {
        let shift = self.exp + 6;
        if shift < 0 {
            return None;
        }
        let mut v = self.mant;
        for _ in 0..shift {
            v = v.checked_mul(10)?;
        }
        Some(v)
    }

    pub fn is_zero(&self) -> bool {
        self.mant == 0
    }

    pub fn is_positive(&self) -> bool {
        self.mant > 0
    }

    /// The value as a rational.
    pub fn to_rat(&self) -> Rat {
        let mant = Int::from(self.mant);
        let scale = Int::from(10u32).pow(self.exp.unsigned_abs());
        if self.exp >= 0 {
            Rat::from_integer(mant * scale)
        } else {
            Rat::new(mant, scale)
        }
    }

    /// The value as a `u32`, when it is a non-negative integer in range.
    pub fn to_u32(&self) -> Option<u32> {
        if self.exp < 0 || self.mant < 0 {
            return None;
        }
        let mut v = self.mant;
        for _ in 0..self.exp {
            v = v.checked_mul(10)?;
        }
        u32::try_from(v).ok()
    }

    /// Value comparison through the rational embedding.
    pub fn cmp_value(&self, other: &Dec) -> std::cmp::Ordering {
        self.to_rat().cmp(&other.to_rat())
    }
}

impl fmt::Display for Dec {
    /// Prints the canonical literal: plain decimal notation while the
    /// exponent is moderate (`316.23`, `0.004`), mantissa-exponent notation
    /// for very small magnitudes (`8e-11`). Every form is a valid JSON
    /// number and parses back to the identical `Dec`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mant == 0 {
            return write!(f, "0");
        }
        let sign = if self.mant < 0 { "-" } else { "" };
        let digits = self.mant.unsigned_abs().to_string();
        if self.exp >= 0 {
            write!(f, "{sign}{digits}{}", "0".repeat(self.exp as usize))
        } else if self.exp >= -6 {
            let point = self.exp.unsigned_abs() as usize;
            if digits.len() > point {
                let (int, frac) = digits.split_at(digits.len() - point);
                write!(f, "{sign}{int}.{frac}")
            } else {
                write!(f, "{sign}0.{}{digits}", "0".repeat(point - digits.len()))
            }
        } else {
            write!(f, "{sign}{digits}e{}", self.exp)
        }
    }
}

impl FromStr for Dec {
    type Err = ParseNumberError;

    fn from_str(s: &str) -> Result<Dec, ParseNumberError> {
        let raw = s.trim();
        if raw.is_empty() {
            return Err(ParseNumberError::Empty);
        }
        let invalid = || ParseNumberError::Invalid(raw.to_string());
        let bytes = raw.as_bytes();
        let mut i = 0;
        let negative = match bytes[0] {
            b'-' => {
                i = 1;
                true
            }
            b'+' => {
                i = 1;
                false
            }
            _ => false,
        };
        let mut mant: i128 = 0;
        let mut digits = 0usize;
        let mut frac_len = 0i32;
        let mut seen_point = false;
        while i < bytes.len() {
            match bytes[i] {
                b'0'..=b'9' => {
                    mant = mant
                        .checked_mul(10)
                        .and_then(|m| m.checked_add((bytes[i] - b'0') as i128))
                        .ok_or_else(|| ParseNumberError::OutOfRange(raw.to_string()))?;
                    digits += 1;
                    if seen_point {
                        frac_len += 1;
                    }
                    i += 1;
                }
                b'.' if !seen_point => {
                    seen_point = true;
                    i += 1;
                }
                b'e' | b'E' => break,
                _ => return Err(invalid()),
            }
        }
        if digits == 0 {
            return Err(invalid());
        }
        let mut exp10: i32 = 0;
        if i < bytes.len() {
            // bytes[i] is 'e' or 'E'.
            let tail = &raw[i + 1..];
            if tail.is_empty() {
                return Err(invalid());
            }
            exp10 = tail
                .parse::<i32>()
                .map_err(|_| ParseNumberError::Invalid(raw.to_string()))?;
        }
        let exp = exp10
            .checked_sub(frac_len)
            .ok_or_else(|| ParseNumberError::OutOfRange(raw.to_string()))?;
        if exp.abs() > DEC_MAX_EXP {
            return Err(ParseNumberError::OutOfRange(raw.to_string()));
        }
        Ok(Dec::new(if negative { -mant } else { mant }, exp))
    }
}

/// Serde helpers: a `Dec` field written as a JSON number literal.
pub mod dec_number {
    use super::Dec;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(d: &Dec, s: S) -> Result<S::Ok, S::Error> {
        let n = serde_json::Number::from_str(&d.to_string())
            .map_err(|e| serde::ser::Error::custom(e.to_string()))?;
        serde::Serialize::serialize(&n, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Dec, D::Error> {
        let v = serde_json::Value::deserialize(de)?;
        let text = match &v {
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::String(s) => s.clone(),
            other => return Err(D::Error::custom(format!("expected number, got {other}"))),
        };
        Dec::from_str(&text).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Serde helpers: a `Dec` field written as a decimal string.
///
/// Coordinates use this form so that readers in other languages are never
/// tempted to go through binary floating point.
pub mod dec_string {
    use super::Dec;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(d: &Dec, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&d.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Dec, D::Error> {
        let v = serde_json::Value::deserialize(de)?;
        let text = match &v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(D::Error::custom(format!("expected string, got {other}"))),
        };
        Dec::from_str(&text).map_err(|e| D::Error::custom(e.to_string()))
    }
}
