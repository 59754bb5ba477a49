//! Exact truth values.
//!
//! Strength and confidence are arbitrary-precision rationals so that every
//! derived value in chaining and evaluation compares exactly.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational used for truth values and probabilities.
pub type Ratio = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RatioError {
    #[error("malformed rational `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("value {0} outside [0, 1]")]
    OutOfRange(String),
}

pub fn ratio(numer: i64, denom: i64) -> Ratio {
    Ratio::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn ratio_int(n: i64) -> Ratio {
    Ratio::from_integer(BigInt::from(n))
}

/// Parses `7`, `-3/4` or `0.125` into an exact rational.
pub fn parse_ratio(text: &str) -> Result<Ratio, RatioError> {
    let malformed = || RatioError::Malformed(text.to_string());
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let value = if let Some((n, d)) = body.split_once('/') {
        if !digits(n) || !digits(d) {
            return Err(malformed());
        }
        let d: BigInt = d.parse().map_err(|_| malformed())?;
        if d.is_zero() {
            return Err(RatioError::ZeroDenominator(text.to_string()));
        }
        Ratio::new(n.parse().map_err(|_| malformed())?, d)
    } else if let Some((int, frac)) = body.split_once('.') {
        if !digits(int) || !digits(frac) {
            return Err(malformed());
        }
        let scale = BigInt::from(10).pow(frac.len() as u32);
        let whole: BigInt = format!("{int}{frac}").parse().map_err(|_| malformed())?;
        Ratio::new(whole, scale)
    } else {
        if !digits(body) {
            return Err(malformed());
        }
        Ratio::from_integer(body.parse().map_err(|_| malformed())?)
    };
    Ok(if negative { -value } else { value })
}

/// Canonical text: `n` for integers, `n/d` otherwise.
pub fn format_ratio(r: &Ratio) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Lossy conversion for display only.
pub fn ratio_to_f64(r: &Ratio) -> f64 {
    let n: f64 = r.numer().to_string().parse().unwrap_or(f64::NAN);
    let d: f64 = r.denom().to_string().parse().unwrap_or(f64::NAN);
    n / d
}

/// (strength, confidence) pair, both in [0, 1].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthValue {
    strength: Ratio,
    confidence: Ratio,
}

impl TruthValue {
    pub fn new(strength: Ratio, confidence: Ratio) -> Result<Self, RatioError> {
        for r in [&strength, &confidence] {
            if r.is_negative() || *r > Ratio::one() {
                return Err(RatioError::OutOfRange(format_ratio(r)));
            }
        }
        Ok(Self { strength, confidence })
    }

    /// Convenience constructor from small fractions; panics when out of range.
    pub fn from_fractions(s: (i64, i64), c: (i64, i64)) -> Self {
        Self::new(ratio(s.0, s.1), ratio(c.0, c.1)).expect("truth value components in [0, 1]")
    }

    pub fn certain() -> Self {
        Self {
            strength: Ratio::one(),
            confidence: Ratio::one(),
        }
    }

    pub fn falsehood() -> Self {
        Self {
            strength: Ratio::zero(),
            confidence: Ratio::one(),
        }
    }

    pub fn strength(&self) -> &Ratio {
        &self.strength
    }

    pub fn confidence(&self) -> &Ratio {
        &self.confidence
    }

    /// Revision on duplicate insertion: the higher-confidence value wins and
    /// ties keep the incumbent. Returns true when `candidate` replaced `self`.
    pub fn revise(&mut self, candidate: &TruthValue) -> bool {
        if candidate.confidence > self.confidence {
            *self = candidate.clone();
            true
        } else {
            false
        }
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(tv {} {})",
            format_ratio(&self.strength),
            format_ratio(&self.confidence)
        )
    }
}

impl FromStr for TruthValue {
    type Err = RatioError;

    /// Accepts `s c` with each component in rational or decimal form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(RatioError::Malformed(s.to_string()));
        };
        TruthValue::new(parse_ratio(a)?, parse_ratio(b)?)
    }
}
