use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact probability: a rational number confined to [0,1].
///
/// Stored in lowest terms. Displays as `"num/den"`, or just `"num"` when the
/// denominator is 1, which is also the accepted input syntax alongside plain
/// decimals like `"0.25"`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(BigRational);

impl Prob {
    /// Wraps a rational, rejecting anything outside [0,1].
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() || value > BigRational::one() {
            return Err(Error::ProbRange {
                value: value.to_string(),
            });
        }
        Ok(Prob(value))
    }

    /// Convenience constructor for literal fractions.
    ///
    /// Panics if `num/den` is not a probability; intended for constants that
    /// are verifiably in range at the call site.
    pub fn ratio(num: u64, den: u64) -> Self {
        let r = BigRational::new(BigInt::from(num), BigInt::from(den));
        Prob::new(r).expect("literal ratio outside [0,1]")
    }

    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    pub fn one() -> Self {
        Prob(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// The complementary probability `1 - p`.
    pub fn complement(&self) -> Self {
        Prob(BigRational::one() - &self.0)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().expect("rational convertible to f64")
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prob({})", self.0)
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (int_part, frac_part) = s.split_once('.')?;
    if !int_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac_part.is_empty() || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let int: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part.parse().ok()?
    };
    let frac: BigInt = frac_part.parse().ok()?;
    let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(BigRational::new(int * &scale + frac, scale))
}

impl FromStr for Prob {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let err = |reason: &str| Error::ProbParse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        if trimmed.is_empty() {
            return Err(err("empty string"));
        }
        let value = if let Some((num, den)) = trimmed.split_once('/') {
            let num: BigInt = num
                .parse()
                .map_err(|_| err("numerator is not an integer"))?;
            let den: BigInt = den
                .parse()
                .map_err(|_| err("denominator is not an integer"))?;
            if den.is_zero() {
                return Err(err("denominator is zero"));
            }
            BigRational::new(num, den)
        } else if trimmed.contains('.') {
            parse_decimal(trimmed).ok_or_else(|| err("not a decimal number"))?
        } else {
            let n: BigInt = trimmed.parse().map_err(|_| err("not an integer"))?;
            BigRational::from_integer(n)
        };
        Prob::new(value)
    }
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
