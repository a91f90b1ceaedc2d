//! Exact rationals and their `"p/q"` text form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn ints(values: &[i64]) -> Vec<Rat> {
    values.iter().map(|&v| int(v)).collect()
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`. The denominator must be nonzero.
pub fn parse_rat(text: &str) -> Result<Rat> {
    let bad = || Error::ParseRational(text.to_string());
    let trimmed = text.trim();
    let (num, den) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (trimmed, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rat::new(num, den))
}

/// Canonical text form; the denominator is always printed.
pub fn format_rat(value: &Rat) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

pub fn to_f64(value: &Rat) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Rounds `x` to the nearest multiple of `2^-bits`.
pub fn round_dyadic(x: f64, bits: u32) -> Rat {
    let scale = 2f64.powi(bits as i32);
    let scaled = (x * scale).round();
    let numer = BigInt::from_f64(scaled).unwrap_or_else(BigInt::zero);
    Rat::new(numer, BigInt::one() << bits)
}

/// Best rational with a power-of-ten denominator, for turning float input into exact data.
pub fn from_f64_decimal(x: f64, digits: u32) -> Rat {
    let den = BigInt::from(10u32).pow(digits);
    let numer = BigInt::from_f64((x * 10f64.powi(digits as i32)).round()).unwrap_or_else(BigInt::zero);
    Rat::new(numer, den)
}

/// Scales a rational vector to the unique primitive integer vector on the same ray.
/// Returns `None` for the zero vector.
pub fn primitive_integer(coords: &[Rat]) -> Option<Vec<BigInt>> {
    if coords.iter().all(Zero::is_zero) {
        return None;
    }
    let lcm = coords
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let scaled: Vec<BigInt> = coords
        .iter()
        .map(|c| (c * Rat::from_integer(lcm.clone())).to_integer())
        .collect();
    let gcd = scaled
        .iter()
        .fold(BigInt::zero(), |acc, c| acc.gcd(c));
    Some(scaled.into_iter().map(|c| c / &gcd).collect())
}

pub fn is_integer_vector(coords: &[Rat]) -> bool {
    coords.iter().all(|c| c.is_integer())
}

pub(crate) mod serde_rat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let text = String::deserialize(d)?;
        parse_rat(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod serde_rat_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Rat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format_rat(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rat>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rat(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub(crate) mod serde_rat_matrix {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(rows: &[Vec<Rat>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let text: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(format_rat).collect()).collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Rat>>, D::Error> {
        let texts = Vec::<Vec<String>>::deserialize(d)?;
        texts
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| parse_rat(t).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}
