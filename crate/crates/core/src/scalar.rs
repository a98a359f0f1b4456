//! Exact and floating scalars.
//!
//! Algebraic checkers run over [`Rational`] so that polynomial identities in
//! the coefficients hold exactly; grids and sampling run over `f64`. Both
//! implement [`Scalar`], and rationals travel through JSON as `"p/q"` strings.

use std::fmt::Debug;

use num::bigint::BigInt;
use num::traits::{Num, One, Signed, ToPrimitive, Zero};
use num::BigRational;
use serde_json::Value;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Default absolute tolerance for float comparisons.
pub const DEFAULT_TOL: f64 = 1e-12;

pub trait Scalar: Clone + Debug + PartialEq + Num + Signed + Send + Sync + 'static {
    fn to_float(&self) -> f64;
    fn from_i64(v: i64) -> Self;
    /// Equality up to `tol`; exact scalars ignore `tol`.
    fn near(&self, other: &Self, tol: f64) -> bool;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl Scalar for f64 {
    fn to_float(&self) -> f64 {
        *self
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn near(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("not a finite number: {n}"))),
            Value::String(s) => Ok(parse_rational(s)?.to_float()),
            other => Err(Error::Parse(format!("expected number or \"p/q\", got {other}"))),
        }
    }
}

impl Scalar for Rational {
    fn to_float(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn near(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Rational::from_i64(i))
                } else {
                    // Shortest round-trip decimal, so 0.1 becomes 1/10.
                    parse_rational(&n.to_string())
                }
            }
            other => Err(Error::Parse(format!("expected \"p/q\" or number, got {other}"))),
        }
    }
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"-0.25"` or `"1e-3"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("not a rational: {text:?}"));
    if let Some((num, den)) = t.split_once('/') {
        let num = BigInt::from_str_radix(num.trim(), 10).map_err(|_| bad())?;
        let den = BigInt::from_str_radix(den.trim(), 10).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str_radix(&all_digits, 10).map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num::pow(ten, scale as usize);
    } else {
        value /= num::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// `"p/q"` in lowest terms, or `"p"` for integers.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Serde adapter for `Rational` fields stored as `"p/q"` strings.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let v = Value::deserialize(d)?;
        Rational::from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(qs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(qs.len()))?;
        for q in qs {
            seq.serialize_element(&format_rational(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let vs = Vec::<Value>::deserialize(d)?;
        vs.iter()
            .map(|v| Rational::from_json(v).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Option<Vec<Rational>>`.
pub mod serde_rational_vec_opt {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(qs: &Option<Vec<Rational>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match qs {
            Some(qs) => serde_rational_vec::serialize(qs, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Rational>>, D::Error> {
        let vs = Option::<Vec<Value>>::deserialize(d)?;
        vs.map(|vs| {
            vs.iter()
                .map(|v| Rational::from_json(v).map_err(serde::de::Error::custom))
                .collect()
        })
        .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("-4/5").unwrap(), rat(-4, 5));
        assert_eq!(parse_rational("6/8").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("7").unwrap(), rat(7, 1));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("1.5e2").unwrap(), rat(150, 1));
        assert_eq!(parse_rational("2e-3").unwrap(), rat(1, 500));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn format_is_lowest_terms() {
        assert_eq!(format_rational(&rat(10, -4)), "-5/2");
        assert_eq!(format_rational(&rat(9, 3)), "3");
    }

    #[test]
    fn json_number_to_rational_uses_decimal_form() {
        let v: Value = serde_json::from_str("0.1").unwrap();
        assert_eq!(Rational::from_json(&v).unwrap(), rat(1, 10));
        let v: Value = serde_json::from_str("\"-1/5\"").unwrap();
        assert_eq!(Rational::from_json(&v).unwrap(), rat(-1, 5));
    }
}
