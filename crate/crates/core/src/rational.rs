//! Small helpers around `BigRational`: construction, parsing, rounding and
//! report formatting.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `n / d` as a rational. Panics on a zero denominator.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn from_big(n: BigInt) -> BigRational {
    BigRational::from_integer(n)
}

pub fn from_biguint(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

/// `base^exp` as a rational.
pub fn pow(base: i64, exp: u32) -> BigRational {
    from_big(num_traits::pow(BigInt::from(base), exp as usize))
}

pub fn floor(q: &BigRational) -> BigInt {
    q.numer().div_floor(q.denom())
}

pub fn ceil(q: &BigRational) -> BigInt {
    -((-q.numer()).div_floor(q.denom()))
}

/// Parses `"p/q"`, an integer, or a plain decimal such as `"1.07"` exactly.
pub fn parse(s: &str) -> Option<BigRational> {
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
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let d = num_traits::pow(BigInt::from(10), frac_part.len());
    let q = BigRational::new(n, d);
    Some(if neg { -q } else { q })
}

/// `"p/q"`, or `"p"` for integers.
pub fn to_fraction_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Decimal expansion rounded half away from zero to `digits` places.
pub fn to_decimal_string(q: &BigRational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = q.abs() * BigRational::from_integer(scale.clone());
    let rounded = floor(&(scaled + ratio(1, 2)));
    let (int_part, frac_part) = rounded.div_rem(&scale);
    let sign = if q.is_negative() && !rounded.is_zero() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = digits)
    }
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Report form of an exact value: the fraction and a rounded decimal.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Exact {
    pub exact: String,
    pub decimal: String,
}

impl From<&BigRational> for Exact {
    fn from(q: &BigRational) -> Self {
        Self {
            exact: to_fraction_string(q),
            decimal: to_decimal_string(q, 15),
        }
    }
}

/// For `#[serde(serialize_with)]` on `BigRational` fields.
pub fn serialize_exact<S: serde::Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&Exact::from(q), s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("3/6"), Some(ratio(1, 2)));
        assert_eq!(parse("1.6"), Some(ratio(8, 5)));
        assert_eq!(parse("-0.25"), Some(ratio(-1, 4)));
        assert_eq!(parse("7"), Some(int(7)));
        assert_eq!(parse(".5"), Some(ratio(1, 2)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("abc"), None);
        assert_eq!(parse(""), None);
    }

    #[test]
    fn rounding() {
        assert_eq!(floor(&ratio(-3, 2)), BigInt::from(-2));
        assert_eq!(ceil(&ratio(-3, 2)), BigInt::from(-1));
        assert_eq!(ceil(&ratio(2401, 2)), BigInt::from(1201));
        assert_eq!(ceil(&int(4)), BigInt::from(4));
    }

    #[test]
    fn decimal_strings() {
        assert_eq!(to_decimal_string(&ratio(1, 3), 5), "0.33333");
        assert_eq!(to_decimal_string(&ratio(2, 3), 3), "0.667");
        assert_eq!(to_decimal_string(&ratio(-1, 8), 2), "-0.13");
        assert_eq!(to_decimal_string(&int(7), 0), "7");
        assert_eq!(to_fraction_string(&ratio(8533, 2352)), "1219/336");
        assert_eq!(to_fraction_string(&ratio(35, 6)), "35/6");
    }
}
