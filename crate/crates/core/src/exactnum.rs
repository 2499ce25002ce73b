//! Exact, totally ordered arithmetic for sizes that carry infinitesimal
//! layers.
//!
//! A [`LayeredValue`] is `base + Σ c·k^(−e)` where `base` and every `c` are
//! rationals and the exponents `e` are arbitrary-precision integers. The
//! global parameter `k` lives in a [`Context`]. The tiny terms are never
//! materialized: exponents used by the adversary have hundreds of decimal
//! digits. Ordering is decided lexicographically, from the largest-magnitude
//! term downwards, and every decision is backed by a separation certificate
//! checked on the spot.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    /// `k` is too small to separate the terms of a difference.
    #[error("separation certificate violated: k^{gap} must exceed {required} for a difference with {terms} terms (k = {k})")]
    CertificateViolation {
        k: String,
        gap: String,
        required: String,
        terms: usize,
    },
    #[error("the layer base k must be at least 2, got {0}")]
    InvalidBase(String),
}

/// `base + Σ coeff·k^(−exp)` with distinct, strictly positive exponents and
/// nonzero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LayeredValue {
    base: BigRational,
    atoms: BTreeMap<BigUint, BigRational>,
}

impl LayeredValue {
    pub fn zero() -> Self {
        Self::rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::rational(BigRational::one())
    }

    pub fn rational(base: BigRational) -> Self {
        Self {
            base,
            atoms: BTreeMap::new(),
        }
    }

    /// The single term `coeff·k^(−exp)`.
    pub fn atom(exp: BigUint, coeff: BigRational) -> Self {
        Self::new(BigRational::zero(), [(exp, coeff)])
    }

    /// Builds a value from a base and a list of terms. Repeated exponents are
    /// merged, zero coefficients dropped, and an exponent of 0 (where
    /// `k^0 = 1`) is folded into the base.
    pub fn new(base: BigRational, atoms: impl IntoIterator<Item = (BigUint, BigRational)>) -> Self {
        let mut value = Self::rational(base);
        for (exp, coeff) in atoms {
            value.add_term(exp, coeff);
        }
        value
    }

    fn add_term(&mut self, exp: BigUint, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        if exp.is_zero() {
            self.base += coeff;
            return;
        }
        match self.atoms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn base(&self) -> &BigRational {
        &self.base
    }

    pub fn atoms(&self) -> &BTreeMap<BigUint, BigRational> {
        &self.atoms
    }

    pub fn is_rational(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.atoms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.base += &other.base;
        for (exp, coeff) in &other.atoms {
            self.add_term(exp.clone(), coeff.clone());
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            base: -&self.base,
            atoms: self.atoms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    /// Multiplies every component by `q`.
    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self {
            base: &self.base * q,
            atoms: self.atoms.iter().map(|(e, c)| (e.clone(), c * q)).collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&rational::int(n))
    }

    pub fn sum<'a>(values: impl IntoIterator<Item = &'a LayeredValue>) -> Self {
        let mut acc = Self::zero();
        for v in values {
            acc.add_assign(v);
        }
        acc
    }

    pub fn to_serialized(&self) -> SerializedValue {
        SerializedValue {
            base: rational::to_fraction_string(&self.base),
            base_decimal: rational::to_decimal_string(&self.base, 15),
            atoms: self
                .atoms
                .iter()
                .map(|(e, c)| (e.to_string(), rational::to_fraction_string(c)))
                .collect(),
        }
    }
}

impl fmt::Display for LayeredValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", rational::to_fraction_string(&self.base))?;
        for (e, c) in &self.atoms {
            let digits = e.to_string();
            let exp = if digits.len() > 12 {
                format!("<{}-digit exponent>", digits.len())
            } else {
                digits
            };
            write!(f, " + ({})·k^-{}", rational::to_fraction_string(c), exp)?;
        }
        Ok(())
    }
}

impl From<BigRational> for LayeredValue {
    fn from(q: BigRational) -> Self {
        Self::rational(q)
    }
}

/// Report form: the base as a fraction plus `(exponent, coefficient)` pairs,
/// both as decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerializedValue {
    pub base: String,
    pub base_decimal: String,
    pub atoms: Vec<(String, String)>,
}

/// Holds the layer base `k`. Read-only once built.
#[derive(Clone, Debug)]
pub struct Context {
    k: BigUint,
    k_int: BigInt,
    log_k: f64,
}

impl Context {
    pub fn new(k: BigUint) -> Result<Self, NumError> {
        if k < BigUint::from(2u32) {
            return Err(NumError::InvalidBase(k.to_string()));
        }
        let log_k = k.to_f64().map(f64::ln).unwrap_or(f64::INFINITY);
        Ok(Self {
            k_int: BigInt::from(k.clone()),
            k,
            log_k,
        })
    }

    pub fn from_u64(k: u64) -> Result<Self, NumError> {
        Self::new(BigUint::from(k))
    }

    pub fn k(&self) -> &BigUint {
        &self.k
    }

    /// Sign of `x − y`.
    pub fn compare(&self, x: &LayeredValue, y: &LayeredValue) -> Result<Ordering, NumError> {
        self.sign(&x.sub(y))
    }

    /// Sign of `d` relative to zero.
    ///
    /// The base counts as the term at exponent 0. With terms sorted by
    /// exponent, the leading term decides provided
    /// `k^g · c_min > 2·(T−1)·C_max`, where `T` is the number of terms, `g`
    /// the exponent gap between the two leading terms and `c_min`/`C_max`
    /// the extreme absolute coefficients. Otherwise the comparison fails.
    pub fn sign(&self, d: &LayeredValue) -> Result<Ordering, NumError> {
        let mut terms: Vec<(BigUint, &BigRational)> = Vec::with_capacity(d.atoms.len() + 1);
        if !d.base.is_zero() {
            terms.push((BigUint::zero(), &d.base));
        }
        terms.extend(d.atoms.iter().map(|(e, c)| (e.clone(), c)));
        let Some((lead_exp, lead)) = terms.first() else {
            return Ok(Ordering::Equal);
        };
        if terms.len() > 1 {
            let gap = &terms[1].0 - lead_exp;
            self.certify(&terms, &gap)?;
        }
        Ok(if lead.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        })
    }

    fn certify(&self, terms: &[(BigUint, &BigRational)], gap: &BigUint) -> Result<(), NumError> {
        let mut c_max = terms[0].1.abs();
        let mut c_min = c_max.clone();
        for (_, c) in &terms[1..] {
            let a = c.abs();
            if a > c_max {
                c_max = a;
            } else if a < c_min {
                c_min = a;
            }
        }
        let required = rational::int(2 * (terms.len() as i64 - 1)) * c_max / c_min;
        // Smallest power of k exceeding `required`; the loop runs at most
        // log2(required) + 1 times since k >= 2.
        let gap_small = gap.to_u64();
        let mut power = BigInt::one();
        let mut steps: u64 = 0;
        while BigRational::from_integer(power.clone()) <= required {
            if gap_small.is_some_and(|g| steps >= g) {
                return Err(NumError::CertificateViolation {
                    k: self.k.to_string(),
                    gap: gap.to_string(),
                    required: rational::to_fraction_string(&required),
                    terms: terms.len(),
                });
            }
            power *= &self.k_int;
            steps += 1;
        }
        Ok(())
    }

    pub fn lt(&self, x: &LayeredValue, y: &LayeredValue) -> Result<bool, NumError> {
        Ok(self.compare(x, y)? == Ordering::Less)
    }

    pub fn le(&self, x: &LayeredValue, y: &LayeredValue) -> Result<bool, NumError> {
        Ok(self.compare(x, y)? != Ordering::Greater)
    }

    pub fn gt(&self, x: &LayeredValue, y: &LayeredValue) -> Result<bool, NumError> {
        Ok(self.compare(x, y)? == Ordering::Greater)
    }

    pub fn ge(&self, x: &LayeredValue, y: &LayeredValue) -> Result<bool, NumError> {
        Ok(self.compare(x, y)? != Ordering::Less)
    }

    /// Floating-point estimate. Terms below the f64 range contribute 0.
    pub fn approx(&self, x: &LayeredValue) -> f64 {
        let mut v = rational::to_f64(&x.base);
        for (e, c) in &x.atoms {
            let Some(e) = e.to_f64() else { continue };
            let scale = (-e * self.log_k).exp();
            if scale > 0.0 {
                v += rational::to_f64(c) * scale;
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn lv(base: BigRational, atoms: &[(u64, BigRational)]) -> LayeredValue {
        LayeredValue::new(base, atoms.iter().map(|(e, c)| (BigUint::from(*e), c.clone())))
    }

    #[test]
    fn add_examples() {
        let half = lv(ratio(1, 2), &[]);
        assert_eq!(half.add(&half), lv(int(1), &[]));

        let x = lv(ratio(1, 7), &[(5, ratio(1, 7))]);
        let y = lv(int(0), &[(5, ratio(-1, 7))]);
        let s = x.add(&y);
        assert_eq!(s, lv(ratio(1, 7), &[]));
        assert!(s.atoms().is_empty());

        let a = lv(int(0), &[(3, int(1))]);
        let b = lv(int(0), &[(4, int(2))]);
        assert_eq!(a.add(&b), lv(int(0), &[(3, int(1)), (4, int(2))]));
    }

    #[test]
    fn scale_examples() {
        let x = lv(ratio(1, 7), &[(9, ratio(1, 7))]);
        assert_eq!(x.scale(&int(7)), lv(int(1), &[(9, int(1))]));
        assert!(x.scale(&int(0)).is_zero());
        assert!(x.scale(&int(0)).atoms().is_empty());
        let y = lv(ratio(5, 14), &[(2, ratio(-3, 14))]);
        assert_eq!(y.scale(&int(2)), lv(ratio(5, 7), &[(2, ratio(-3, 7))]));
    }

    #[test]
    fn exponent_zero_folds_into_base() {
        let x = lv(ratio(1, 2), &[(0, ratio(1, 4))]);
        assert_eq!(x, lv(ratio(3, 4), &[]));
    }

    #[test]
    fn compare_examples() {
        let ctx = Context::from_u64(10).unwrap();
        let a = lv(ratio(1, 2), &[(5, int(1))]);
        let b = lv(ratio(1, 2), &[]);
        assert_eq!(ctx.compare(&a, &b).unwrap(), Ordering::Greater);
        assert_eq!(ctx.compare(&b, &a).unwrap(), Ordering::Less);

        let c = lv(ratio(1, 7), &[(3, int(1))]);
        let d = lv(ratio(1, 7), &[(4, int(2))]);
        for k in [5u64, 6, 10, 1000] {
            let ctx = Context::from_u64(k).unwrap();
            assert_eq!(ctx.compare(&c, &d).unwrap(), Ordering::Greater, "k = {k}");
        }

        let one = lv(int(1), &[]);
        let one_minus = lv(int(1), &[(7, ratio(-1, 14))]);
        assert_eq!(ctx.compare(&one, &one_minus).unwrap(), Ordering::Greater);
        assert_eq!(ctx.compare(&one, &one).unwrap(), Ordering::Equal);
    }

    #[test]
    fn certificate_rejects_small_k() {
        // k^-3 vs 2k^-4: the difference has two terms with C_max/c_min = 2, so
        // the certificate needs k > 4.
        let c = lv(int(0), &[(3, int(1))]);
        let d = lv(int(0), &[(4, int(2))]);
        for k in [2u64, 3, 4] {
            let ctx = Context::from_u64(k).unwrap();
            assert!(matches!(
                ctx.compare(&c, &d),
                Err(NumError::CertificateViolation { .. })
            ));
        }
    }

    #[test]
    fn certificate_uses_exponent_gap() {
        // A base difference of 1e-30 against a unit atom at exponent 40:
        // k = 10 gives 10^40 · 1e-30 > 2.
        let ctx = Context::from_u64(10).unwrap();
        let tiny = BigRational::new(BigInt::from(1), num_traits::pow(BigInt::from(10), 30));
        let x = lv(tiny.clone(), &[(40, int(-1))]);
        assert_eq!(ctx.sign(&x).unwrap(), Ordering::Greater);
        let y = lv(tiny, &[(20, int(-1))]);
        assert!(ctx.sign(&y).is_err());
    }

    #[test]
    fn huge_exponents_compare_without_materializing() {
        let ctx = Context::from_u64(1000).unwrap();
        let e: BigUint = BigUint::one() << 5000u32;
        let big = LayeredValue::new(ratio(1, 7), [(e.clone(), ratio(1, 7))]);
        let small = LayeredValue::new(ratio(1, 7), [(e + 1u32, ratio(1, 7))]);
        assert_eq!(ctx.compare(&big, &small).unwrap(), Ordering::Greater);
        assert!(ctx.lt(&small, &big).unwrap());
        assert!((ctx.approx(&big) - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_base() {
        assert!(Context::from_u64(1).is_err());
        assert!(Context::from_u64(0).is_err());
    }

    #[test]
    fn serialized_form() {
        let x = lv(ratio(5, 14), &[(12, ratio(-3, 14))]);
        let s = x.to_serialized();
        assert_eq!(s.base, "5/14");
        assert_eq!(s.atoms, vec![("12".to_string(), "-3/14".to_string())]);
    }
}
