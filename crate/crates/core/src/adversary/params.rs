use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed};
use thiserror::Error;

use crate::exactnum::{Context, LayeredValue};
use crate::packing::Batch;
use crate::rational::{self, int, ratio};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("t must be at least 3, got {0}")]
    TooFewLevels(u32),
    #[error("M must be at least 1")]
    ZeroMultiplier,
    #[error("N = M·6·7^t overflows for t = {t}, M = {m}")]
    TooLarge { t: u32, m: u64 },
    #[error("epsilon {0} must lie strictly between 0 and 1/2058^t")]
    BadEpsilon(String),
}

/// Parameters of one construction: `t` levels of `C` batches, batch size `N`
/// and the perturbation `ε`, from which `k = ⌈1/ε⌉` follows.
#[derive(Clone, Debug)]
pub struct ConstructionParams {
    pub t: u32,
    pub m: u64,
    pub n: u64,
    pub eps: BigRational,
    ctx: Context,
}

impl ConstructionParams {
    /// `N = M·6·7^t` and the default `ε = 1/(2·2058^t)`.
    pub fn new(t: u32, m: u64) -> Result<Self, ParamError> {
        Self::with_eps(t, m, Self::default_eps(t))
    }

    pub fn default_eps(t: u32) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(2) * num_traits::pow(BigInt::from(2058), t as usize))
    }

    pub fn with_eps(t: u32, m: u64, eps: BigRational) -> Result<Self, ParamError> {
        if t < 3 {
            return Err(ParamError::TooFewLevels(t));
        }
        if m == 0 {
            return Err(ParamError::ZeroMultiplier);
        }
        let n = 7u64
            .checked_pow(t)
            .and_then(|p| p.checked_mul(6))
            .and_then(|p| p.checked_mul(m))
            .filter(|n| *n <= u32::MAX as u64)
            .ok_or(ParamError::TooLarge { t, m })?;
        let limit = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(2058), t as usize));
        if !eps.is_positive() || eps >= limit {
            return Err(ParamError::BadEpsilon(rational::to_fraction_string(&eps)));
        }
        let k = rational::ceil(&eps.recip());
        let ctx = Context::new(k.to_biguint().expect("1/eps is positive")).expect("k >= 2 since eps < 1/2");
        Ok(Self { t, m, n, eps, ctx })
    }

    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    pub fn k(&self) -> &BigUint {
        self.ctx.k()
    }

    pub fn n_big(&self) -> BigRational {
        int(self.n as i64)
    }

    /// `C_t = 1/(6·7^(t−1)) − 294ε`, `C_j = (1+28ε)/7^j` for `2 <= j < t`.
    pub fn c_size(&self, j: u32) -> BigRational {
        assert!((2..=self.t).contains(&j), "no C_{j} batch for t = {}", self.t);
        if j == self.t {
            int(1) / (int(6) * rational::pow(7, j - 1)) - int(294) * &self.eps
        } else {
            (int(1) + int(28) * &self.eps) / rational::pow(7, j)
        }
    }

    /// The common base `(1+ε)/7` of all A-items.
    pub fn a_base(&self) -> BigRational {
        (int(1) + &self.eps) / int(7)
    }

    /// `(1+ε+a)/7` with `a = k^(−exp)`.
    pub fn a_size(&self, exp: &BigUint) -> LayeredValue {
        LayeredValue::new(self.a_base(), [(exp.clone(), ratio(1, 7))])
    }

    /// `(1 + ε + m·γ)/7`, used for the large/small separation.
    pub fn a_threshold(&self, gamma: &LayeredValue, multiple: i64) -> LayeredValue {
        LayeredValue::rational(self.a_base()).add(&gamma.scale(&ratio(multiple, 7)))
    }

    /// Sizes of the continuation items given `γ`.
    pub fn b_size(&self, batch: Batch, gamma: &LayeredValue) -> LayeredValue {
        let e = &self.eps;
        match batch {
            Batch::B11 => ((int(1) + int(2) * e) / int(2)).into(),
            Batch::B21 => ((int(1) + e) / int(3)).into(),
            Batch::B22 => ((int(1) + e) / int(2)).into(),
            Batch::B31 => LayeredValue::rational((int(5) - int(2) * e) / int(14)).add(&gamma.scale(&ratio(-3, 14))),
            Batch::B32 => LayeredValue::rational(ratio(1, 2)).add(&gamma.scale(&ratio(1, 14))),
            other => panic!("{other} is not a continuation batch"),
        }
    }

    /// Item counts of the continuation batches given `n_L`. Non-integral
    /// counts are rounded down.
    pub fn b_counts(&self, n_large: u64) -> BranchCounts {
        let n = self.n;
        BranchCounts {
            b11: n / 3,
            b21: n,
            b22: n,
            b31: 7 * (n - n_large) / 6,
            b32: (7 * n - 5 * n_large) / 6,
        }
    }

    /// How many `C_t` items fit into one bin: `6·7^(t−1)`.
    pub fn first_batch_capacity(&self) -> u64 {
        6 * 7u64.pow(self.t - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BranchCounts {
    pub b11: u64,
    pub b21: u64,
    pub b22: u64,
    pub b31: u64,
    pub b32: u64,
}

impl BranchCounts {
    pub fn get(&self, batch: Batch) -> u64 {
        match batch {
            Batch::B11 => self.b11,
            Batch::B21 => self.b21,
            Batch::B22 => self.b22,
            Batch::B31 => self.b31,
            Batch::B32 => self.b32,
            other => panic!("{other} is not a continuation batch"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities_t3() {
        let p = ConstructionParams::new(3, 1).unwrap();
        assert_eq!(p.n, 2058);
        assert_eq!(p.n % (6 * 343), 0);
        assert_eq!(p.eps, ratio(1, 2 * 2058 * 2058 * 2058));
        assert_eq!(p.k(), &BigUint::from(2u64 * 2058 * 2058 * 2058));
        assert_eq!(p.c_size(3), ratio(1, 294) - int(294) * &p.eps);
        assert_eq!(p.c_size(2), (int(1) + int(28) * &p.eps) / int(49));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(ConstructionParams::new(2, 1).unwrap_err(), ParamError::TooFewLevels(2));
        assert_eq!(ConstructionParams::new(3, 0).unwrap_err(), ParamError::ZeroMultiplier);
        let at_limit = ratio(1, 2058 * 2058 * 2058);
        assert!(matches!(ConstructionParams::with_eps(3, 1, at_limit), Err(ParamError::BadEpsilon(_))));
        assert!(matches!(ConstructionParams::with_eps(3, 1, int(0)), Err(ParamError::BadEpsilon(_))));
        assert!(ConstructionParams::with_eps(3, 1, ratio(1, 9_000_000_000)).is_ok());
    }

    #[test]
    fn k_is_ceiling_of_inverse_eps() {
        let p = ConstructionParams::with_eps(3, 1, ratio(2, 17_440_000_001)).unwrap();
        assert_eq!(p.k(), &BigUint::from(8_720_000_001u64));
    }

    #[test]
    fn branch_counts() {
        let p = ConstructionParams::new(3, 1).unwrap();
        let all_large = p.b_counts(p.n);
        assert_eq!((all_large.b31, all_large.b32), (0, p.n / 3));
        let none_large = p.b_counts(0);
        assert_eq!((none_large.b31, none_large.b32), (7 * p.n / 6, 7 * p.n / 6));
        assert_eq!(none_large.b11, 686);
        // n_L = 1 makes both counts fractional; they are floored.
        let one = p.b_counts(1);
        assert_eq!(one.b31, (7 * 2057) / 6);
        assert_eq!(one.b32, (7 * 2058 - 5) / 6);
    }
}
