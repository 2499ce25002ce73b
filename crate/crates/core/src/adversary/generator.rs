//! Adaptive sizes for the A-batch.
//!
//! Every A-item has size `(1+ε+a)/7` with `a = k^(−e)`. The exponent of the
//! next item is the midpoint of an integer interval `[lo, hi]` of exponents
//! still available. Once the algorithm has placed the item, the interval is
//! cut so that every later item lands strictly between the past large items
//! (smaller exponents, larger `a`) and the past small items.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::AdversaryError;
use crate::exactnum::{Context, LayeredValue, NumError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AClass {
    /// Packed as the first item of a bin.
    Large,
    /// Packed into a bin that already held something.
    Small,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IssuedA {
    pub exponent: BigUint,
    pub class: AClass,
}

#[derive(Clone, Debug)]
pub struct AdaptiveGenerator {
    capacity: u64,
    /// Open range `(range_lo, range_hi)` every exponent must fall in.
    range_lo: BigUint,
    range_hi: BigUint,
    lo: BigUint,
    hi: BigUint,
    issued: Vec<IssuedA>,
    pending: Option<BigUint>,
}

impl AdaptiveGenerator {
    /// A generator for `n` items over the exponent range `(2^(n+2), 2^(n+3))`.
    pub fn new(n: u64) -> Self {
        let range_lo = BigUint::one() << (n + 2);
        let range_hi = BigUint::one() << (n + 3);
        Self::with_range(n, range_lo, range_hi)
    }

    /// A generator for `capacity` items over the open exponent range
    /// `(range_lo, range_hi)`.
    pub fn with_range(capacity: u64, range_lo: BigUint, range_hi: BigUint) -> Self {
        let lo = &range_lo + 1u32;
        let hi = if range_hi.is_zero() { BigUint::zero() } else { &range_hi - 1u32 };
        Self {
            capacity,
            range_lo,
            range_hi,
            lo,
            hi,
            issued: Vec::new(),
            pending: None,
        }
    }

    /// Current interval `[lo, hi]` of available exponents.
    pub fn interval(&self) -> (&BigUint, &BigUint) {
        (&self.lo, &self.hi)
    }

    pub fn issued(&self) -> &[IssuedA] {
        &self.issued
    }

    pub fn n_large(&self) -> u64 {
        self.issued.iter().filter(|i| i.class == AClass::Large).count() as u64
    }

    /// The exponent of the next item: the midpoint of `[lo, hi]`, rounded
    /// down. Fails when the interval no longer has an interior point.
    pub fn next_exponent(&mut self) -> Result<BigUint, AdversaryError> {
        assert!(self.pending.is_none(), "previous A-item was never classified");
        if self.issued.len() as u64 >= self.capacity || self.hi < &self.lo + 2u32 {
            return Err(AdversaryError::IntervalExhausted {
                issued: self.issued.len(),
            });
        }
        let e: BigUint = (&self.lo + &self.hi) >> 1u32;
        self.pending = Some(e.clone());
        Ok(e)
    }

    /// Records where the pending item went and narrows the interval.
    pub fn classify(&mut self, into_empty_bin: bool) {
        let e = self.pending.take().expect("no A-item pending classification");
        let class = if into_empty_bin {
            self.lo = &e + 1u32;
            AClass::Large
        } else {
            self.hi = &e - 1u32;
            AClass::Small
        };
        self.issued.push(IssuedA { exponent: e, class });
    }

    /// Exponent of `γ`: the largest small `a` (smallest small exponent), or
    /// one below every issued value when there are no small items.
    pub fn gamma_exponent(&self) -> BigUint {
        self.issued
            .iter()
            .filter(|i| i.class == AClass::Small)
            .map(|i| i.exponent.clone())
            .min()
            .unwrap_or_else(|| &self.hi + 1u32)
    }

    pub fn gamma(&self) -> LayeredValue {
        LayeredValue::atom(self.gamma_exponent(), num_rational::BigRational::one())
    }

    /// Every large exponent is at most `lo − 1` and every small one at least
    /// `hi + 1`.
    pub fn interval_invariant_holds(&self) -> bool {
        self.issued.iter().all(|i| match i.class {
            AClass::Large => i.exponent < self.lo,
            AClass::Small => i.exponent > self.hi,
        })
    }

    /// All issued exponents lie strictly inside the original range.
    pub fn range_holds(&self) -> bool {
        self.issued
            .iter()
            .all(|i| i.exponent > self.range_lo && i.exponent < self.range_hi)
    }

    /// `min over large a > k · max over small a`, decided by exact
    /// comparison of the two layered values.
    pub fn gap_holds(&self, ctx: &Context) -> Result<bool, NumError> {
        let max_large_exp = self
            .issued
            .iter()
            .filter(|i| i.class == AClass::Large)
            .map(|i| &i.exponent)
            .max();
        let min_small_exp = self
            .issued
            .iter()
            .filter(|i| i.class == AClass::Small)
            .map(|i| &i.exponent)
            .min();
        let (Some(large), Some(small)) = (max_large_exp, min_small_exp) else {
            return Ok(true);
        };
        if small <= large {
            return Ok(false);
        }
        let one = num_rational::BigRational::one();
        let min_large_a = LayeredValue::atom(large.clone(), one.clone());
        // k · k^(−e) = k^(−(e−1)); e − 1 >= 1 because small > large >= 1.
        let k_times_max_small = LayeredValue::atom(small - 1u32, one);
        ctx.gt(&min_large_a, &k_times_max_small)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_rule_small_example() {
        // N = 2: open range (16, 32).
        let mut g = AdaptiveGenerator::new(2);
        assert_eq!(g.interval(), (&BigUint::from(17u32), &BigUint::from(31u32)));
        let e = g.next_exponent().unwrap();
        assert_eq!(e, BigUint::from(24u32));
        g.classify(true);
        assert_eq!(g.interval(), (&BigUint::from(25u32), &BigUint::from(31u32)));
        let e = g.next_exponent().unwrap();
        assert_eq!(e, BigUint::from(28u32));
        g.classify(false);
        let ctx = Context::from_u64(10).unwrap();
        assert!(g.gap_holds(&ctx).unwrap());
        assert!(g.interval_invariant_holds());
        assert!(g.range_holds());
        // 10^-24 / 10^-28 = 10^4 > k.
        assert_eq!(g.gamma_exponent(), BigUint::from(28u32));
        assert!(matches!(g.next_exponent(), Err(AdversaryError::IntervalExhausted { issued: 2 })));
    }

    #[test]
    fn small_then_large() {
        let mut g = AdaptiveGenerator::new(2);
        g.next_exponent().unwrap();
        g.classify(false);
        assert_eq!(g.interval(), (&BigUint::from(17u32), &BigUint::from(23u32)));
        assert_eq!(g.next_exponent().unwrap(), BigUint::from(20u32));
        g.classify(true);
        assert_eq!(g.gamma_exponent(), BigUint::from(24u32));
        assert!(g.gap_holds(&Context::from_u64(10).unwrap()).unwrap());
    }

    #[test]
    fn no_small_items_gamma_sits_below_everything() {
        let mut g = AdaptiveGenerator::new(3);
        for _ in 0..3 {
            g.next_exponent().unwrap();
            g.classify(true);
        }
        let ge = g.gamma_exponent();
        assert!(g.issued().iter().all(|i| i.exponent < ge));
        assert_eq!(ge, g.interval().1 + 1u32);
    }

    #[test]
    fn narrow_interval_is_exhausted() {
        let mut g = AdaptiveGenerator::with_range(5, BigUint::from(10u32), BigUint::from(13u32));
        // [11, 12] has no interior point.
        assert!(g.next_exponent().is_err());
    }
}
