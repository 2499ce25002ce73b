use std::collections::BTreeMap;

use adversary_core::analysis::{check_multiplier_identity, check_rhs_identity, multipliers, rhs_coefficient};
use adversary_core::packing::Batch;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn p7(e: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(7).pow(e))
}

/// Σ W_j ν_j + ν_11 + 2ν_21 + ν_22 + 2ν_31 + ν_32 with the closed-form prices.
fn price_sum(t: u32, w: &BigRational, nu: &BTreeMap<Batch, u64>) -> BigRational {
    let mut s = BigRational::zero();
    for (&b, &n) in nu {
        let price = match b {
            Batch::C(j) if j == t => q(7, 1),
            Batch::C(j) => q(7, 1) - BigRational::one() / p7(j - 1),
            Batch::A => w + q(5, 1),
            Batch::B21 | Batch::B31 => q(2, 1),
            _ => q(1, 1),
        };
        s += price * q(n as i64, 1);
    }
    s
}

/// Σ multiplier · ALG over the eight stopping points, with the algorithm's
/// cost rebuilt from the opening counts.
fn combination(t: u32, w: &BigRational, nu: &BTreeMap<Batch, u64>) -> BigRational {
    let v = |b| q(*nu.get(&b).unwrap_or(&0) as i64, 1);
    let mut s = BigRational::zero();
    let mut trunk = BigRational::zero();
    for j in (2..=t).rev() {
        trunk += v(Batch::C(j));
        let m = if j == t {
            BigRational::one() / p7(t - 2)
        } else if j == 2 {
            q(13, 7) - w
        } else {
            q(6, 1) / p7(j - 1)
        };
        s += m * &trunk;
    }
    let delta = trunk + v(Batch::A);
    s += w * &delta;
    s += &delta + v(Batch::B11);
    s += &delta + v(Batch::B21);
    s += &delta + v(Batch::B21) + v(Batch::B22);
    s += &delta + v(Batch::B31);
    s += &delta + v(Batch::B31) + v(Batch::B32);
    s
}

/// The expanded sum of multiplier · OPT bound, term by term.
fn rhs_expanded(t: u32, w: &BigRational, n: &BigRational, nl: &BigRational) -> BigRational {
    let mut s = q(11, 6) * n + (q(7, 1) * n - q(5, 1) * nl) / q(12, 1) + (q(7, 1) * n - q(5, 1) * nl) / q(6, 1);
    s += BigRational::one() / p7(t - 2) * n / (q(6, 1) * p7(t - 1));
    for j in 3..t {
        s += q(6, 1) / p7(j - 1) * n / (q(6, 1) * p7(j - 1));
    }
    s += (q(13, 7) - w) * n / q(42, 1) + w * n / q(6, 1);
    s
}

fn batches(t: u32) -> Vec<Batch> {
    let mut v: Vec<Batch> = (2..=t).rev().map(Batch::C).collect();
    v.extend([Batch::A, Batch::B11, Batch::B21, Batch::B22, Batch::B31, Batch::B32]);
    v
}

prop_compose! {
    fn weight()(num in 0i64..=1000) -> BigRational {
        q(1000 + num / 2, 1000) + q(num % 2, 2000)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn multiplier_combination_identity(
        t in 3u32..=8,
        w in weight(),
        counts in prop::collection::vec(0u64..=1_000_000, 13),
    ) {
        let nu: BTreeMap<Batch, u64> = batches(t).into_iter().zip(counts).collect();
        let (lhs, rhs) = check_multiplier_identity(t, &w, &nu);
        prop_assert_eq!(&lhs, &rhs);
        prop_assert_eq!(&lhs, &combination(t, &w, &nu));
        prop_assert_eq!(&rhs, &price_sum(t, &w, &nu));
    }

    #[test]
    fn rhs_coefficient_identity(t in 3u32..=8, w in weight(), n in 1i64..=10_000_000, frac in 0u32..=1000) {
        let nl = n * frac as i64 / 1000;
        let (nq, nlq) = (q(n, 1), q(nl, 1));
        prop_assert!(check_rhs_identity(t, &w, &nq, &nlq));
        prop_assert_eq!(rhs_expanded(t, &w, &nq, &nlq), rhs_coefficient(t, &w, &(&nlq / &nq)) * &nq);
    }
}

#[test]
fn multipliers_at_t3() {
    let w = q(107, 100);
    let m: BTreeMap<Batch, BigRational> = multipliers(3, &w).into_iter().collect();
    assert_eq!(m[&Batch::C(3)], q(1, 7));
    assert_eq!(m[&Batch::C(2)], q(13, 7) - &w);
    assert_eq!(m[&Batch::A], w);
    assert!(batches(3)[3..].iter().all(|b| m[b] == q(1, 1)));
}

#[test]
fn multipliers_nonnegative_over_weight_range() {
    for t in 3..=8 {
        for w in [q(1, 1), q(5, 4), q(3, 2)] {
            assert!(multipliers(t, &w).iter().all(|(_, m)| *m >= BigRational::zero()));
        }
    }
}
