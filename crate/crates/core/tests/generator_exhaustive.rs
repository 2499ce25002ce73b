use adversary_core::adversary::{AClass, AdaptiveGenerator};
use adversary_core::{Context, LayeredValue};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;

/// Plays one classification pattern (bit i set = item i is large).
fn play(n: u64, pattern: u32) -> AdaptiveGenerator {
    let mut g = AdaptiveGenerator::new(n);
    for i in 0..n {
        g.next_exponent().expect("interval never exhausted within N items");
        g.classify(pattern >> i & 1 == 1);
    }
    g
}

#[test]
fn all_patterns_keep_invariant_and_gap() {
    let ctx = Context::from_u64(10).unwrap();
    for n in 1..=8u64 {
        for pattern in 0..(1u32 << n) {
            let g = play(n, pattern);
            assert!(g.interval_invariant_holds(), "n={n} pattern={pattern:b}");
            assert!(g.range_holds(), "n={n} pattern={pattern:b}");
            assert!(g.gap_holds(&ctx).unwrap(), "n={n} pattern={pattern:b}");

            // every large exponent sits at least 2 below every small one, so
            // a_large / a_small = 10^(e_s − e_l) ≥ 100 > k
            let issued = g.issued();
            let large: Vec<&BigUint> = issued.iter().filter(|i| i.class == AClass::Large).map(|i| &i.exponent).collect();
            let small: Vec<&BigUint> = issued.iter().filter(|i| i.class == AClass::Small).map(|i| &i.exponent).collect();
            for l in &large {
                for s in &small {
                    assert!(**s >= *l + 2u32);
                    let a_l = LayeredValue::atom((*l).clone(), BigRational::one());
                    let k_a_s = LayeredValue::atom((*s).clone(), BigRational::from_integer(10.into()));
                    assert!(ctx.gt(&a_l, &k_a_s).unwrap());
                }
            }
            let lo = BigUint::one() << (n + 2);
            let hi = BigUint::one() << (n + 3);
            assert!(issued.iter().all(|i| i.exponent > lo && i.exponent < hi));
            assert_eq!(g.n_large(), pattern.count_ones() as u64);
        }
    }
}

#[test]
fn midpoint_example_with_two_items() {
    let mut g = AdaptiveGenerator::new(2);
    assert_eq!(g.next_exponent().unwrap(), BigUint::from(24u32));
    g.classify(true);
    assert_eq!(g.next_exponent().unwrap(), BigUint::from(28u32));
}
