use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use super::{check_w, check_weight_price_inequality, type_of_opener, AnalysisError, PriceTable, WeightPriceCheck, WeightSystem};
use crate::adversary::TreeRun;
use crate::opt_bounds::{opt_formula_for, opt_upper_bound};
use crate::packing::{Batch, Stats};
use crate::rational::{self, int, pow, ratio, serialize_exact, Exact};

/// Stopping-point multipliers: `W_j − W_(j−1)` down the trunk, `w` at the
/// A-batch and `1` at every continuation point.
pub fn multipliers(t: u32, w: &BigRational) -> Vec<(Batch, BigRational)> {
    Batch::all(t)
        .into_iter()
        .map(|b| {
            let m = match b {
                Batch::C(j) if j == t => int(1) / pow(7, t - 2),
                Batch::C(2) => ratio(13, 7) - w,
                Batch::C(j) => int(6) / pow(7, j - 1),
                Batch::A => w.clone(),
                _ => int(1),
            };
            (b, m)
        })
        .collect()
}

/// `Σ W_j ν_j + ν_11 + 2ν_21 + ν_22 + 2ν_31 + ν_32` at `w`.
fn price_bound_from_nu(t: u32, w: &BigRational, nu: &BTreeMap<Batch, u64>) -> BigRational {
    let table = PriceTable::closed_form(t);
    nu.iter()
        .map(|(b, n)| table.get(type_of_opener(*b)).eval(w) * int(*n as i64))
        .sum()
}

/// Both sides of `Σ multiplier · ALG = Σ W_j ν_j + ν_11 + 2ν_21 + ν_22 +
/// 2ν_31 + ν_32` for bin-opening counts `nu`.
pub fn check_multiplier_identity(t: u32, w: &BigRational, nu: &BTreeMap<Batch, u64>) -> (BigRational, BigRational) {
    let delta = (2..=t).map(|j| nu.get(&Batch::C(j)).copied().unwrap_or(0)).sum::<u64>()
        + nu.get(&Batch::A).copied().unwrap_or(0);
    let stats = Stats {
        nu: nu.clone(),
        n_large: nu.get(&Batch::A).copied().unwrap_or(0),
        delta,
        costs: Vec::new(),
    };
    let lhs = multipliers(t, w)
        .iter()
        .map(|(b, m)| m * int(stats.formula_cost(t, *b) as i64))
        .sum();
    (lhs, price_bound_from_nu(t, w, nu))
}

/// `2133/588 − (5/4)n′ + 1/(7·48·49^(t−2)) + 1/(48·49) + w/7`.
pub fn rhs_coefficient(t: u32, w: &BigRational, n_prime: &BigRational) -> BigRational {
    ratio(2133, 588) - ratio(5, 4) * n_prime + int(1) / (int(7 * 48) * pow(49, t - 2)) + ratio(1, 48 * 49)
        + w / int(7)
}

/// `Σ multiplier · OPT/N` over the closed-form bounds equals
/// [`rhs_coefficient`] at `n′ = n_L/N`.
pub fn check_rhs_identity(t: u32, w: &BigRational, n: &BigRational, n_large: &BigRational) -> bool {
    let sum: BigRational = multipliers(t, w)
        .iter()
        .map(|(b, m)| m * opt_formula_for(n, n_large, *b))
        .sum();
    sum / n == rhs_coefficient(t, w, &(n_large / n))
}

fn numerator(w: &BigRational, n_prime: &BigRational) -> BigRational {
    w * n_prime - int(3) * n_prime + ratio(35, 6)
}

/// `(w·n′ − 3n′ + 35/6) / rhs_coefficient(t, w, n′)`.
pub fn bound_finite_t(t: u32, w: &BigRational, n_prime: &BigRational) -> BigRational {
    let den = rhs_coefficient(t, w, n_prime);
    assert!(den.is_positive(), "denominator must be positive");
    numerator(w, n_prime) / den
}

/// The `t → ∞` limit: denominator `8533/2352 − (5/4)n′ + w/7`.
pub fn asymptotic_bound(w: &BigRational, n_prime: &BigRational) -> BigRational {
    numerator(w, n_prime) / (ratio(8533, 2352) - ratio(5, 4) * n_prime + w / int(7))
}

/// `a + b·√d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadSurd {
    pub a: BigRational,
    pub b: BigRational,
    pub d: BigInt,
}

impl QuadSurd {
    pub fn new(a: BigRational, b: BigRational, d: BigInt) -> Self {
        Self { a, b, d }
    }

    pub fn rational(a: BigRational, d: BigInt) -> Self {
        Self::new(a, BigRational::zero(), d)
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.d, o.d);
        Self::new(&self.a + &o.a, &self.b + &o.b, self.d.clone())
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(self.d, o.d);
        Self::new(&self.a - &o.a, &self.b - &o.b, self.d.clone())
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.d, o.d);
        let d = BigRational::from_integer(self.d.clone());
        Self::new(
            &self.a * &o.a + &self.b * &o.b * d,
            &self.a * &o.b + &self.b * &o.a,
            self.d.clone(),
        )
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Self::new(&self.a * q, &self.b * q, self.d.clone())
    }

    pub fn add_rational(&self, q: &BigRational) -> Self {
        Self::new(&self.a + q, self.b.clone(), self.d.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Exact sign, for `d` not a perfect square.
    pub fn signum(&self) -> Ordering {
        let zero = BigRational::zero();
        let sa = self.a.cmp(&zero);
        let sb = self.b.cmp(&zero);
        match (sa, sb) {
            (s, Ordering::Equal) => s,
            (Ordering::Equal, s) => s,
            (x, y) if x == y => x,
            (sa, _) => {
                let a2 = &self.a * &self.a;
                let b2d = &self.b * &self.b * BigRational::from_integer(self.d.clone());
                match a2.cmp(&b2d) {
                    Ordering::Greater => sa,
                    Ordering::Less => sa.reverse(),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn cmp_rational(&self, q: &BigRational) -> Ordering {
        self.add_rational(&-q).signum()
    }

    /// Decimal expansion to `digits` places, rounded half up.
    pub fn to_decimal(&self, digits: usize) -> String {
        let extra = digits + 12;
        let scale = num_traits::pow(BigInt::from(10), extra);
        let root = (&self.d * &scale * &scale).sqrt();
        let approx = &self.a + &self.b * BigRational::new(root, scale);
        rational::to_decimal_string(&approx, digits)
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.b.is_negative() { '−' } else { '+' };
        write!(
            f,
            "{} {sign} {}·√{}",
            rational::to_fraction_string(&self.a),
            rational::to_fraction_string(&self.b.abs()),
            self.d
        )
    }
}

impl Serialize for QuadSurd {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Form {
            form: String,
            rational_part: Exact,
            root_coefficient: Exact,
            radicand: String,
            decimal: String,
        }
        Form {
            form: self.to_string(),
            rational_part: Exact::from(&self.a),
            root_coefficient: Exact::from(&self.b),
            radicand: self.d.to_string(),
            decimal: self.to_decimal(20),
        }
        .serialize(s)
    }
}

pub const RADICAND: i64 = 1_387_369;

#[derive(Clone, Debug, Serialize)]
pub struct OptimizedBound {
    /// Maximizer found by golden-section search on a `2^-96` grid.
    #[serde(serialize_with = "serialize_exact")]
    pub w_search: BigRational,
    /// `min over n′ ∈ {0, 1}` of the asymptotic bound at `w_search`.
    #[serde(serialize_with = "serialize_exact")]
    pub r_search: BigRational,
    /// `(√1387369 − 1075)/96`.
    pub w_star: QuadSurd,
    /// `(1363 − √1387369)/120`.
    pub r_star: QuadSurd,
    /// `w* − (3 − (5/4)r*)`.
    pub residual_w: QuadSurd,
    /// `35/6 − r*(8533/2352 + w*/7)`.
    pub residual_r: QuadSurd,
    /// Coefficient of `n′` in `numerator − r*·denominator` at `w*`.
    pub residual_flat: QuadSurd,
    pub radicand_is_square: bool,
    /// `|w_search − w*| < 1e−12` and `|r_search − r*| < 1e−12`.
    pub search_agrees: bool,
    /// `|r* − 1.5427809064729| < 1e−12` and `|w* − 1.07152386690879| < 1e−12`.
    pub decimals_agree: bool,
    pub iterations: u32,
}

impl OptimizedBound {
    pub fn holds(&self) -> bool {
        self.residual_w.is_zero()
            && self.residual_r.is_zero()
            && self.residual_flat.is_zero()
            && !self.radicand_is_square
            && self.search_agrees
            && self.decimals_agree
    }
}

fn inner_min(w: &BigRational) -> BigRational {
    // For fixed w the bound is a ratio of affine functions of n′, hence
    // monotone on [0, 1].
    asymptotic_bound(w, &int(0)).min(asymptotic_bound(w, &int(1)))
}

fn snap(q: BigRational) -> BigRational {
    let scale = BigRational::from_integer(BigInt::from(1) << 96);
    let scaled = &q * &scale;
    BigRational::from_integer(rational::floor(&(scaled + ratio(1, 2)))) / scale
}

fn within(x: &QuadSurd, q: &BigRational, tol: &BigRational) -> bool {
    x.cmp_rational(&(q - tol)) == Ordering::Greater && x.cmp_rational(&(q + tol)) == Ordering::Less
}

/// `max over w ∈ [1, 3/2]` of `min over n′ ∈ [0, 1]` of the asymptotic bound.
pub fn optimize_bound() -> OptimizedBound {
    let d = BigInt::from(RADICAND);
    // (√5 − 1)/2 to well beyond the grid resolution.
    let phi = ratio(6_180_339_887_498_949, 10_000_000_000_000_000);
    let (mut lo, mut hi) = (int(1), ratio(3, 2));
    let mut x1 = snap(&hi - &phi * (&hi - &lo));
    let mut x2 = snap(&lo + &phi * (&hi - &lo));
    let (mut f1, mut f2) = (inner_min(&x1), inner_min(&x2));
    let mut iterations = 0;
    while &hi - &lo > ratio(1, 1_000_000_000_000_000) && iterations < 200 {
        iterations += 1;
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = snap(&lo + &phi * (&hi - &lo));
            f2 = inner_min(&x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = snap(&hi - &phi * (&hi - &lo));
            f1 = inner_min(&x1);
        }
    }
    let w_search = snap((&lo + &hi) / int(2));
    let r_search = inner_min(&w_search);

    let w_star = QuadSurd::new(ratio(-1075, 96), ratio(1, 96), d.clone());
    let r_star = QuadSurd::new(ratio(1363, 120), ratio(-1, 120), d.clone());
    let residual_w = w_star.sub(&r_star.scale(&ratio(-5, 4)).add_rational(&int(3)));
    let den = w_star.scale(&ratio(1, 7)).add_rational(&ratio(8533, 2352));
    let residual_r = QuadSurd::rational(ratio(35, 6), d.clone()).sub(&r_star.mul(&den));
    // numerator − r·denominator = (w − 3 + (5/4)r)·n′ + (35/6 − r(8533/2352 + w/7)).
    let residual_flat = w_star.add_rational(&int(-3)).add(&r_star.scale(&ratio(5, 4)));
    let root = d.sqrt();
    let tol = ratio(1, 1_000_000_000_000);
    let search_agrees = within(&w_star, &w_search, &tol) && within(&r_star, &r_search, &tol);
    let decimals_agree = within(&r_star, &rational::parse("1.5427809064729").unwrap(), &tol)
        && within(&w_star, &rational::parse("1.07152386690879").unwrap(), &tol);
    OptimizedBound {
        w_search,
        r_search,
        radicand_is_square: &root * &root == d,
        w_star,
        r_star,
        residual_w,
        residual_r,
        residual_flat,
        search_agrees,
        decimals_agree,
        iterations,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    #[serde(serialize_with = "serialize_exact")]
    pub w: BigRational,
    #[serde(serialize_with = "serialize_exact")]
    pub n_prime: BigRational,
    #[serde(serialize_with = "serialize_exact")]
    pub bound: BigRational,
}

/// The asymptotic bound on a `(w_steps+1) × (n_steps+1)` grid over
/// `[1, 3/2] × [0, 1]`.
pub fn sweep(w_steps: u32, n_steps: u32) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for i in 0..=w_steps {
        let w = int(1) + ratio(i as i64, 2 * w_steps.max(1) as i64);
        for j in 0..=n_steps {
            let n_prime = ratio(j as i64, n_steps.max(1) as i64);
            rows.push(SweepRow {
                bound: asymptotic_bound(&w, &n_prime),
                w: w.clone(),
                n_prime,
            });
        }
    }
    rows
}

/// The lower bound one run certifies on its own, step by step.
#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    #[serde(serialize_with = "serialize_exact")]
    pub w: BigRational,
    pub weights: WeightPriceCheck,
    pub multipliers: Vec<(Batch, Exact)>,
    pub multipliers_nonnegative: bool,
    /// `Σ multiplier · ALG` over all stopping points.
    #[serde(serialize_with = "serialize_exact")]
    pub alg_combination: BigRational,
    /// `Σ multiplier · OPT upper bound`, using issued counts.
    #[serde(serialize_with = "serialize_exact")]
    pub opt_combination: BigRational,
    /// `alg_combination` equals the price-table bound.
    pub identity_holds: bool,
    /// `W / opt_combination`.
    #[serde(serialize_with = "serialize_exact")]
    pub chain_bound: BigRational,
    #[serde(serialize_with = "serialize_exact")]
    pub max_ratio: BigRational,
    pub max_ratio_at_least_chain: bool,
    #[serde(serialize_with = "serialize_exact")]
    pub n_prime: BigRational,
    #[serde(serialize_with = "serialize_exact")]
    pub finite_t_bound: BigRational,
    /// `chain_bound ≥ finite_t_bound − 1/100`.
    pub chain_near_finite_t: bool,
}

impl ChainReport {
    pub fn holds(&self) -> bool {
        self.weights.holds()
            && self.multipliers_nonnegative
            && self.identity_holds
            && self.max_ratio_at_least_chain
            && self.chain_near_finite_t
    }
}

pub fn inequality_chain(run: &TreeRun, w: &BigRational) -> Result<ChainReport, AnalysisError> {
    check_w(w)?;
    let t = run.params.t;
    let weights = check_weight_price_inequality(run, &WeightSystem::new(t, w.clone())?);
    let stats = run.stats();
    let n_large = run.n_large();
    let mults = multipliers(t, w);
    let alg_combination: BigRational = mults.iter().map(|(b, m)| m * int(stats.cost(*b) as i64)).sum();
    let opt_combination: BigRational = mults
        .iter()
        .map(|(b, m)| m * opt_upper_bound(&run.params, *b, n_large))
        .sum();
    let total = weights.total_weight.eval(w);
    let chain_bound = &total / &opt_combination;
    let max_ratio = stats
        .costs
        .iter()
        .map(|(b, c)| int(*c as i64) / opt_upper_bound(&run.params, *b, n_large))
        .max()
        .expect("at least one stopping point");
    let n_prime = int(n_large as i64) / run.params.n_big();
    let finite_t_bound = bound_finite_t(t, w, &n_prime);
    Ok(ChainReport {
        w: w.clone(),
        multipliers_nonnegative: mults.iter().all(|(_, m)| !m.is_negative()),
        multipliers: mults.iter().map(|(b, m)| (*b, Exact::from(m))).collect(),
        identity_holds: alg_combination == weights.price_bound.eval(w),
        max_ratio_at_least_chain: max_ratio >= chain_bound,
        chain_near_finite_t: chain_bound >= &finite_t_bound - ratio(1, 100),
        weights,
        alg_combination,
        opt_combination,
        chain_bound,
        max_ratio,
        n_prime,
        finite_t_bound,
    })
}

/// Outcome of repeated randomized identity checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityTrials {
    pub t: u32,
    pub trials: u32,
    pub failures: u32,
}

impl IdentityTrials {
    pub fn holds(&self) -> bool {
        self.failures == 0
    }
}

/// [`check_multiplier_identity`] on `trials` random ν vectors with entries
/// up to `10^6`.
pub fn multiplier_identity_trials(t: u32, w: &BigRational, trials: u32, seed: u64) -> IdentityTrials {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let nu: BTreeMap<Batch, u64> = Batch::all(t).into_iter().map(|b| (b, rng.gen_range(0..=1_000_000))).collect();
        let (lhs, rhs) = check_multiplier_identity(t, w, &nu);
        if lhs != rhs {
            failures += 1;
        }
    }
    IdentityTrials { t, trials, failures }
}

/// [`check_rhs_identity`] on `trials` random `(N, n_L)` with `0 <= n_L <= N`.
pub fn rhs_identity_trials(t: u32, w: &BigRational, trials: u32, seed: u64) -> IdentityTrials {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let n: i64 = rng.gen_range(1..=10_000_000);
        let nl: i64 = rng.gen_range(0..=n);
        if !check_rhs_identity(t, w, &int(n), &int(nl)) {
            failures += 1;
        }
    }
    IdentityTrials { t, trials, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t3_multipliers() {
        let w = ratio(5, 4);
        let m = multipliers(3, &w);
        let expect = [
            (Batch::C(3), ratio(1, 7)),
            (Batch::C(2), ratio(13, 7) - &w),
            (Batch::A, w.clone()),
            (Batch::B11, int(1)),
            (Batch::B21, int(1)),
            (Batch::B22, int(1)),
            (Batch::B31, int(1)),
            (Batch::B32, int(1)),
        ];
        assert_eq!(m, expect.to_vec());
        assert_eq!(multipliers(3, &ratio(3, 2))[1].1, ratio(5, 14));
    }

    #[test]
    fn rhs_identity_small_t() {
        for t in 3..=8 {
            assert!(check_rhs_identity(t, &ratio(107, 100), &int(2058), &int(100)));
        }
        // 2133/588 + 1/2352 = 8533/2352.
        assert_eq!(ratio(2133, 588) + ratio(1, 2352), ratio(8533, 2352));
    }

    #[test]
    fn quad_surd_sign() {
        let d = BigInt::from(2);
        assert_eq!(QuadSurd::new(int(-1), int(1), d.clone()).signum(), Ordering::Greater);
        assert_eq!(QuadSurd::new(int(2), int(-1), d.clone()).signum(), Ordering::Greater);
        assert_eq!(QuadSurd::new(int(1), int(-1), d.clone()).signum(), Ordering::Less);
        assert_eq!(QuadSurd::new(int(0), int(0), d.clone()).signum(), Ordering::Equal);
        assert_eq!(QuadSurd::new(int(0), int(1), d).to_decimal(6), "1.414214");
    }

    #[test]
    fn optimum() {
        let o = optimize_bound();
        assert!(o.holds(), "{o:#?}");
        assert!(o.r_star.to_decimal(20).starts_with("1.5427809064729"));
        assert!(o.w_star.to_decimal(20).starts_with("1.07152386690879"));
    }

    #[test]
    fn w_one_is_worse() {
        let o = optimize_bound();
        assert_eq!(o.r_star.cmp_rational(&inner_min(&int(1))), Ordering::Greater);
    }
}
