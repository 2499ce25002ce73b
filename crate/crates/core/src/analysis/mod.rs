//! Weights, bin types and prices, and the bound they imply.

mod bound;
mod certify;

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Sub};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::adversary::TreeRun;
use crate::packing::{Batch, Branch};
use crate::rational::{int, pow, ratio, Exact};

pub use bound::{
    asymptotic_bound, bound_finite_t, check_multiplier_identity, check_rhs_identity, inequality_chain,
    multiplier_identity_trials, multipliers, optimize_bound, rhs_coefficient, rhs_identity_trials, sweep, ChainReport,
    IdentityTrials, OptimizedBound, QuadSurd, SweepRow, RADICAND,
};
pub use certify::{certify_prices, Certificate, ForbiddenCheck, LimitSizes, Pattern, PriceCertification};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("w = {0} lies outside [1, 3/2]")]
    WeightOutOfRange(String),
    #[error("price of {bin_type} exceeds its closed form {expected}: {witness}")]
    CertificationFailure {
        bin_type: String,
        expected: String,
        witness: String,
    },
    #[error(transparent)]
    Params(#[from] crate::adversary::ParamError),
    #[error(transparent)]
    Num(#[from] crate::NumError),
}

/// `c0 + cw·w`, the form every weight and price takes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Affine {
    pub c0: BigRational,
    pub cw: BigRational,
}

impl Affine {
    pub fn constant(c0: BigRational) -> Self {
        Self { c0, cw: BigRational::zero() }
    }

    pub fn w() -> Self {
        Self {
            c0: BigRational::zero(),
            cw: int(1),
        }
    }

    pub fn new(c0: BigRational, cw: BigRational) -> Self {
        Self { c0, cw }
    }

    pub fn eval(&self, w: &BigRational) -> BigRational {
        &self.c0 + &self.cw * w
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Self::new(&self.c0 * q, &self.cw * q)
    }

    /// `self <= other` for every `w` in `[1, 3/2]`.
    pub fn le_on_range(&self, other: &Affine) -> bool {
        self.eval(&int(1)) <= other.eval(&int(1)) && self.eval(&ratio(3, 2)) <= other.eval(&ratio(3, 2))
    }
}

impl Add for &Affine {
    type Output = Affine;
    fn add(self, rhs: &Affine) -> Affine {
        Affine::new(&self.c0 + &rhs.c0, &self.cw + &rhs.cw)
    }
}

impl Sub for &Affine {
    type Output = Affine;
    fn sub(self, rhs: &Affine) -> Affine {
        Affine::new(&self.c0 - &rhs.c0, &self.cw - &rhs.cw)
    }
}

impl<'a> std::iter::Sum<&'a Affine> for Affine {
    fn sum<I: Iterator<Item = &'a Affine>>(iter: I) -> Self {
        iter.fold(Affine::default(), |acc, x| &acc + x)
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c0 = crate::rational::to_fraction_string(&self.c0);
        if self.cw.is_zero() {
            return f.write_str(&c0);
        }
        let cw = if self.cw == int(1) {
            "w".to_string()
        } else {
            format!("{}·w", crate::rational::to_fraction_string(&self.cw))
        };
        if self.c0.is_zero() {
            f.write_str(&cw)
        } else if self.c0.is_negative() {
            write!(f, "{cw} - {}", crate::rational::to_fraction_string(&-&self.c0))
        } else {
            write!(f, "{cw} + {c0}")
        }
    }
}

impl Serialize for Affine {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Form {
            form: String,
            constant: Exact,
            w_coefficient: Exact,
        }
        Form {
            form: self.to_string(),
            constant: Exact::from(&self.c0),
            w_coefficient: Exact::from(&self.cw),
        }
        .serialize(s)
    }
}

/// Item weights for `t` levels with the large A-item weight `w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightSystem {
    pub t: u32,
    pub w: BigRational,
}

impl WeightSystem {
    pub fn new(t: u32, w: BigRational) -> Result<Self, AnalysisError> {
        check_w(&w)?;
        Ok(Self { t, w })
    }

    /// The weight as a function of `w`.
    pub fn weight_affine(t: u32, batch: Batch, large: bool) -> Affine {
        match batch {
            Batch::C(j) if j == t => Affine::constant(int(1) / (int(6) * pow(7, t - 2))),
            Batch::C(j) => Affine::constant(int(1) / pow(7, j - 1)),
            Batch::A if large => Affine::w(),
            _ => Affine::constant(int(1)),
        }
    }

    pub fn weight(&self, batch: Batch, large: bool) -> BigRational {
        Self::weight_affine(self.t, batch, large).eval(&self.w)
    }

    /// One item of each trunk batch weighs `1/6` in total.
    pub fn trunk_identity_holds(t: u32) -> bool {
        let sum: BigRational = (2..=t).map(|j| Self::weight_affine(t, Batch::C(j), false).c0).sum();
        sum == ratio(1, 6)
    }
}

pub fn check_w(w: &BigRational) -> Result<(), AnalysisError> {
    if *w < int(1) || *w > ratio(3, 2) {
        return Err(AnalysisError::WeightOutOfRange(crate::rational::to_fraction_string(w)));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinType {
    /// Type `j`: smallest item class present is `C_j` (`2 <= j`), or `1`
    /// for bins whose smallest items are A-items.
    Level(u32),
    Double,
    Single,
}

impl fmt::Display for BinType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinType::Level(j) => write!(f, "type {j}"),
            BinType::Double => f.write_str("double"),
            BinType::Single => f.write_str("single"),
        }
    }
}

impl Serialize for BinType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// The type of a bin from the batches of its union contents.
pub fn classify_bin(batches: impl IntoIterator<Item = Batch>) -> Option<BinType> {
    let mut level = None;
    let mut has_a = false;
    let mut has_double = false;
    let mut any = false;
    for b in batches {
        any = true;
        match b {
            Batch::C(j) => level = Some(level.map_or(j, |l: u32| l.max(j))),
            Batch::A => has_a = true,
            Batch::B21 | Batch::B31 => has_double = true,
            _ => {}
        }
    }
    if !any {
        return None;
    }
    Some(match (level, has_a, has_double) {
        (Some(j), _, _) => BinType::Level(j),
        (None, true, _) => BinType::Level(1),
        (None, false, true) => BinType::Double,
        (None, false, false) => BinType::Single,
    })
}

/// The type a bin gets from the batch that opened it.
pub fn type_of_opener(batch: Batch) -> BinType {
    match batch {
        Batch::C(j) => BinType::Level(j),
        Batch::A => BinType::Level(1),
        Batch::B21 | Batch::B31 => BinType::Double,
        Batch::B11 | Batch::B22 | Batch::B32 => BinType::Single,
    }
}

/// Supremum prices per bin type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PriceTable {
    pub t: u32,
    /// `W_1 … W_t`.
    pub levels: Vec<Affine>,
    pub double: Affine,
    pub single: Affine,
}

impl PriceTable {
    /// `W_1 = w + 5`, `W_j = 7 − 1/7^(j−1)` for `2 <= j < t`, `W_t = 7`,
    /// `W_d = 2`, `W_s = 1`.
    pub fn closed_form(t: u32) -> Self {
        let mut levels = vec![Affine::new(int(5), int(1))];
        for j in 2..t {
            levels.push(Affine::constant(int(7) - int(1) / pow(7, j - 1)));
        }
        levels.push(Affine::constant(int(7)));
        Self {
            t,
            levels,
            double: Affine::constant(int(2)),
            single: Affine::constant(int(1)),
        }
    }

    pub fn get(&self, ty: BinType) -> &Affine {
        match ty {
            BinType::Level(j) => &self.levels[j as usize - 1],
            BinType::Double => &self.double,
            BinType::Single => &self.single,
        }
    }
}

/// One bin of the algorithm with its union contents priced.
#[derive(Clone, Debug, Serialize)]
pub struct BinPrice {
    pub bin: usize,
    /// `None` for trunk bins, otherwise the continuation that opened it.
    pub branch: Option<Branch>,
    pub bin_type: BinType,
    pub items: usize,
    pub realized: Affine,
    pub table: Affine,
}

/// Union contents of every bin across all continuations, with prices.
pub fn bin_prices(run: &TreeRun) -> Vec<BinPrice> {
    let t = run.params.t;
    let table = PriceTable::closed_form(t);
    let large: HashSet<usize> = run
        .trunk_packing
        .bins()
        .iter()
        .filter(|b| b.opened_by == Batch::A)
        .map(|b| b.contents[0])
        .collect();
    let price_of = |ids: &[usize]| -> (Option<BinType>, Affine) {
        let ty = classify_bin(ids.iter().map(|&i| run.items[i].batch));
        let price = ids
            .iter()
            .map(|&i| WeightSystem::weight_affine(t, run.items[i].batch, large.contains(&i)))
            .collect::<Vec<_>>();
        (ty, price.iter().sum())
    };

    let mut out = Vec::new();
    for (i, tb) in run.trunk_packing.bins().iter().enumerate() {
        let mut ids = tb.contents.clone();
        for bp in &run.branch_packings {
            ids.extend_from_slice(&bp.bins()[i].contents[tb.contents.len()..]);
        }
        let (ty, realized) = price_of(&ids);
        let ty = ty.expect("trunk bins are nonempty");
        out.push(BinPrice {
            bin: i,
            branch: None,
            bin_type: ty,
            items: ids.len(),
            table: table.get(ty).clone(),
            realized,
        });
    }
    for (bp, branch) in run.branch_packings.iter().zip(Branch::CONTINUATIONS) {
        for b in &bp.bins()[run.trunk_packing.len()..] {
            let (ty, realized) = price_of(&b.contents);
            let ty = ty.expect("bins are nonempty");
            out.push(BinPrice {
                bin: b.id,
                branch: Some(branch),
                bin_type: ty,
                items: b.contents.len(),
                table: table.get(ty).clone(),
                realized,
            });
        }
    }
    out
}

/// Total weight, total realized price and the price-table bound of one run.
#[derive(Clone, Debug, Serialize)]
pub struct WeightPriceCheck {
    pub total_weight: Affine,
    pub price_sum: Affine,
    /// `Σ W_j ν_j + W_d(ν_21+ν_31) + W_s(ν_11+ν_22+ν_32)`.
    pub price_bound: Affine,
    /// Total weight from the issued counts: `w·n_L + (N−n_L) + N/6 + N/3 + 2N + n_31 + n_32`.
    pub weight_from_counts: Affine,
    pub weight_equals_price_sum: bool,
    pub weight_matches_counts: bool,
    /// Every bin's type agrees with the batch that opened it.
    pub types_match_openers: bool,
    /// Every bin's realized price is at most its table price on all of `[1, 3/2]`.
    pub per_bin_within_table: bool,
    pub bound_holds: bool,
    /// `price_bound − total_weight` at the requested `w`.
    #[serde(serialize_with = "crate::rational::serialize_exact")]
    pub slack: BigRational,
    /// The bin with the least per-bin slack at the requested `w`.
    pub tightest_bin: Option<BinPrice>,
}

impl WeightPriceCheck {
    pub fn holds(&self) -> bool {
        self.weight_equals_price_sum
            && self.weight_matches_counts
            && self.types_match_openers
            && self.per_bin_within_table
            && self.bound_holds
    }
}

pub fn check_weight_price_inequality(run: &TreeRun, weights: &WeightSystem) -> WeightPriceCheck {
    let t = run.params.t;
    let table = PriceTable::closed_form(t);
    let prices = bin_prices(run);
    let large: HashSet<usize> = run
        .trunk_packing
        .bins()
        .iter()
        .filter(|b| b.opened_by == Batch::A)
        .map(|b| b.contents[0])
        .collect();
    let total_weight: Affine = run
        .items
        .iter()
        .map(|i| WeightSystem::weight_affine(t, i.batch, large.contains(&i.id)))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let price_sum: Affine = prices.iter().map(|p| &p.realized).sum();

    let stats = run.stats();
    let mut price_bound = Affine::default();
    for (batch, nu) in &stats.nu {
        price_bound = &price_bound + &table.get(type_of_opener(*batch)).scale(&int(*nu as i64));
    }

    let n = run.params.n_big();
    let nl = int(run.n_large() as i64);
    let c = &run.counts;
    let weight_from_counts = Affine::new(
        &n - &nl + &n / int(6) + &n / int(3) + int(2) * &n + int(c.b31 as i64) + int(c.b32 as i64),
        nl.clone(),
    );

    let openers = {
        let mut v: Vec<BinType> = run.trunk_packing.bins().iter().map(|b| type_of_opener(b.opened_by)).collect();
        for bp in &run.branch_packings {
            v.extend(bp.bins()[run.trunk_packing.len()..].iter().map(|b| type_of_opener(b.opened_by)));
        }
        v
    };
    let types_match_openers = openers.len() == prices.len() && openers.iter().zip(&prices).all(|(o, p)| *o == p.bin_type);
    let per_bin_within_table = prices.iter().all(|p| p.realized.le_on_range(&p.table));
    let bound_holds = total_weight.le_on_range(&price_bound);
    let w = &weights.w;
    let tightest_bin = prices
        .iter()
        .min_by(|a, b| (a.table.eval(w) - a.realized.eval(w)).cmp(&(b.table.eval(w) - b.realized.eval(w))))
        .cloned();
    WeightPriceCheck {
        weight_equals_price_sum: total_weight == price_sum,
        weight_matches_counts: total_weight == weight_from_counts,
        slack: price_bound.eval(w) - total_weight.eval(w),
        total_weight,
        price_sum,
        price_bound,
        weight_from_counts,
        types_match_openers,
        per_bin_within_table,
        bound_holds,
        tightest_bin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_and_identity() {
        assert!((3..=10).all(WeightSystem::trunk_identity_holds));
        let ws = WeightSystem::new(3, ratio(5, 4)).unwrap();
        assert_eq!(ws.weight(Batch::C(3), false), ratio(1, 42));
        assert_eq!(ws.weight(Batch::C(2), false), ratio(1, 7));
        assert_eq!(ws.weight(Batch::A, true), ratio(5, 4));
        assert_eq!(ws.weight(Batch::A, false), int(1));
        assert!(WeightSystem::new(3, ratio(8, 5)).is_err());
        assert!(WeightSystem::new(3, ratio(99, 100)).is_err());
    }

    #[test]
    fn bin_types() {
        assert_eq!(classify_bin([Batch::C(2), Batch::B11]), Some(BinType::Level(2)));
        assert_eq!(classify_bin([Batch::C(2), Batch::C(3), Batch::A]), Some(BinType::Level(3)));
        assert_eq!(
            classify_bin([Batch::A, Batch::B11, Batch::B21, Batch::B22, Batch::B31, Batch::B31]),
            Some(BinType::Level(1))
        );
        assert_eq!(classify_bin([Batch::B31, Batch::B32]), Some(BinType::Double));
        assert_eq!(classify_bin([Batch::B32]), Some(BinType::Single));
        assert_eq!(classify_bin([]), None);
    }

    #[test]
    fn example_bin_price() {
        let batches = [Batch::A, Batch::B11, Batch::B21, Batch::B22, Batch::B31, Batch::B31];
        let price: Affine = batches
            .iter()
            .enumerate()
            .map(|(i, b)| WeightSystem::weight_affine(3, *b, i == 0))
            .collect::<Vec<_>>()
            .iter()
            .sum();
        assert_eq!(price, Affine::new(int(5), int(1)));
        assert_eq!(price.to_string(), "w + 5");
        let c3: Affine = vec![WeightSystem::weight_affine(3, Batch::C(3), false); 294].iter().sum();
        assert_eq!(c3, Affine::constant(int(7)));
    }

    #[test]
    fn closed_form_table() {
        let t = PriceTable::closed_form(4);
        assert_eq!(t.get(BinType::Level(2)), &Affine::constant(ratio(48, 7)));
        assert_eq!(t.get(BinType::Level(3)), &Affine::constant(ratio(342, 49)));
        assert_eq!(t.get(BinType::Level(4)), &Affine::constant(int(7)));
        assert_eq!(t.get(BinType::Level(1)).to_string(), "w + 5");
    }
}
