//! Exhaustive certification of the price table.
//!
//! A bin's price is the weight of its union contents over the three
//! continuations. For every bin type we enumerate the trunk contents and,
//! per continuation, every addition of continuation items, keeping each
//! continuation feasible on its own. A-items take their limit sizes: a fresh
//! bottom-layer atom `η` sits just above the infimum of their size range.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{AnalysisError, Affine, BinType, PriceTable, WeightSystem};
use crate::adversary::ConstructionParams;
use crate::exactnum::{Context, LayeredValue, NumError};
use crate::packing::Batch;
use crate::rational::{floor, int, ratio, to_decimal_string};

/// Item sizes used for enumeration.
#[derive(Clone, Debug)]
pub struct LimitSizes {
    pub t: u32,
    ctx: Context,
    pub gamma: LayeredValue,
    /// `C_2 … C_t`, indexed by `j`.
    c: Vec<BigRational>,
    pub small_a: LayeredValue,
    pub large_a: LayeredValue,
    /// Infima of the A-item size ranges, without `η`.
    pub small_a_inf: LayeredValue,
    pub large_a_inf: LayeredValue,
    pub b11: LayeredValue,
    pub b21: LayeredValue,
    pub b22: LayeredValue,
    pub b31: LayeredValue,
    pub b32: LayeredValue,
}

impl LimitSizes {
    /// `γ = k^(−gamma_exp)` and `η = k^(−gamma_exp−1)`.
    pub fn new(params: &ConstructionParams, gamma_exp: u64) -> Self {
        let t = params.t;
        let one = BigRational::one();
        let gamma = LayeredValue::atom(BigUint::from(gamma_exp), one.clone());
        let eta = LayeredValue::atom(BigUint::from(gamma_exp + 1), one);
        let mut c = vec![BigRational::zero(); t as usize + 1];
        for j in 2..=t {
            c[j as usize] = params.c_size(j);
        }
        let small_a_inf = LayeredValue::rational(params.a_base());
        let large_a_inf = params.a_threshold(&gamma, 4);
        let bump = eta.scale(&ratio(1, 7));
        Self {
            t,
            ctx: params.ctx().clone(),
            c,
            small_a: small_a_inf.add(&bump),
            large_a: large_a_inf.add(&bump),
            small_a_inf,
            large_a_inf,
            b11: params.b_size(Batch::B11, &gamma),
            b21: params.b_size(Batch::B21, &gamma),
            b22: params.b_size(Batch::B22, &gamma),
            b31: params.b_size(Batch::B31, &gamma),
            b32: params.b_size(Batch::B32, &gamma),
            gamma,
        }
    }

    pub fn c(&self, j: u32) -> &BigRational {
        &self.c[j as usize]
    }

    fn b(&self, batch: Batch) -> &LayeredValue {
        match batch {
            Batch::B11 => &self.b11,
            Batch::B21 => &self.b21,
            Batch::B22 => &self.b22,
            Batch::B31 => &self.b31,
            Batch::B32 => &self.b32,
            other => panic!("{other} is not a continuation batch"),
        }
    }

    fn additions_load(&self, adds: &[(Batch, u64)]) -> LayeredValue {
        let mut load = LayeredValue::zero();
        for &(b, n) in adds {
            load.add_assign(&self.b(b).scale_int(n as i64));
        }
        load
    }

    /// Largest `c` with `base + c·C_j ≤ 1`, or `None` if even `c = 0` fails.
    fn max_copies(&self, base: &LayeredValue, j: u32) -> Result<Option<u64>, NumError> {
        let rem = LayeredValue::one().sub(base);
        if self.ctx.sign(&rem)? == std::cmp::Ordering::Less {
            return Ok(None);
        }
        let size = self.c(j);
        let mut c = floor(&(rem.base() / size));
        loop {
            let fits = self
                .ctx
                .le(&LayeredValue::rational(size * BigRational::from_integer(c.clone())), &rem)?;
            if fits {
                break;
            }
            c -= 1;
        }
        Ok(Some(u64::try_from(c).expect("nonnegative count")))
    }
}

/// A candidate union content of one bin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pattern {
    pub bin_type: BinType,
    /// Trunk items as (label, count); A-items appear as `A-large` / `A-small`.
    pub trunk: Vec<(String, u64)>,
    /// Additions per continuation.
    pub branches: Vec<Vec<(String, u64)>>,
    pub price: Affine,
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let part = |v: &[(String, u64)]| {
            v.iter()
                .filter(|(_, n)| *n > 0)
                .map(|(l, n)| format!("{n}×{l}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        write!(f, "[{}]", part(&self.trunk))?;
        for (i, b) in self.branches.iter().enumerate() {
            write!(f, " | {}: [{}]", i + 1, part(b))?;
        }
        write!(f, " = {}", self.price)
    }
}

/// The enumerated supremum price of one bin type.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub bin_type: BinType,
    pub expected: Affine,
    pub max_price: Affine,
    pub witness: Pattern,
    pub patterns_examined: u64,
    pub matches: bool,
}

/// A combination claimed impossible, with its load at the infimum sizes.
#[derive(Clone, Debug, Serialize)]
pub struct ForbiddenCheck {
    pub description: String,
    pub load_decimal: String,
    pub infeasible: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PriceCertification {
    pub t: u32,
    pub gamma_exponent: u64,
    pub table: PriceTable,
    pub certificates: Vec<Certificate>,
    pub forbidden: Vec<ForbiddenCheck>,
}

impl PriceCertification {
    pub fn holds(&self) -> bool {
        self.certificates.iter().all(|c| c.matches) && self.forbidden.iter().all(|f| f.infeasible)
    }

    pub fn price(&self, ty: BinType) -> Option<&Affine> {
        self.certificates.iter().find(|c| c.bin_type == ty).map(|c| &c.max_price)
    }
}

const BRANCH1: [&[(Batch, u64)]; 2] = [&[], &[(Batch::B11, 1)]];

fn pairs(first: Batch, second: Batch, min_first: u64) -> Vec<Vec<(Batch, u64)>> {
    let mut v = Vec::new();
    for a in min_first..=2 {
        for b in 0..=1 {
            v.push(vec![(first, a), (second, b)]);
        }
    }
    v
}

fn labelled(adds: &[(Batch, u64)]) -> Vec<(String, u64)> {
    adds.iter().map(|(b, n)| (b.label(), *n)).collect()
}

fn count(adds: &[(Batch, u64)]) -> u64 {
    adds.iter().map(|(_, n)| n).sum()
}

/// Keeps the larger price, comparing at both ends of `[1, 3/2]`.
struct Best {
    pattern: Option<Pattern>,
    examined: u64,
}

impl Best {
    fn new() -> Self {
        Self {
            pattern: None,
            examined: 0,
        }
    }

    fn offer(&mut self, p: Pattern) {
        self.examined += 1;
        let better = match &self.pattern {
            None => true,
            Some(cur) => {
                let key = |a: &Affine| (a.eval(&int(1)), a.eval(&ratio(3, 2)));
                key(&p.price) > key(&cur.price)
            }
        };
        if better {
            self.pattern = Some(p);
        }
    }

    fn finish(self, bin_type: BinType, expected: &Affine) -> Result<Certificate, AnalysisError> {
        let witness = self.pattern.expect("at least one feasible pattern per type");
        if !witness.price.le_on_range(expected) {
            return Err(AnalysisError::CertificationFailure {
                bin_type: bin_type.to_string(),
                expected: expected.to_string(),
                witness: witness.to_string(),
            });
        }
        Ok(Certificate {
            bin_type,
            expected: expected.clone(),
            max_price: witness.price.clone(),
            matches: &witness.price == expected,
            witness,
            patterns_examined: self.examined,
        })
    }
}

/// Enumerates all union patterns at `t` and checks the enumerated suprema
/// against the closed-form table, along with the impossible combinations
/// the closed forms rest on.
pub fn certify_prices(t: u32) -> Result<PriceCertification, AnalysisError> {
    let params = ConstructionParams::new(t, 1)?;
    let gamma_exp = 5;
    let sizes = LimitSizes::new(&params, gamma_exp);
    let table = PriceTable::closed_form(t);
    let branch2 = pairs(Batch::B21, Batch::B22, 0);
    let branch3 = pairs(Batch::B31, Batch::B32, 0);

    let mut certificates = Vec::new();
    for j in (2..=t).rev() {
        certificates.push(certify_level(&sizes, j, &branch2, &branch3)?.finish(BinType::Level(j), table.get(BinType::Level(j)))?);
    }
    certificates.push(certify_type1(&sizes, &branch2, &branch3)?.finish(BinType::Level(1), table.get(BinType::Level(1)))?);
    certificates.push(certify_double(&sizes)?.finish(BinType::Double, &table.double)?);
    certificates.push(certify_single(&sizes)?.finish(BinType::Single, &table.single)?);

    Ok(PriceCertification {
        t,
        gamma_exponent: gamma_exp,
        table,
        certificates,
        forbidden: forbidden_checks(&sizes)?,
    })
}

/// Type `j >= 2`: trunk holds at least one `C_j`, any `C_i` with `i < j`,
/// and small A-items. For a fixed rest of the trunk and fixed additions, the
/// best pattern takes as many `C_j` as every continuation allows.
fn certify_level(
    sizes: &LimitSizes,
    j: u32,
    branch2: &[Vec<(Batch, u64)>],
    branch3: &[Vec<(Batch, u64)>],
) -> Result<Best, NumError> {
    let t = sizes.t;
    let cj = sizes.c(j).clone();
    let mut best = Best::new();

    // Rest-of-trunk configurations: counts of C_2..C_{j−1}, then small A.
    let mut configs: Vec<(Vec<u64>, LayeredValue)> = Vec::new();
    let mut stack = vec![(2u32, Vec::<u64>::new(), BigRational::zero())];
    let limit = int(1) - &cj;
    while let Some((i, counts, load)) = stack.pop() {
        if i == j {
            let mut s = 0u64;
            loop {
                let l = LayeredValue::rational(load.clone()).add(&sizes.small_a.scale_int(s as i64));
                if sizes.ctx.gt(&l, &LayeredValue::rational(limit.clone()))? {
                    break;
                }
                let mut c = counts.clone();
                c.push(s);
                configs.push((c, l));
                s += 1;
            }
            continue;
        }
        let size = sizes.c(i);
        let mut n = 0u64;
        loop {
            let l = &load + size * int(n as i64);
            if l > limit {
                break;
            }
            let mut c = counts.clone();
            c.push(n);
            stack.push((i + 1, c, l));
            n += 1;
        }
    }

    let adds1: Vec<Vec<(Batch, u64)>> = BRANCH1.iter().map(|a| a.to_vec()).collect();
    let weight_j = WeightSystem::weight_affine(t, Batch::C(j), false);
    for (counts, load) in configs {
        let per_branch = |sets: &[Vec<(Batch, u64)>]| -> Result<Vec<Option<u64>>, NumError> {
            sets.iter()
                .map(|a| sizes.max_copies(&load.add(&sizes.additions_load(a)), j))
                .collect()
        };
        let m1 = per_branch(&adds1)?;
        let m2 = per_branch(branch2)?;
        let m3 = per_branch(branch3)?;
        let mut rest_weight = Affine::default();
        for (idx, n) in counts[..counts.len() - 1].iter().enumerate() {
            let w = WeightSystem::weight_affine(t, Batch::C(idx as u32 + 2), false).scale(&int(*n as i64));
            rest_weight = &rest_weight + &w;
        }
        let s = *counts.last().unwrap();
        rest_weight = &rest_weight + &Affine::constant(int(s as i64));

        for (a1, x1) in adds1.iter().zip(&m1) {
            for (a2, x2) in branch2.iter().zip(&m2) {
                for (a3, x3) in branch3.iter().zip(&m3) {
                    let (Some(x1), Some(x2), Some(x3)) = (x1, x2, x3) else { continue };
                    let c = *x1.min(x2).min(x3);
                    if c == 0 {
                        continue;
                    }
                    let price = &(&rest_weight + &weight_j.scale(&int(c as i64)))
                        + &Affine::constant(int((count(a1) + count(a2) + count(a3)) as i64));
                    let mut trunk: Vec<(String, u64)> = vec![(Batch::C(j).label(), c)];
                    for (idx, n) in counts[..counts.len() - 1].iter().enumerate().rev() {
                        trunk.push((Batch::C(idx as u32 + 2).label(), *n));
                    }
                    trunk.push(("A-small".into(), s));
                    best.offer(Pattern {
                        bin_type: BinType::Level(j),
                        trunk,
                        branches: vec![labelled(a1), labelled(a2), labelled(a3)],
                        price,
                    });
                }
            }
        }
    }
    Ok(best)
}

/// Type 1: one large A-item first, then small A-items, then additions.
fn certify_type1(sizes: &LimitSizes, branch2: &[Vec<(Batch, u64)>], branch3: &[Vec<(Batch, u64)>]) -> Result<Best, NumError> {
    let ctx = &sizes.ctx;
    let one = LayeredValue::one();
    let mut best = Best::new();
    let adds1: Vec<Vec<(Batch, u64)>> = BRANCH1.iter().map(|a| a.to_vec()).collect();
    for s in 0..=6u64 {
        let trunk_load = sizes.large_a.add(&sizes.small_a.scale_int(s as i64));
        if ctx.gt(&trunk_load, &one)? {
            break;
        }
        let feasible = |sets: &[Vec<(Batch, u64)>]| -> Result<Vec<bool>, NumError> {
            sets.iter()
                .map(|a| ctx.le(&trunk_load.add(&sizes.additions_load(a)), &one))
                .collect()
        };
        let f1 = feasible(&adds1)?;
        let f2 = feasible(branch2)?;
        let f3 = feasible(branch3)?;
        for (a1, _) in adds1.iter().zip(&f1).filter(|(_, ok)| **ok) {
            for (a2, _) in branch2.iter().zip(&f2).filter(|(_, ok)| **ok) {
                for (a3, _) in branch3.iter().zip(&f3).filter(|(_, ok)| **ok) {
                    let price = Affine::new(int((s + count(a1) + count(a2) + count(a3)) as i64), int(1));
                    best.offer(Pattern {
                        bin_type: BinType::Level(1),
                        trunk: vec![("A-large".into(), 1), ("A-small".into(), s)],
                        branches: vec![labelled(a1), labelled(a2), labelled(a3)],
                        price,
                    });
                }
            }
        }
    }
    Ok(best)
}

/// Double bins are opened by `B21` or `B31` and only live in one
/// continuation.
fn certify_double(sizes: &LimitSizes) -> Result<Best, NumError> {
    let mut best = Best::new();
    for (idx, (first, second)) in [(1usize, (Batch::B21, Batch::B22)), (2, (Batch::B31, Batch::B32))] {
        for adds in pairs(first, second, 1) {
            if sizes.ctx.le(&sizes.additions_load(&adds), &LayeredValue::one())? {
                let mut branches = vec![Vec::new(); 3];
                branches[idx] = labelled(&adds);
                best.offer(Pattern {
                    bin_type: BinType::Double,
                    trunk: Vec::new(),
                    price: Affine::constant(int(count(&adds) as i64)),
                    branches,
                });
            }
        }
    }
    Ok(best)
}

/// Single bins are opened by an item above 1/2, after which only items
/// above 1/2 (or nothing) can arrive in the same continuation.
fn certify_single(sizes: &LimitSizes) -> Result<Best, NumError> {
    let mut best = Best::new();
    for (idx, b) in [(0usize, Batch::B11), (1, Batch::B22), (2, Batch::B32)] {
        for n in 1..=2u64 {
            let adds = [(b, n)];
            if sizes.ctx.le(&sizes.additions_load(&adds), &LayeredValue::one())? {
                let mut branches = vec![Vec::new(); 3];
                branches[idx] = labelled(&adds);
                best.offer(Pattern {
                    bin_type: BinType::Single,
                    trunk: Vec::new(),
                    price: Affine::constant(int(n as i64)),
                    branches,
                });
            }
        }
    }
    Ok(best)
}

fn forbidden_checks(sizes: &LimitSizes) -> Result<Vec<ForbiddenCheck>, NumError> {
    let t = sizes.t;
    let unit = 7u64.pow(t - 2);
    let mut cases: Vec<(String, LayeredValue)> = Vec::new();

    let ct = sizes.c(t).clone();
    let c_load = |n: u64, c: &BigRational| LayeredValue::rational(c * int(n as i64));
    let mut with = |label: String, base: LayeredValue, adds: &[(Batch, u64)]| {
        let adds_label: Vec<String> = adds.iter().map(|(b, n)| format!("{n}×{b}")).collect();
        cases.push((format!("{label} + {}", adds_label.join(" + ")), base.add(&sizes.additions_load(adds))));
    };
    for (mult, adds) in [
        (12, vec![(Batch::B31, 2)]),
        (14, vec![(Batch::B21, 2)]),
        (21, vec![(Batch::B11, 1)]),
        (28, vec![(Batch::B21, 1)]),
        (28, vec![(Batch::B31, 1)]),
    ] {
        let n = mult * unit + 1;
        with(format!("{n}×C{t}"), c_load(n, &ct), &adds);
    }
    for k in 2..t {
        let ck = sizes.c(k).clone();
        let pk = 7u64.pow(k);
        for (n, adds) in [
            (2 * pk / 7, vec![(Batch::B31, 2)]),
            (pk.div_ceil(3), vec![(Batch::B21, 2)]),
            (pk.div_ceil(2), vec![(Batch::B11, 1)]),
            ((9 * pk / 7).div_ceil(2), vec![(Batch::B31, 1)]),
            ((2 * pk + 1) / 3, vec![(Batch::B21, 1)]),
        ] {
            with(format!("{n}×C{k}"), c_load(n, &ck), &adds);
        }
    }
    let pair = sizes.small_a_inf.add(&sizes.large_a_inf);
    with("1×A-small + 1×A-large".into(), pair, &[(Batch::B31, 2)]);
    let four = sizes.large_a_inf.add(&sizes.small_a_inf.scale_int(4));
    with("4×A-small + 1×A-large".into(), four, &[(Batch::B21, 1)]);
    for b in [Batch::B11, Batch::B22, Batch::B32] {
        with(String::new(), LayeredValue::zero(), &[(b, 2)]);
    }
    with(String::new(), LayeredValue::zero(), &[(Batch::B21, 2), (Batch::B22, 1)]);
    with(String::new(), LayeredValue::zero(), &[(Batch::B31, 2), (Batch::B32, 1)]);

    cases
        .into_iter()
        .map(|(description, load)| {
            Ok(ForbiddenCheck {
                description: description.trim_start_matches(" + ").to_string(),
                load_decimal: to_decimal_string(load.base(), 12),
                infeasible: sizes.ctx.gt(&load, &LayeredValue::one())?,
            })
        })
        .collect()
}
