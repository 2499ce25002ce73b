//! Offline packings that certify upper bounds on the optimal cost at every
//! stopping point, plus a small exact solver used as an oracle.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::adversary::ConstructionParams;
use crate::exactnum::{Context, LayeredValue, NumError};
use crate::packing::{Batch, Item};
use crate::rational::{int, pow, ratio};

#[derive(Debug, Error)]
pub enum OptError {
    #[error("constructed bin {bin} at {at} has load {load} above its limit {limit}")]
    InfeasibleConstruction {
        at: Batch,
        bin: usize,
        load: String,
        limit: String,
    },
    #[error("item coverage broken at {at}: {detail}")]
    Coverage { at: Batch, detail: String },
    #[error("exact search takes at most {max} items, got {got}")]
    TooManyItems { max: usize, got: usize },
    #[error(transparent)]
    Num(#[from] NumError),
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// The bound on the optimal cost in closed form, without any rounding.
pub fn opt_formula(params: &ConstructionParams, at: Batch, n_large: u64) -> BigRational {
    opt_formula_for(&params.n_big(), &int(n_large as i64), at)
}

/// [`opt_formula`] for arbitrary (rational) `N` and `n_L`.
pub fn opt_formula_for(n: &BigRational, nl: &BigRational, at: Batch) -> BigRational {
    match at {
        Batch::C(j) => n / (int(6) * pow(7, j - 1)),
        Batch::A => n / int(6),
        Batch::B11 => n / int(3),
        Batch::B21 => n / int(2),
        Batch::B22 => n.clone(),
        Batch::B31 => (int(7) * n - int(5) * nl) / int(12),
        Batch::B32 => (int(7) * n - int(5) * nl) / int(6),
    }
}

/// The number of bins used by [`construct_solution`] when the branch counts
/// are the floored ones: the closed form with a ceiling per group of bins.
pub fn opt_upper_bound(params: &ConstructionParams, at: Batch, n_large: u64) -> BigRational {
    let n = params.n;
    let rest = n - n_large;
    let bins = match at {
        Batch::B31 => ceil_div(n_large, 6) + ceil_div(rest, 2) + ceil_div(rest, 12),
        Batch::B32 => ceil_div(n_large, 3) + rest + ceil_div(rest, 6),
        other => return opt_formula(params, other, n_large),
    };
    int(bins as i64)
}

/// Where a constructed bin draws its items from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Pool {
    Batch(Batch),
    LargeA,
    SmallA,
}

struct Group {
    bins: u64,
    parts: Vec<(Pool, u64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OfflineSolution {
    pub at: Batch,
    /// Item ids per bin.
    pub bins: Vec<Vec<usize>>,
}

impl OfflineSolution {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

fn trunk_parts(t: u32, each: u64, a: Option<Pool>) -> Vec<(Pool, u64)> {
    let mut parts: Vec<(Pool, u64)> = (2..=t).map(|j| (Pool::Batch(Batch::C(j)), each)).collect();
    if let Some(a) = a {
        parts.push((a, each));
    }
    parts
}

/// Packs `items` (everything presented up to stopping point `at`) into bins
/// following the fixed templates, then validates every bin and the coverage
/// exactly. `gamma` is the run's `γ`; A-items are split into large and small
/// by comparison with `(1+ε+2γ)/7`.
pub fn construct_solution(
    params: &ConstructionParams,
    at: Batch,
    items: &[&Item],
    n_large: u64,
    gamma: &LayeredValue,
) -> Result<OfflineSolution, OptError> {
    let ctx = params.ctx();
    let t = params.t;
    let n = params.n;
    let rest = n - n_large;
    let split_a = matches!(at, Batch::B31 | Batch::B32);

    let mut pools: BTreeMap<Pool, VecDeque<usize>> = BTreeMap::new();
    let separator = params.a_threshold(gamma, 2);
    for item in items {
        let pool = match item.batch {
            Batch::A if split_a => {
                if ctx.gt(&item.size, &separator)? {
                    Pool::LargeA
                } else {
                    Pool::SmallA
                }
            }
            b => Pool::Batch(b),
        };
        pools.entry(pool).or_default().push_back(item.id);
    }

    let a = Some(Pool::Batch(Batch::A));
    let groups: Vec<Group> = match at {
        Batch::C(j) => {
            let per = 6 * 7u64.pow(j - 1);
            let mut parts: Vec<(Pool, u64)> = (j..=t).map(|i| (Pool::Batch(Batch::C(i)), per)).collect();
            parts.sort();
            vec![Group { bins: n / per, parts }]
        }
        Batch::A => vec![Group {
            bins: n / 6,
            parts: trunk_parts(t, 6, a),
        }],
        Batch::B11 => {
            let mut parts = trunk_parts(t, 3, a);
            parts.push((Pool::Batch(Batch::B11), 1));
            vec![Group { bins: n / 3, parts }]
        }
        Batch::B21 => {
            let mut parts = trunk_parts(t, 2, a);
            parts.push((Pool::Batch(Batch::B21), 2));
            vec![Group { bins: n / 2, parts }]
        }
        Batch::B22 => {
            let mut parts = trunk_parts(t, 1, a);
            parts.push((Pool::Batch(Batch::B21), 1));
            parts.push((Pool::Batch(Batch::B22), 1));
            vec![Group { bins: n, parts }]
        }
        Batch::B31 => {
            let b31 = Pool::Batch(Batch::B31);
            let mut g3 = trunk_parts(t, 12, None);
            g3.push((b31, 2));
            vec![
                Group {
                    bins: ceil_div(n_large, 6),
                    parts: trunk_parts(t, 6, Some(Pool::LargeA)),
                },
                Group {
                    bins: ceil_div(rest, 2),
                    parts: vec![(b31, 2), (Pool::SmallA, 2)],
                },
                Group {
                    bins: ceil_div(rest, 12),
                    parts: g3,
                },
            ]
        }
        Batch::B32 => {
            let b31 = Pool::Batch(Batch::B31);
            let b32 = Pool::Batch(Batch::B32);
            let mut g1 = trunk_parts(t, 3, Some(Pool::LargeA));
            g1.push((b32, 1));
            let mut g3 = trunk_parts(t, 6, None);
            g3.push((b31, 1));
            g3.push((b32, 1));
            vec![
                Group {
                    bins: ceil_div(n_large, 3),
                    parts: g1,
                },
                Group {
                    bins: rest,
                    parts: vec![(b31, 1), (Pool::SmallA, 1), (b32, 1)],
                },
                Group {
                    bins: ceil_div(rest, 6),
                    parts: g3,
                },
            ]
        }
    };

    let mut bins: Vec<Vec<usize>> = Vec::new();
    for group in &groups {
        for _ in 0..group.bins {
            let mut bin = Vec::new();
            for &(pool, count) in &group.parts {
                if let Some(q) = pools.get_mut(&pool) {
                    for _ in 0..count {
                        match q.pop_front() {
                            Some(id) => bin.push(id),
                            None => break,
                        }
                    }
                }
            }
            if !bin.is_empty() {
                bins.push(bin);
            }
        }
    }
    for q in pools.values_mut() {
        bins.extend(q.drain(..).map(|id| vec![id]));
    }

    let solution = OfflineSolution { at, bins };
    validate(params, &solution, items, gamma)?;
    Ok(solution)
}

/// Exact per-bin feasibility and exact coverage of `items`. At the `B31`
/// point every bin must stay at or below `1 − γ/7`.
pub fn validate(
    params: &ConstructionParams,
    solution: &OfflineSolution,
    items: &[&Item],
    gamma: &LayeredValue,
) -> Result<(), OptError> {
    let ctx = params.ctx();
    let at = solution.at;
    let limit = if at == Batch::B31 {
        LayeredValue::one().sub(&gamma.scale(&ratio(1, 7)))
    } else {
        LayeredValue::one()
    };
    let by_id: BTreeMap<usize, &Item> = items.iter().map(|i| (i.id, *i)).collect();
    let mut seen = std::collections::HashSet::new();
    for (b, bin) in solution.bins.iter().enumerate() {
        let mut load = LayeredValue::zero();
        for id in bin {
            let item = by_id.get(id).ok_or_else(|| OptError::Coverage {
                at,
                detail: format!("item {id} was not presented"),
            })?;
            if !seen.insert(*id) {
                return Err(OptError::Coverage {
                    at,
                    detail: format!("item {id} packed twice"),
                });
            }
            load.add_assign(&item.size);
        }
        if !ctx.le(&load, &limit)? {
            return Err(OptError::InfeasibleConstruction {
                at,
                bin: b,
                load: load.to_string(),
                limit: limit.to_string(),
            });
        }
    }
    if seen.len() != items.len() {
        return Err(OptError::Coverage {
            at,
            detail: format!("{} of {} items packed", seen.len(), items.len()),
        });
    }
    Ok(())
}

/// `N/(6·7^(t−1))`, after checking `C_t > 1/(6·7^(t−1)+1)` exactly, so that
/// no bin takes more than `6·7^(t−1)` items of the first batch.
pub fn first_batch_opt_lower(params: &ConstructionParams) -> Option<BigRational> {
    let cap = params.first_batch_capacity();
    if params.c_size(params.t) > ratio(1, cap as i64 + 1) {
        Some(params.n_big() / int(cap as i64))
    } else {
        None
    }
}

/// Whether `294·2058^(−t) < 1/(6·7^(t−1)) − 1/(6·7^(t−1)+1)`, the margin
/// behind [`first_batch_opt_lower`] for every admissible `ε`.
pub fn first_batch_margin_holds(t: u32) -> bool {
    let cap = BigInt::from(6) * num_traits::pow(BigInt::from(7), (t - 1) as usize);
    let lhs = int(294) / pow(2058, t);
    let rhs = BigRational::new(1.into(), cap.clone()) - BigRational::new(1.into(), cap + 1);
    lhs < rhs
}

/// Result of building and validating one offline packing.
#[derive(Clone, Debug, Serialize)]
pub struct ConstructionCheck {
    pub n_large: u64,
    pub at: Batch,
    pub bins: usize,
    #[serde(serialize_with = "crate::rational::serialize_exact")]
    pub formula: BigRational,
    #[serde(serialize_with = "crate::rational::serialize_exact")]
    pub upper_bound: BigRational,
    /// Feasible, covering, and using at most `upper_bound ≤ formula + 3` bins.
    pub ok: bool,
    pub error: Option<String>,
}

/// `count` values of `n_L` spread over `0..=N`, always including `0`, `1`,
/// `N − 1` and `N`.
pub fn sample_n_large(n: u64, count: usize) -> Vec<u64> {
    let mut v: Vec<u64> = vec![0, 1, n - 1, n];
    let mut i = 1u64;
    while v.len() < count {
        let steps = count as u64;
        let x = (i * n) / steps + (i % 5);
        if x <= n && !v.contains(&x) {
            v.push(x);
        }
        i += 1;
        if i > 10 * steps {
            break;
        }
    }
    v.sort_unstable();
    v
}

/// Builds offline packings for every stopping point and every sampled `n_L`
/// on a synthetic tree, and validates them.
pub fn check_constructions(params: &ConstructionParams, samples: &[u64]) -> Vec<ConstructionCheck> {
    let mut out = Vec::new();
    for &n_large in samples {
        let tree = match crate::adversary::SyntheticTree::new(params, n_large) {
            Ok(tree) => tree,
            Err(e) => {
                out.push(ConstructionCheck {
                    n_large,
                    at: Batch::A,
                    bins: 0,
                    formula: int(0),
                    upper_bound: int(0),
                    ok: false,
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        for at in Batch::all(params.t) {
            let items = tree.items_until(params.t, at);
            let formula = opt_formula(params, at, n_large);
            let upper_bound = opt_upper_bound(params, at, n_large);
            let (bins, error) = match construct_solution(params, at, &items, n_large, &tree.gamma) {
                Ok(sol) => (sol.len(), None),
                Err(e) => (0, Some(e.to_string())),
            };
            let ok = error.is_none()
                && int(bins as i64) <= upper_bound
                && upper_bound <= &formula + int(3);
            out.push(ConstructionCheck {
                n_large,
                at,
                bins,
                formula,
                upper_bound,
                ok,
                error,
            });
        }
    }
    out
}

pub const EXACT_OPT_MAX_ITEMS: usize = 14;

/// Minimum number of bins for at most fourteen items, by exhaustive search
/// over assignments with symmetry breaking.
pub fn exact_opt(ctx: &Context, sizes: &[LayeredValue]) -> Result<usize, OptError> {
    if sizes.len() > EXACT_OPT_MAX_ITEMS {
        return Err(OptError::TooManyItems {
            max: EXACT_OPT_MAX_ITEMS,
            got: sizes.len(),
        });
    }
    let mut sorted = sizes.to_vec();
    let mut cmp_err = None;
    sorted.sort_by(|a, b| {
        ctx.compare(b, a).unwrap_or_else(|e| {
            cmp_err = Some(e);
            std::cmp::Ordering::Equal
        })
    });
    if let Some(e) = cmp_err {
        return Err(e.into());
    }
    let mut best = sorted.len();
    let mut loads: Vec<LayeredValue> = Vec::new();
    search(ctx, &sorted, 0, &mut loads, &mut best)?;
    Ok(best)
}

fn search(
    ctx: &Context,
    items: &[LayeredValue],
    next: usize,
    loads: &mut Vec<LayeredValue>,
    best: &mut usize,
) -> Result<(), NumError> {
    if loads.len() >= *best {
        return Ok(());
    }
    if next == items.len() {
        *best = loads.len();
        return Ok(());
    }
    let item = &items[next];
    for i in 0..loads.len() {
        // Bins with equal loads are interchangeable.
        if loads[..i].iter().any(|l| l == &loads[i]) {
            continue;
        }
        let load = loads[i].add(item);
        if ctx.le(&load, &LayeredValue::one())? {
            let old = std::mem::replace(&mut loads[i], load);
            search(ctx, items, next + 1, loads, best)?;
            loads[i] = old;
        }
    }
    loads.push(item.clone());
    search(ctx, items, next + 1, loads, best)?;
    loads.pop();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse;

    fn vals(xs: &[&str]) -> Vec<LayeredValue> {
        xs.iter().map(|x| LayeredValue::rational(parse(x).unwrap())).collect()
    }

    #[test]
    fn formula_values() {
        let p = ConstructionParams::new(3, 1).unwrap();
        assert_eq!(opt_formula(&p, Batch::C(3), 0), int(7));
        assert_eq!(opt_formula(&p, Batch::A, 0), int(343));
        assert_eq!(opt_formula(&p, Batch::B31, 0), ratio(7 * 2058, 12));
        assert_eq!(opt_upper_bound(&p, Batch::B31, 0), int(1201));
        assert_eq!(opt_upper_bound(&p, Batch::B32, 2058), int(686));
    }

    #[test]
    fn first_batch_lower() {
        let p = ConstructionParams::new(3, 1).unwrap();
        assert_eq!(first_batch_opt_lower(&p), Some(int(7)));
        assert!((3..=10).all(first_batch_margin_holds));
    }

    #[test]
    fn exact_opt_small_cases() {
        let ctx = Context::from_u64(1000).unwrap();
        assert_eq!(exact_opt(&ctx, &vals(&["0.6", "0.6", "0.6"])).unwrap(), 3);
        assert_eq!(exact_opt(&ctx, &vals(&["0.5", "0.5", "0.5", "0.5"])).unwrap(), 2);
        assert_eq!(exact_opt(&ctx, &vals(&["0.7", "0.3", "0.6", "0.4"])).unwrap(), 2);
        assert_eq!(exact_opt(&ctx, &[]).unwrap(), 0);
        assert!(exact_opt(&ctx, &vals(&["0.1"; 15])).is_err());
    }

    #[test]
    fn fourteen_trunk_items_fit_one_bin() {
        let p = ConstructionParams::new(3, 1).unwrap();
        let mut sizes = vec![LayeredValue::rational(p.c_size(3)); 7];
        sizes.extend(vec![LayeredValue::rational(p.c_size(2)); 7]);
        assert_eq!(exact_opt(p.ctx(), &sizes).unwrap(), 1);
    }
}
