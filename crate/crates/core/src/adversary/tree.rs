use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::generator::{AClass, AdaptiveGenerator};
use super::params::{BranchCounts, ConstructionParams};
use super::AdversaryError;
use crate::algorithms::{AlgorithmSnapshot, OnlineAlgorithm};
use crate::exactnum::{LayeredValue, NumError};
use crate::packing::{Batch, Branch, Item, Packing, Placement, Stats, Transcript};
use crate::rational::{int, ratio, serialize_exact};

/// How continuations get the algorithm back into its post-trunk state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ForkMode {
    /// Restore a snapshot when the algorithm offers one, replay otherwise.
    #[default]
    Auto,
    /// Always reset and replay the trunk, checking every decision repeats.
    Replay,
}

/// One complete play of the input tree.
#[derive(Clone, Debug)]
pub struct TreeRun {
    pub params: ConstructionParams,
    pub algorithm: String,
    /// Every item of the tree, indexed by id. Trunk items come first, then
    /// the items of continuations 1, 2 and 3.
    pub items: Vec<Item>,
    pub transcript: Transcript,
    pub generator: AdaptiveGenerator,
    pub gamma: LayeredValue,
    pub counts: BranchCounts,
    pub trunk_packing: Packing,
    /// Final packing of each continuation.
    pub branch_packings: Vec<Packing>,
}

/// Plays the tree against `alg`.
pub fn run_tree(
    params: &ConstructionParams,
    alg: &mut dyn OnlineAlgorithm,
    mode: ForkMode,
) -> Result<TreeRun, AdversaryError> {
    let ctx = params.ctx().clone();
    let n = params.n;
    let mut items: Vec<Item> = Vec::new();
    let mut trunk = Vec::new();
    let mut packing = Packing::new(ctx.clone());

    alg.reset();
    for j in (2..=params.t).rev() {
        let size = LayeredValue::rational(params.c_size(j));
        for _ in 0..n {
            let item = Item::new(&ctx, items.len(), Batch::C(j), size.clone())?;
            let bin = alg.choose(&item.offer(), &packing)?;
            packing.place(&item, bin)?;
            trunk.push(Placement { item: item.id, batch: item.batch, bin });
            items.push(item);
        }
    }

    let mut generator = AdaptiveGenerator::new(n);
    for _ in 0..n {
        let e = generator.next_exponent()?;
        let item = Item::new(&ctx, items.len(), Batch::A, params.a_size(&e))?;
        let bin = alg.choose(&item.offer(), &packing)?;
        let opened = packing.place(&item, bin)?;
        generator.classify(opened);
        trunk.push(Placement { item: item.id, batch: item.batch, bin });
        items.push(item);
    }

    let gamma = generator.gamma();
    let counts = params.b_counts(generator.n_large());
    let trunk_packing = packing;
    let trunk_len = items.len();
    let snapshot: Option<AlgorithmSnapshot> = match mode {
        ForkMode::Auto => alg.snapshot(),
        ForkMode::Replay => None,
    };

    let plans = [
        vec![(Batch::B11, counts.b11)],
        vec![(Batch::B21, counts.b21), (Batch::B22, counts.b22)],
        vec![(Batch::B31, counts.b31), (Batch::B32, counts.b32)],
    ];
    let mut branches = Vec::new();
    let mut branch_packings = Vec::new();
    for (idx, plan) in plans.iter().enumerate() {
        let mut packing = if idx == 0 {
            trunk_packing.clone()
        } else {
            match &snapshot {
                Some(s) => {
                    alg.restore(s);
                    trunk_packing.clone()
                }
                None => replay_trunk(alg, &items[..trunk_len], &trunk, &ctx)?,
            }
        };
        let mut placements = Vec::new();
        for &(batch, count) in plan {
            let size = params.b_size(batch, &gamma);
            for _ in 0..count {
                let item = Item::new(&ctx, items.len(), batch, size.clone())?;
                let bin = alg.choose(&item.offer(), &packing)?;
                packing.place(&item, bin)?;
                placements.push(Placement { item: item.id, batch, bin });
                items.push(item);
            }
        }
        branches.push(placements);
        branch_packings.push(packing);
    }

    let transcript = Transcript {
        t: params.t,
        trunk,
        trunk_bins: trunk_packing.len(),
        branches,
    };
    Ok(TreeRun {
        params: params.clone(),
        algorithm: alg.name(),
        items,
        transcript,
        generator,
        gamma,
        counts,
        trunk_packing,
        branch_packings,
    })
}

fn replay_trunk(
    alg: &mut dyn OnlineAlgorithm,
    trunk_items: &[Item],
    recorded: &[Placement],
    ctx: &crate::Context,
) -> Result<Packing, AdversaryError> {
    alg.reset();
    let mut packing = Packing::new(ctx.clone());
    for (item, rec) in trunk_items.iter().zip(recorded) {
        let bin = alg.choose(&item.offer(), &packing)?;
        if bin != rec.bin {
            return Err(AdversaryError::ReplayDiverged {
                item: item.id,
                recorded: rec.bin,
                replayed: bin,
            });
        }
        packing.place(item, bin)?;
    }
    Ok(packing)
}

/// The items of `items` presented on the path to stopping point `at`.
pub fn presented_until(items: &[Item], t: u32, at: Batch) -> Vec<&Item> {
    let order = Batch::all(t);
    let branch = at.branch();
    let pos = order.iter().position(|b| *b == at).expect("stopping point for this t");
    let included = |b: Batch| {
        let same_path = b.branch() == Branch::Trunk || b.branch() == branch;
        same_path && order.iter().position(|x| *x == b).unwrap() <= pos
    };
    items.iter().filter(|i| included(i.batch)).collect()
}

/// All items of a tree in which exactly the first `n_large` A-items are
/// large, built without any algorithm. Used to exercise offline packings
/// at chosen values of `n_L`.
#[derive(Clone, Debug)]
pub struct SyntheticTree {
    pub items: Vec<Item>,
    pub gamma: LayeredValue,
    pub counts: BranchCounts,
    pub n_large: u64,
}

impl SyntheticTree {
    pub fn new(params: &ConstructionParams, n_large: u64) -> Result<Self, AdversaryError> {
        assert!(n_large <= params.n, "n_L cannot exceed N");
        let ctx = params.ctx();
        let mut items = Vec::new();
        for j in (2..=params.t).rev() {
            let size = LayeredValue::rational(params.c_size(j));
            for _ in 0..params.n {
                items.push(Item::new(ctx, items.len(), Batch::C(j), size.clone())?);
            }
        }
        let mut generator = AdaptiveGenerator::new(params.n);
        for i in 0..params.n {
            let e = generator.next_exponent()?;
            items.push(Item::new(ctx, items.len(), Batch::A, params.a_size(&e))?);
            generator.classify(i < n_large);
        }
        let gamma = generator.gamma();
        let counts = params.b_counts(n_large);
        for batch in [Batch::B11, Batch::B21, Batch::B22, Batch::B31, Batch::B32] {
            let size = params.b_size(batch, &gamma);
            for _ in 0..counts.get(batch) {
                items.push(Item::new(ctx, items.len(), batch, size.clone())?);
            }
        }
        Ok(Self {
            items,
            gamma,
            counts,
            n_large,
        })
    }

    pub fn items_until(&self, t: u32, at: Batch) -> Vec<&Item> {
        presented_until(&self.items, t, at)
    }
}

/// Invariants of a finished run, each decided exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunChecks {
    /// Every large `a` exceeds `k` times every small `a`.
    pub gap_property: bool,
    pub interval_invariant: bool,
    /// Every exponent lies strictly between `2^(N+2)` and `2^(N+3)`.
    pub exponent_range: bool,
    /// `C_t ∈ (1/(6·7^(t−1)+1), 1/(6·7^(t−1)))`, A-items in
    /// `((1+ε)/7, (1+2ε)/7)`, `B_31 > 0.35714`, `B_21 < 0.33334`, `B_32 > 1/2`.
    pub sizes_in_range: bool,
    /// Small items are at most `(1+ε+γ)/7`, large ones above `(1+ε+4γ)/7`,
    /// and `γ < ε/4`.
    pub gamma_separates: bool,
    /// Each continuation starts from the identical trunk packing.
    pub trunk_shared: bool,
    /// Costs read off the transcript equal the ν formulas.
    pub cost_formulas: bool,
    /// `n_L` equals ν of the A-batch.
    pub n_large_is_nu_a: bool,
}

impl RunChecks {
    pub fn all(&self) -> bool {
        self.gap_property
            && self.interval_invariant
            && self.exponent_range
            && self.sizes_in_range
            && self.gamma_separates
            && self.trunk_shared
            && self.cost_formulas
            && self.n_large_is_nu_a
    }

    /// Names of the checks that failed.
    pub fn failures(&self) -> Vec<&'static str> {
        [
            ("gap_property", self.gap_property),
            ("interval_invariant", self.interval_invariant),
            ("exponent_range", self.exponent_range),
            ("sizes_in_range", self.sizes_in_range),
            ("gamma_separates", self.gamma_separates),
            ("trunk_shared", self.trunk_shared),
            ("cost_formulas", self.cost_formulas),
            ("n_large_is_nu_a", self.n_large_is_nu_a),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StoppingPoint {
    pub label: Batch,
    pub alg_cost: u64,
    #[serde(serialize_with = "serialize_exact")]
    pub opt_upper_bound: BigRational,
    #[serde(serialize_with = "serialize_exact")]
    pub ratio: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdversaryReport {
    pub algorithm: String,
    pub t: u32,
    pub m: u64,
    pub n: u64,
    pub k: String,
    #[serde(serialize_with = "serialize_exact")]
    pub eps: BigRational,
    pub n_large: u64,
    pub counts: BranchCounts,
    pub gamma_exponent: String,
    pub stopping_points: Vec<StoppingPoint>,
    #[serde(serialize_with = "serialize_exact")]
    pub max_ratio: BigRational,
    pub max_ratio_at: Batch,
    pub stats: Stats,
    pub checks: RunChecks,
}

impl TreeRun {
    pub fn stats(&self) -> Stats {
        self.transcript.stats()
    }

    pub fn n_large(&self) -> u64 {
        self.generator.n_large()
    }

    pub fn item(&self, id: usize) -> &Item {
        &self.items[id]
    }

    /// The items presented up to and including stopping point `at`.
    pub fn items_until(&self, at: Batch) -> Vec<&Item> {
        presented_until(&self.items, self.params.t, at)
    }

    pub fn checks(&self) -> Result<RunChecks, NumError> {
        let p = &self.params;
        let ctx = p.ctx();
        let g = &self.generator;
        let gamma = &self.gamma;

        let mut sizes_ok = true;
        let cap = p.first_batch_capacity() as i64;
        let ct = p.c_size(p.t);
        sizes_ok &= ct > ratio(1, cap + 1) && ct < ratio(1, cap);
        let a_lo = LayeredValue::rational(p.a_base());
        let a_hi = LayeredValue::rational((int(1) + int(2) * &p.eps) / int(7));
        let small_max = p.a_threshold(gamma, 1);
        let large_min = p.a_threshold(gamma, 4);
        let mut gamma_ok = ctx.lt(&gamma.scale_int(4), &LayeredValue::rational(p.eps.clone()))?;
        for issued in g.issued() {
            let s = p.a_size(&issued.exponent);
            sizes_ok &= ctx.gt(&s, &a_lo)? && ctx.lt(&s, &a_hi)?;
            gamma_ok &= match issued.class {
                AClass::Small => ctx.le(&s, &small_max)?,
                AClass::Large => ctx.gt(&s, &large_min)?,
            };
        }
        let b = |batch| p.b_size(batch, gamma);
        sizes_ok &= ctx.gt(&b(Batch::B31), &LayeredValue::rational(ratio(35714, 100000)))?;
        sizes_ok &= ctx.lt(&b(Batch::B21), &LayeredValue::rational(ratio(33334, 100000)))?;
        sizes_ok &= ctx.gt(&b(Batch::B32), &LayeredValue::rational(ratio(1, 2)))?;

        let trunk_shared = self.branch_packings.iter().all(|bp| {
            self.trunk_packing
                .bins()
                .iter()
                .zip(bp.bins())
                .all(|(tb, b)| b.contents.starts_with(&tb.contents) && b.opened_by == tb.opened_by)
        });

        let stats = self.stats();
        let cost_formulas = stats.costs.iter().all(|&(b, c)| stats.formula_cost(p.t, b) == c)
            && stats.costs.len() == Batch::all(p.t).len();

        Ok(RunChecks {
            gap_property: g.gap_holds(ctx)?,
            interval_invariant: g.interval_invariant_holds(),
            exponent_range: g.range_holds() && g.issued().len() as u64 == p.n,
            sizes_in_range: sizes_ok,
            gamma_separates: gamma_ok,
            trunk_shared,
            cost_formulas,
            n_large_is_nu_a: stats.n_large == g.n_large() && stats.nu(Batch::A) == g.n_large(),
        })
    }

    pub fn report(&self) -> Result<AdversaryReport, NumError> {
        let p = &self.params;
        let stats = self.stats();
        let n_large = self.n_large();
        let stopping_points: Vec<StoppingPoint> = stats
            .costs
            .iter()
            .map(|&(label, alg_cost)| {
                let opt = crate::opt_bounds::opt_upper_bound(p, label, n_large);
                StoppingPoint {
                    label,
                    alg_cost,
                    ratio: int(alg_cost as i64) / &opt,
                    opt_upper_bound: opt,
                }
            })
            .collect();
        let mut best = 0;
        for (i, sp) in stopping_points.iter().enumerate() {
            if sp.ratio > stopping_points[best].ratio {
                best = i;
            }
        }
        let gamma_exponent: BigUint = self.gamma.atoms().keys().next().cloned().unwrap_or_else(BigUint::zero);
        Ok(AdversaryReport {
            algorithm: self.algorithm.clone(),
            t: p.t,
            m: p.m,
            n: p.n,
            k: p.k().to_string(),
            eps: p.eps.clone(),
            n_large,
            counts: self.counts,
            gamma_exponent: gamma_exponent.to_string(),
            max_ratio: stopping_points[best].ratio.clone(),
            max_ratio_at: stopping_points[best].label,
            stopping_points,
            stats,
            checks: self.checks()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational;
    use crate::algorithms::{AlwaysNew, FirstFit, NextFit, ReplayOnly};

    #[test]
    fn always_new_ratio_at_first_stopping_point() {
        let p = ConstructionParams::new(3, 1).unwrap();
        let run = run_tree(&p, &mut AlwaysNew, ForkMode::Auto).unwrap();
        let report = run.report().unwrap();
        assert_eq!(report.stopping_points.len(), 8);
        let first = &report.stopping_points[0];
        assert_eq!(first.label, Batch::C(3));
        assert_eq!(first.alg_cost, 2058);
        assert_eq!(first.ratio, int(294));
        assert_eq!(report.n_large, 2058);
        assert!(report.checks.all(), "{:?}", report.checks.failures());
        assert_eq!(rational::to_decimal_string(&report.max_ratio, 6), "294.000000");
    }

    #[test]
    fn snapshot_and_replay_agree() {
        let p = ConstructionParams::new(3, 1).unwrap();
        let a = run_tree(&p, &mut NextFit, ForkMode::Auto).unwrap();
        let b = run_tree(&p, &mut ReplayOnly(NextFit), ForkMode::Auto).unwrap();
        assert_eq!(a.transcript, b.transcript);
        let c = run_tree(&p, &mut NextFit, ForkMode::Replay).unwrap();
        assert_eq!(a.transcript, c.transcript);
    }

    #[test]
    fn first_fit_report_is_consistent() {
        let p = ConstructionParams::new(3, 1).unwrap();
        let run = run_tree(&p, &mut FirstFit, ForkMode::Auto).unwrap();
        let report = run.report().unwrap();
        assert!(report.checks.all(), "{:?}", report.checks.failures());
        assert_eq!(report.n_large, report.stats.nu(Batch::A));
        assert!(report.stopping_points.iter().all(|sp| sp.ratio <= report.max_ratio));
        let b31_items = run.items_until(Batch::B31);
        assert_eq!(b31_items.len() as u64, 3 * 2058 + report.counts.b31);
    }
}
