//! Items, bins, placements and transcripts of play over the branching input
//! tree.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{Context, LayeredValue, NumError};

#[derive(Debug, Error)]
pub enum PackingError {
    /// The chosen bin cannot take the item. Only an invalid algorithm does this.
    #[error("item {item} does not fit into bin {bin} (load {load}, size {size})")]
    Overflow {
        item: usize,
        bin: usize,
        load: String,
        size: String,
    },
    #[error("item {item}: bin choice {choice} out of range ({bins} bins open)")]
    InvalidChoice { item: usize, choice: usize, bins: usize },
    #[error("item {item} has size {size} outside (0, 1]")]
    InvalidSize { item: usize, size: String },
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Which continuation of the input an item belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Trunk,
    Branch1,
    Branch2,
    Branch3,
}

impl Branch {
    pub const CONTINUATIONS: [Branch; 3] = [Branch::Branch1, Branch::Branch2, Branch::Branch3];

    /// 0, 1, 2 for the three continuations.
    pub fn index(self) -> Option<usize> {
        match self {
            Branch::Trunk => None,
            Branch::Branch1 => Some(0),
            Branch::Branch2 => Some(1),
            Branch::Branch3 => Some(2),
        }
    }
}

/// A batch of the input. Also names the stopping point right after it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Batch {
    /// The batch of `C_j` items, `2 <= j <= t`.
    C(u32),
    A,
    B11,
    B21,
    B22,
    B31,
    B32,
}

impl Batch {
    pub fn branch(self) -> Branch {
        match self {
            Batch::C(_) | Batch::A => Branch::Trunk,
            Batch::B11 => Branch::Branch1,
            Batch::B21 | Batch::B22 => Branch::Branch2,
            Batch::B31 | Batch::B32 => Branch::Branch3,
        }
    }

    /// Batches in presentation order along every path, for a given `t`:
    /// `C_t … C_2, A, B11, B21, B22, B31, B32`.
    pub fn all(t: u32) -> Vec<Batch> {
        let mut v: Vec<Batch> = (2..=t).rev().map(Batch::C).collect();
        v.extend([Batch::A, Batch::B11, Batch::B21, Batch::B22, Batch::B31, Batch::B32]);
        v
    }

    pub fn label(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Batch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Batch::C(j) => write!(f, "C{j}"),
            Batch::A => f.write_str("A"),
            Batch::B11 => f.write_str("B11"),
            Batch::B21 => f.write_str("B21"),
            Batch::B22 => f.write_str("B22"),
            Batch::B31 => f.write_str("B31"),
            Batch::B32 => f.write_str("B32"),
        }
    }
}

impl FromStr for Batch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "A" => Batch::A,
            "B11" => Batch::B11,
            "B21" => Batch::B21,
            "B22" => Batch::B22,
            "B31" => Batch::B31,
            "B32" => Batch::B32,
            _ => {
                let j = s
                    .strip_prefix('C')
                    .and_then(|d| d.parse::<u32>().ok())
                    .filter(|j| *j >= 2)
                    .ok_or_else(|| format!("unknown batch label {s:?}"))?;
                Batch::C(j)
            }
        })
    }
}

impl Serialize for Batch {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Batch {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub id: usize,
    pub batch: Batch,
    pub size: LayeredValue,
    approx: f64,
}

impl Item {
    /// Builds an item, rejecting sizes outside `(0, 1]`.
    pub fn new(ctx: &Context, id: usize, batch: Batch, size: LayeredValue) -> Result<Self, PackingError> {
        if !ctx.gt(&size, &LayeredValue::zero())? || !ctx.le(&size, &LayeredValue::one())? {
            return Err(PackingError::InvalidSize {
                item: id,
                size: size.to_string(),
            });
        }
        let approx = ctx.approx(&size);
        Ok(Self {
            id,
            batch,
            size,
            approx,
        })
    }

    pub fn branch(&self) -> Branch {
        self.batch.branch()
    }

    /// What an online algorithm gets to see: the size and nothing else.
    pub fn offer(&self) -> Offer<'_> {
        Offer {
            size: &self.size,
            approx: self.approx,
        }
    }
}

/// The view of an arriving item handed to an online algorithm.
#[derive(Clone, Copy, Debug)]
pub struct Offer<'a> {
    pub size: &'a LayeredValue,
    approx: f64,
}

impl<'a> Offer<'a> {
    pub fn new(ctx: &Context, size: &'a LayeredValue) -> Self {
        Self {
            size,
            approx: ctx.approx(size),
        }
    }

    pub fn approx(&self) -> f64 {
        self.approx
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinState {
    pub id: usize,
    pub contents: Vec<usize>,
    pub load: LayeredValue,
    /// Batch of the bin's first item.
    pub opened_by: Batch,
    approx: f64,
}

impl BinState {
    pub fn approx_load(&self) -> f64 {
        self.approx
    }
}

/// Where an item went.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub item: usize,
    pub batch: Batch,
    pub bin: usize,
}

// Float estimates decide a fit only when they are this far from the boundary;
// anything closer goes to the exact comparison.
const FIT_MARGIN: f64 = 1e-12;

/// The bins of one path through the input tree.
#[derive(Clone, Debug)]
pub struct Packing {
    ctx: Context,
    bins: Vec<BinState>,
    items: usize,
}

impl Packing {
    pub fn new(ctx: Context) -> Self {
        Self {
            ctx,
            bins: Vec::new(),
            items: 0,
        }
    }

    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    pub fn bins(&self) -> &[BinState] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn item_count(&self) -> usize {
        self.items
    }

    /// Whether the item fits into bin `bin` (which must exist).
    pub fn fits(&self, bin: usize, offer: &Offer<'_>) -> Result<bool, NumError> {
        let b = &self.bins[bin];
        let estimate = b.approx + offer.approx;
        if estimate > 1.0 + FIT_MARGIN {
            return Ok(false);
        }
        if estimate < 1.0 - FIT_MARGIN {
            return Ok(true);
        }
        self.ctx.le(&b.load.add(offer.size), &LayeredValue::one())
    }

    /// Puts `item` into bin `choice`; `choice == len()` opens a new bin.
    /// Returns whether a bin was opened.
    pub fn place(&mut self, item: &Item, choice: usize) -> Result<bool, PackingError> {
        if choice > self.bins.len() {
            return Err(PackingError::InvalidChoice {
                item: item.id,
                choice,
                bins: self.bins.len(),
            });
        }
        if choice == self.bins.len() {
            self.bins.push(BinState {
                id: choice,
                contents: vec![item.id],
                load: item.size.clone(),
                opened_by: item.batch,
                approx: item.approx,
            });
            self.items += 1;
            return Ok(true);
        }
        let bin = &mut self.bins[choice];
        let load = bin.load.add(&item.size);
        if !self.ctx.le(&load, &LayeredValue::one())? {
            return Err(PackingError::Overflow {
                item: item.id,
                bin: choice,
                load: bin.load.to_string(),
                size: item.size.to_string(),
            });
        }
        bin.approx = self.ctx.approx(&load);
        bin.load = load;
        bin.contents.push(item.id);
        self.items += 1;
        Ok(false)
    }
}

/// Full placement history of one algorithm over the input tree.
///
/// Bin ids below `trunk_bins` are trunk bins shared by all continuations;
/// ids at or above it are local to the continuation that opened them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub t: u32,
    pub trunk: Vec<Placement>,
    pub trunk_bins: usize,
    /// Continuations 1, 2, 3 in order.
    pub branches: Vec<Vec<Placement>>,
}

impl Transcript {
    /// The placements of one root-to-leaf path: trunk then continuation.
    pub fn path(&self, branch: Branch) -> impl Iterator<Item = &Placement> {
        let tail = branch.index().map(|i| self.branches[i].as_slice()).unwrap_or(&[]);
        self.trunk.iter().chain(tail.iter())
    }

    pub fn stats(&self) -> Stats {
        Stats::from_transcript(self)
    }
}

/// Bin-opening counts per batch and the algorithm's cost at every stopping
/// point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    /// ν per batch: bins whose first item came from that batch.
    pub nu: BTreeMap<Batch, u64>,
    /// A-items placed as the first item of a bin.
    pub n_large: u64,
    /// Σ of ν over the trunk batches.
    pub delta: u64,
    /// Bins in use right after each batch, in presentation order.
    pub costs: Vec<(Batch, u64)>,
}

impl Stats {
    pub fn from_transcript(tr: &Transcript) -> Self {
        let mut nu: BTreeMap<Batch, u64> = Batch::all(tr.t).into_iter().map(|b| (b, 0)).collect();
        let mut n_large = 0;
        let mut costs = Vec::new();

        let mut seen = HashSet::new();
        let mut trunk_cost_after = BTreeMap::new();
        for (i, p) in tr.trunk.iter().enumerate() {
            if seen.insert(p.bin) {
                *nu.entry(p.batch).or_default() += 1;
                if p.batch == Batch::A {
                    n_large += 1;
                }
            }
            let last_of_batch = tr.trunk.get(i + 1).is_none_or(|n| n.batch != p.batch);
            if last_of_batch {
                trunk_cost_after.insert(p.batch, seen.len() as u64);
            }
        }
        for b in Batch::all(tr.t).into_iter().filter(|b| b.branch() == Branch::Trunk) {
            costs.push((b, trunk_cost_after.get(&b).copied().unwrap_or(0)));
        }
        let delta = seen.len() as u64;

        for (idx, batches) in [
            vec![Batch::B11],
            vec![Batch::B21, Batch::B22],
            vec![Batch::B31, Batch::B32],
        ]
        .into_iter()
        .enumerate()
        {
            let mut opened = HashSet::new();
            for p in &tr.branches[idx] {
                if p.bin >= tr.trunk_bins && opened.insert(p.bin) {
                    *nu.entry(p.batch).or_default() += 1;
                }
            }
            let mut running = delta;
            for b in batches {
                running += nu[&b];
                costs.push((b, running));
            }
        }
        Self {
            nu,
            n_large,
            delta,
            costs,
        }
    }

    pub fn nu(&self, b: Batch) -> u64 {
        self.nu.get(&b).copied().unwrap_or(0)
    }

    pub fn cost(&self, b: Batch) -> u64 {
        self.costs.iter().find(|(x, _)| *x == b).map(|(_, c)| *c).unwrap_or(0)
    }

    /// The cost at a stopping point expressed through ν:
    /// `ALG_j = Σ_{i ≥ j} ν_i` on the trunk, `Δ + ν_11`, `Δ + ν_21`,
    /// `Δ + ν_21 + ν_22`, `Δ + ν_31`, `Δ + ν_31 + ν_32` on the branches.
    pub fn formula_cost(&self, t: u32, b: Batch) -> u64 {
        match b {
            Batch::C(j) => (j..=t).map(|i| self.nu(Batch::C(i))).sum(),
            Batch::A => (2..=t).map(|i| self.nu(Batch::C(i))).sum::<u64>() + self.nu(Batch::A),
            Batch::B11 => self.delta + self.nu(Batch::B11),
            Batch::B21 => self.delta + self.nu(Batch::B21),
            Batch::B22 => self.delta + self.nu(Batch::B21) + self.nu(Batch::B22),
            Batch::B31 => self.delta + self.nu(Batch::B31),
            Batch::B32 => self.delta + self.nu(Batch::B31) + self.nu(Batch::B32),
        }
    }
}
