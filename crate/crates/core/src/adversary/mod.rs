//! The adaptive input tree: a trunk of `C` batches and one adaptive A-batch,
//! followed by three mutually exclusive continuations.

mod generator;
mod params;
mod tree;

use thiserror::Error;

use crate::exactnum::NumError;
use crate::packing::PackingError;

pub use generator::{AClass, AdaptiveGenerator, IssuedA};
pub use params::{BranchCounts, ConstructionParams, ParamError};
pub use tree::{presented_until, run_tree, AdversaryReport, ForkMode, RunChecks, StoppingPoint, SyntheticTree, TreeRun};

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("exponent interval exhausted after {issued} A-items")]
    IntervalExhausted { issued: usize },
    #[error("replay diverged at item {item}: recorded bin {recorded}, replayed bin {replayed}")]
    ReplayDiverged { item: usize, recorded: usize, replayed: usize },
}
