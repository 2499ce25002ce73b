//! Exact simulator and verifier for an adaptive, branching lower-bound
//! construction for classic online bin packing.
//!
//! The crate plays a fixed input tree against deterministic online
//! algorithms, adapting the middle batch of item sizes to the algorithm's
//! decisions, and checks every step of the weight-based analysis with exact
//! arithmetic.

pub mod adversary;
pub mod algorithms;
pub mod analysis;
pub mod exactnum;
pub mod opt_bounds;
pub mod packing;
pub mod rational;

pub use exactnum::{Context, LayeredValue, NumError};
