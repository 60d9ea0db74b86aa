//! Ground-truth oracles: an exact LP solver, a dense replay of the
//! accelerated iteration, and a plain mirror-descent baseline.

pub mod baseline;
pub mod eager;
pub mod lp;

pub use baseline::{baseline_mirror_descent, BaselineConfig, BaselineReport};
pub use eager::{eager_replay, EagerIterate};
pub use lp::{exact_opt, ExactLpResult, LpError};
