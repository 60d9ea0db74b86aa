//! Packing and covering LP solver based on accelerated stochastic coordinate
//! descent over an exponentially smoothed objective.

pub mod bench;
pub mod cli;
pub mod init;
pub mod instance;
pub mod matrix;
pub mod reference;
pub mod reduction;
pub mod smoothing;
pub mod solver;

pub use instance::{Mode, ProblemInstance};
pub use matrix::SparseNonnegMatrix;
pub use solver::{solve, SolveReport, SolverConfig, SolverError};
