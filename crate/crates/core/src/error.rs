use alloc::boxed::Box;
use alloc::string::String;

use crate::solver::LassoSolution;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A design point is outside the domain of a dictionary function.
    #[error("point {index} is outside the dictionary domain: {reason}")]
    Domain { index: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Population moments were requested for a measure that has no exact
    /// representation and no caller-supplied moments.
    #[error("population moments are unavailable for this design measure")]
    UnsupportedMeasure,

    /// An empirical column norm is below the admissible floor, so its
    /// penalty weight (and the rescaling by it) is undefined.
    #[error("column {column} has empirical norm {norm:e}, below the floor {floor:e}")]
    DegenerateColumn { column: usize, norm: f64, floor: f64 },

    /// Coordinate descent hit `max_sweeps`. Carries the last iterate and its
    /// optimality report.
    #[error("coordinate descent did not converge after {} sweeps (max violation {:e})", .best.sweeps, .best.kkt.max_violation)]
    Convergence { best: Box<LassoSolution> },

    /// No coefficient vector of any support size enters the approximation ball.
    #[error("no linear combination enters the approximation ball of radius {radius:e}")]
    EmptyLambda { radius: f64 },

    #[error("exhaustive subset search is capped at {limit} functions, got {m}")]
    ExhaustiveLimit { m: usize, limit: usize },

    #[error("Gram matrix has a nonpositive diagonal entry at {index}")]
    DegenerateGram { index: usize },

    #[error("dictionary size {m} exceeds n^gamma = {cap:.3} (n = {n}, gamma = {gamma})")]
    GammaCapExceeded { m: usize, n: usize, gamma: f64, cap: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Every replicate at some sample size failed.
    #[error("all {replicates} replicates failed at n = {n}")]
    Experiment { n: usize, replicates: usize },
}
