//! Near-separable nonnegative matrix factorization through nonnegative sparse
//! regression with a self dictionary.
//!
//! The central problem: given a data matrix `M` whose columns are assumed to be
//! (approximately) nonnegative combinations of a small subset of its own columns,
//! identify that subset. The main solver ([`solver::solve`]) runs an accelerated
//! projected-gradient method on the penalized self-regression objective
//! `0.5 * ||M - MX||_F^2 + mu * p' diag(X)` over a weighted polyhedron that ties
//! every off-diagonal coefficient to the diagonal entry of its row. Row-sparsity
//! of the solution then reveals the selected columns.
//!
//! Supporting pieces:
//! - [`matrix`]: column-major dense matrices, norms, spectral estimation and a
//!   coordinate-descent NNLS used throughout.
//! - [`projection`]: exact Euclidean projection onto the feasible polyhedron,
//!   one row at a time, plus a brute-force reference used for verification.
//! - [`greedy`]: SPA, SNPA and XRAY column-selection baselines.
//! - [`synth`]: middle-point benchmark generators with controlled noise.
//! - [`metrics`]: MRSA, relative approximation measures and index recovery.
//! - [`preselect`]: centroid subsampling with `sqrt(n_k)` scaling for large inputs.
//! - [`io`]: CSV / binary matrix files, metadata sidecars and label files.

use std::fmt;

pub mod greedy;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod preselect;
pub mod projection;
pub mod solver;
pub mod synth;

pub use greedy::GreedySelection;
pub use matrix::{ColumnWeights, DenseMatrix};
pub use solver::{ExtractionResult, MuMode, Postprocess, SolverConfig};
pub use synth::SyntheticInstance;

/// Errors shared across the crate.
#[derive(Debug)]
pub enum Error {
    /// Incompatible shapes for an operation.
    DimensionMismatch(String),
    /// An operation that needs a nonzero matrix received an all-zero one.
    ZeroOperator,
    /// Non-finite value where a finite one is required.
    NonFinite(String),
    /// A greedy selection ran out of nonzero residual columns.
    RankExhausted { selected: usize, requested: usize },
    /// Negative entries passed to an algorithm that requires nonnegative input.
    NegativeInput(String),
    /// The brute-force projection oracle only handles short rows.
    OracleLimit { len: usize, max: usize },
    /// Invalid solver or generator configuration.
    InvalidConfig(String),
    /// The iteration produced a non-finite iterate.
    Divergence(String),
    /// A cluster assignment references an empty cluster.
    EmptyCluster(usize),
    /// Malformed input file.
    Parse(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::ZeroOperator => write!(f, "zero operator"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::RankExhausted { selected, requested } => write!(
                f,
                "rank exhausted: only {selected} of {requested} columns selectable"
            ),
            Error::NegativeInput(msg) => write!(f, "{msg}"),
            Error::OracleLimit { len, max } => {
                write!(f, "oracle limit: row length {len} exceeds {max}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Divergence(msg) => write!(f, "divergence: {msg}"),
            Error::EmptyCluster(k) => write!(f, "cluster {k} is empty"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
