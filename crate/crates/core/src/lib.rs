//! Space-efficient streaming estimation of bivariate dependence.
//!
//! This crate maintains a compact summary of a bivariate data stream and
//! answers queries for empirical copula values and lower/upper tail
//! dependence coefficients. Built on quantile summaries with a relative
//! (biased) rank-error invariant, the estimates carry error bounds that do
//! not grow with stream length, so tail behaviour stays resolved no matter
//! how much data has flowed past. A uniform-error mode is included for
//! comparison; its tail bounds grow linearly with the stream.
//!
//! The main pieces:
//!
//! * [`quantile::QuantileSummary`]: univariate summaries with insertion,
//!   compression, quantile and inverse (CDF) queries, and merging;
//! * [`copula::CopulaSummary`]: the bivariate structure pairing each
//!   first-marginal tuple with a subsummary of its second-marginal values;
//! * [`tail`]: tail dependence estimators and theoretical bound calculators;
//! * [`oracle`]: exact brute-force references over fully stored pairs, used
//!   for testing and offline verification;
//! * [`experiment`]: seeded synthetic streams and checkpointed accuracy,
//!   size and runtime reports.

pub mod copula;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod quantile;
pub mod tail;

pub use copula::{
    CopulaEntry, CopulaQueryResult, CopulaSummary, PrefixCount, Snapshot, SummarySize,
    PAIR_BYTES, TUPLE_BYTES,
};
pub use error::Error;
pub use experiment::{
    compare_modes, generate_stream, run_experiment, CheckpointRecord, ExperimentConfig,
    ExperimentReport, ModeComparison, PairDistribution, StreamSpec,
};
pub use oracle::{CopulaOracle, RawPairs};
pub use quantile::{ErrorMode, InvariantKind, QuantileSummary, SummaryTuple};
pub use tail::{
    bound_values, estimate_lambda_lower, estimate_lambda_upper, BoundValues,
    TailDependenceEstimate, TailSide,
};
