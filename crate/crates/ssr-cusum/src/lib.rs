//! Distribution-free CUSUM charts on signed sequential ranks.
//!
//! The chart statistic for observation i is built from its sign and the rank
//! of its magnitude among all magnitudes seen so far, scored and normalized
//! so that in-control statistics have mean zero and variance one no matter
//! what the (symmetric, continuous) underlying distribution is. Control
//! limits therefore calibrate once per reference value and nominal in-control
//! average run length, with no Phase-I parameter estimation.
//!
//! Module map:
//! - [`scores`]: score functions, normalizers, per-observation statistics.
//! - [`seqrank`]: streaming signed sequential ranks.
//! - [`engine`]: the CUSUM recursions, signal detection, changepoint estimate.
//! - [`distlab`]: reference distributions and the design constants
//!   theta0 / theta1 by adaptive quadrature.
//! - [`calibrate`]: Monte Carlo control-limit solving.
//! - [`arl_lab`]: out-of-control run-length experiments and the normal-chart
//!   prediction they are compared against.
//! - [`phase1`]: design-constant estimation from historical data.
//! - [`formats`]: text formats shared by the CLI and the Phase-I tooling.

pub mod arl_lab;
pub mod calibrate;
pub mod distlab;
pub mod engine;
pub mod formats;
pub mod phase1;
pub mod rng;
pub mod scores;
pub mod seqrank;

mod mc;
mod normal;
mod quad;

pub use engine::{ChartSide, CusumConfig, CusumState, RunOutcome, SignalReport, SignalSide};
pub use scores::{ScoreKind, ScoreSpec};
pub use seqrank::{RankAccumulator, SignedRank};

use thiserror::Error;

/// Errors from score evaluation and normalization.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("rank {rank} outside 1..={i}")]
    RankOutOfRange { i: u64, rank: u64 },
    #[error("sign must be +1 or -1, got {sign}")]
    InvalidSign { sign: i8 },
    #[error("expected {expected}, got {got:?}")]
    KindMismatch { expected: &'static str, got: scores::ScoreKind },
    #[error("probability {p} outside the open interval (0, 1)")]
    ProbabilityOutOfRange { p: f64 },
}

/// Errors from the rank accumulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeqRankError {
    #[error("non-finite observation {value}")]
    NonFiniteInput { value: f64 },
}

/// Errors from the chart engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid chart configuration: {reason}")]
    InvalidConfig { reason: &'static str },
    #[error("non-finite chart statistic {value}")]
    NonFiniteStatistic { value: f64 },
    #[error("chart already signaled on the {side:?} side; reset before stepping")]
    SteppedAfterSignal { side: engine::SignalSide },
    #[error(transparent)]
    Input(#[from] SeqRankError),
}

/// Errors from distribution construction, sampling, and quadrature.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("invalid distribution parameter: {reason}")]
    InvalidParameter { reason: String },
    #[error("need at least {needed} data points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate data: all values equal")]
    DegenerateData,
    #[error("{what} requires a location score, got {got:?}")]
    LocationScoreRequired { what: &'static str, got: scores::ScoreKind },
    #[error("quadrature did not converge: estimate {estimate}, error bound {error} > tolerance {tolerance}")]
    QuadratureNonConvergence { estimate: f64, error: f64, tolerance: f64 },
    #[error("quantile solve failed for p = {p}")]
    QuantileSolveFailed { p: f64 },
}

/// Errors from control-limit calibration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrateError {
    #[error("invalid calibration request: {reason}")]
    InvalidRequest { reason: String },
    #[error("run cap {cap} hit in {capped} of {replications} replications (rate above 0.1%)")]
    CapRateExceeded { cap: u64, capped: u64, replications: u64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Errors from out-of-control run-length experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArlError {
    #[error("invalid experiment: {reason}")]
    InvalidExperiment { reason: String },
    #[error("only {surviving} of {replications} replications survived to the changepoint; need at least {needed}")]
    TooFewSurvivors { surviving: u64, replications: u64, needed: u64 },
    #[error("experiment manifest: {reason}")]
    Manifest { reason: String },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Calibrate(#[from] CalibrateError),
}

/// Errors from Phase-I estimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Phase1Error {
    #[error("need at least {needed} data points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate data: all values equal")]
    DegenerateData,
    #[error("invalid design parameter: {reason}")]
    InvalidParameter { reason: String },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Errors from the text formats.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Row { line: usize, reason: String },
    #[error("{reason}")]
    Structure { reason: String },
}
