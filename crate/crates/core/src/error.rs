//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Phase multipliers must be odd integers.
    #[error("phase integer {name} must be odd, got {value}")]
    EvenPhaseInteger { name: &'static str, value: i64 },

    /// An amplitude table failed the unitarity check.
    #[error("normalization defect: total probability {total} deviates from 1 by {defect:e}")]
    NormalizationDefect { total: f64, defect: f64 },

    /// The requested splitter parameters admit no physical absorber
    /// transmission: they violate t1'^2 + r2'^2 >= 1 (equivalently,
    /// u' t1' r2' >= r1' t2' when u' < 1).
    #[error(
        "infeasible configuration: t1'={t1_prime}, r2'={r2_prime}, u'={u_prime} requires \
         u^2 = {u_squared} > 1; the feasible region is t1'^2 + r2'^2 >= 1"
    )]
    Infeasible {
        t1_prime: f64,
        r2_prime: f64,
        u_prime: f64,
        u_squared: f64,
    },

    /// The combination bound degenerates when the absorber is fully
    /// transmitting; the simplified bound assumes u^2 != 1.
    #[error("degenerate at u^2 = 1: the simplified bound divides by the absorption probability")]
    DegenerateFullTransmission,

    /// Interaction-free analysis is undefined when nothing can be absorbed.
    #[error("no object interaction at u = 1: both the dark coincidence and the absorption vanish")]
    NoObjectInteraction,

    /// A renormalized correlation was requested for a table with no
    /// surviving (non-absorbed) probability mass.
    #[error("undefined correlation: table for pair {pair} has zero non-absorption mass")]
    UndefinedCorrelation { pair: &'static str },

    /// An estimator was asked to run on too little data.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Event classification requested outside the dark-fringe configuration.
    #[error("classification unsupported: {0}")]
    ClassificationUnsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible { .. } => 3,
            Error::InsufficientData(_) => 4,
            _ => 2,
        }
    }
}
