use thiserror::Error;

use crate::model::Diagnostic;

/// Errors produced by model loading and the numerical solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// The model file does not match the documented schema.
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    /// The model parsed but breaks one or more invariants.
    #[error("invalid model: {}", format_diagnostics(.0))]
    InvalidModel(Vec<Diagnostic>),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("unknown workspace preset `{0}`")]
    UnknownPreset(String),

    #[error("preset `{0}` undefined: no published coordinates, supply explicit coordinates")]
    PresetUndefined(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    /// Rigid inverse kinematics reached a least-squares minimum that does not hit the target.
    #[error("target outside workspace of chain {chain}: residual {residual:.3e}")]
    OutsideWorkspace { chain: usize, residual: f64 },

    #[error("joint {joint} of chain {chain} violates its bounds: {value} not in [{lo}, {hi}]")]
    JointBounds {
        chain: usize,
        joint: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{what}: matrix is singular or ill-conditioned (condition number {condition:.3e})")]
    Singular { what: &'static str, condition: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("{what} diverged after {iterations} iterations (residual {residual:.3e})")]
    Diverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("chain {index}: {source}")]
    Chain {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trajectory point {index}: {source}")]
    Point {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} trajectory points failed (allowed fraction {allowed}); last: {last}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        allowed: f64,
        last: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_chain(self, index: usize) -> Self {
        Error::Chain {
            index,
            source: Box::new(self),
        }
    }

    /// Residual history attached to iterative failures, if any.
    pub fn history(&self) -> Option<&[f64]> {
        match self {
            Error::NotConverged { history, .. } | Error::Diverged { history, .. } => Some(history),
            Error::Chain { source, .. } | Error::Point { source, .. } => source.history(),
            Error::TooManyFailures { last, .. } => last.history(),
            _ => None,
        }
    }
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
