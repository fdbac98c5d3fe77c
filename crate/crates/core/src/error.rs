use thiserror::Error;

use crate::constraints::NewtonOutcome;
use crate::model::{MultiIndex, Violation};
use crate::scalar::{Regime, ScalarError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scalar(#[from] ScalarError),

    #[error("expected {expected} components, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("regime mismatch: system is {expected}, value is {found}")]
    RegimeMismatch { expected: Regime, found: Regime },

    #[error("invalid system: {}", join_violations(.0))]
    InvalidSystem(Vec<Violation>),

    #[error("z_N(0) must be nonzero")]
    ZeroLastComponent,

    #[error("designated monomial is zero at equation {equation}, exponents {index}")]
    ZeroMonomial { equation: usize, index: MultiIndex },

    #[error("pivot ratio r_{equation} is zero")]
    ZeroPivotRatio { equation: usize },

    #[error("invalid solve spec: {0}")]
    InvalidSolveSpec(String),

    #[error("singular Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error(
        "Newton did not converge after {} iterations (residual {:e})",
        .0.iterations,
        .0.residual_norm
    )]
    NotConverged(Box<NewtonOutcome>),

    #[error("invalid document: {0}")]
    Document(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
