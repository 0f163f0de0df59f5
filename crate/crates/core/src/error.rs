// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::optimizer::Trace;

pub type Result<T> = std::result::Result<T, QngError>;

#[derive(Debug, Error)]
pub enum QngError {
    #[error("Hermite order {order} exceeds the supported maximum {max}")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("invalid Fock pair ({m}, {n}): {reason}")]
    InvalidPair {
        m: usize,
        n: usize,
        reason: &'static str,
    },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("truncation risk: {0}")]
    TruncationRisk(String),

    #[error("optimizer did not converge: {message}")]
    NonConvergence { message: String, trace: Box<Trace> },

    #[error("invalid search specification: {0}")]
    InvalidSearch(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(
        "ill-conditioned design matrix (condition number {condition:.3e}); record a longer signal"
    )]
    IllConditioned { condition: f64 },

    #[error("pulse sequence: {0}")]
    Sequence(String),

    #[error("simulation failed at delay {delay} s: {source}")]
    Simulation {
        delay: f64,
        #[source]
        source: Box<QngError>,
    },
}
