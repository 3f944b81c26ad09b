// Copyright 2026 qsens Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed arguments outside an operation's domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A numerical contract (Hermiticity, unitarity, finiteness) was violated.
    #[error("numerical contract violated: {0}")]
    Contract(String),

    /// `Tr[U_f† Φ]` vanished, so the fidelity phase is undefined.
    #[error("phase-undefined: target overlap trace is zero")]
    PhaseUndefined,

    #[error("log-sensitivity undefined at zero error")]
    ZeroError,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("insufficient sample: need at least {needed} points, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("optimizer aborted: {0}")]
    OptimizerAbort(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
