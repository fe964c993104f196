// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("segment ({start}, {end}] has length {len}, below the minimum segment length {min}")]
    SegmentTooShort {
        start: usize,
        end: usize,
        len: usize,
        min: usize,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("solver state integrity violation: {0}")]
    Integrity(String),

    #[error("solver failed at penalty {beta}: {source}")]
    Solver {
        beta: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }

    /// Whether the error originates from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Self::NonFinite(_) | Self::Integrity(_) => true,
            Self::Solver { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
