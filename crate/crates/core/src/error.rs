use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A text document failed to parse. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected_rows}x{expected_cols}, got {got_rows}x{got_cols}")]
    DimsMismatch {
        expected_rows: u32,
        expected_cols: u32,
        got_rows: u32,
        got_cols: u32,
    },

    #[error("network error: {0}")]
    Network(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    /// An output neuron fired at a timestep its construction does not allow.
    #[error("contract violation: neuron {neuron} fired at t={t}: {detail}")]
    ContractViolation { neuron: u32, t: u32, detail: String },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("deployment model error: {0}")]
    Deployment(String),
}

pub type Result<T> = std::result::Result<T, Error>;
