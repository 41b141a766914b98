//! Shared error types for field plumbing.

use thiserror::Error;

/// Errors raised by grid/field arithmetic, traces and norms.
#[derive(Debug, Error)]
pub enum FieldError {
    /// Two fields combined in an arithmetic or pairing operation live on
    /// different grids.
    #[error("fields live on mismatched grids")]
    GridMismatch,
    /// A norm was requested in a space the discrete machinery does not
    /// support.
    #[error("unsupported function space: {0}")]
    UnsupportedSpace(String),
    /// A fractional Sobolev norm was requested for a field that is not
    /// (numerically) compactly supported inside its box, so zero-extension
    /// is invalid.
    #[error("field is not compactly supported (boundary magnitude {0:.3e})")]
    NonCompactSupport(f64),
    /// I/O failure while reading or writing a raw snapshot.
    #[error("snapshot i/o failed: {0}")]
    SnapshotIo(#[source] std::io::Error),
    /// Malformed raw snapshot contents.
    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),
}
