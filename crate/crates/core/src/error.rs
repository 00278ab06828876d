use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ScmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ScmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("permission denied: {0}")]
    PermissionDenied(String),

    #[error("engine busy: {0}")]
    Busy(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Snapshot(#[from] SnapshotError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Failures while reading or writing a memory snapshot. Each load failure
/// mode gets its own variant so callers can tell them apart.
#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot file not found: {0}")]
    Missing(PathBuf),

    #[error("malformed snapshot: {0}")]
    Malformed(String),

    #[error("unsupported snapshot version {found} (supported: {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    #[error("corrupt snapshot: {0}")]
    Integrity(String),

    #[error("snapshot i/o error: {0}")]
    Io(#[from] std::io::Error),
}
