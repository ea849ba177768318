use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidGrid(String),

    #[error("item {w}x{d}x{h} m does not fit the bin in any orientation")]
    ItemTooLarge { w: f64, d: f64, h: f64 },

    #[error("invalid item dimensions: {0}")]
    InvalidDims(String),

    #[error("window at ({x},{y}) of size {w}x{d} exits the {nx}x{ny} grid")]
    OutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        d: usize,
        nx: usize,
        ny: usize,
    },

    #[error("placement rejected: rest height {rest} + box height {h} exceeds bin height {nz}")]
    HeightOverflow { rest: u32, h: u32, nz: u32 },

    #[error("sequence is empty")]
    EmptySequence,

    #[error("rejected action (o={orientation}, x={x}, y={y}): {reason}")]
    RejectedAction {
        orientation: usize,
        x: usize,
        y: usize,
        reason: String,
    },

    #[error("episode is already done")]
    EpisodeDone,

    #[error("invalid dataset bounds: {0}")]
    InvalidBounds(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sequence kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("truncated sequence: header declares {expected} items, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("contact model corrupted: {0}")]
    ModelCorruption(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("agent transport failed: {0}")]
    Transport(String),

    #[error("no stable action available")]
    NoAction,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
