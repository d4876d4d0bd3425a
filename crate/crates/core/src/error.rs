use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the simulator and protocol engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("target qubits must be distinct")]
    DuplicateTarget,

    #[error("unsupported qubit count {0} (supported: 1..=5)")]
    UnsupportedQubitCount(usize),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("measurement basis must not contain identity letters")]
    IdentityInBasis,

    #[error("bell measurement requires two distinct qubits")]
    SameQubit,

    #[error("`{name}` must be non-negative, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },

    #[error("probability `{name}` = {value} outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },

    #[error("efficiency {0} outside (0, 1]")]
    EfficiencyOutOfRange(f64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("trace vanished after clipping negative eigenvalues")]
    ZeroTrace,

    #[error("calibration set is empty")]
    EmptyCalibrationSet,

    #[error("no records for calibration state {index}; batch size too small")]
    EmptyStateGroup { index: usize },

    #[error("no sifted rounds available for an error-rate cost")]
    NothingSifted,

    #[error("cost is not finite: {0}")]
    NonFiniteCost(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("state is not pure; antipodal partner undefined")]
    NotPure,

    #[error("unexpected message: {0}")]
    UnexpectedMessage(String),

    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Failures decoding a classical-channel frame.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("bad magic {0:#06x}")]
    BadMagic(u16),

    #[error("unknown message tag {0:#04x}")]
    UnknownTag(u8),

    #[error("frame truncated: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },

    #[error("malformed frame: {0}")]
    Malformed(String),
}
