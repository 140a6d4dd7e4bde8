use thiserror::Error;

/// Errors raised by state construction, protocol runs and report handling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("slot {slot} out of range for dimension {dim}")]
    InvalidSlot { slot: usize, dim: usize },

    #[error("slot {0} listed more than once")]
    DuplicateSlot(usize),

    #[error("operation needs distinct slots, got {0} twice")]
    SlotCollision(usize),

    #[error("unknown block label `{0}`")]
    UnknownLabel(String),

    #[error("states live on different partitions")]
    PartitionMismatch,

    #[error("phase {modulus} is not unimodular")]
    NonUnimodularPhase { modulus: f64 },

    #[error("matrix is not unitary (max |U†U - I| = {deviation:e})")]
    NonUnitary { deviation: f64 },

    #[error("matrix is {rows}x{cols} but acts on {slots} slots")]
    ShapeMismatch { rows: usize, cols: usize, slots: usize },

    #[error("ledgers are not aligned: {0}")]
    MisalignedLedgers(String),

    #[error("ledger cannot be paired into send/return rounds: {0}")]
    UnpairableLedger(String),

    #[error("cost `{name}` is negative ({value})")]
    NegativeCost { name: &'static str, value: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A run finished in a state that breaks a protocol invariant
    /// (norm drift, non-empty channel).
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by the caller's input rather than by the
    /// simulation itself.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
