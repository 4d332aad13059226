use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit slot {slot} is out of range for {total} qubits")]
    SlotOutOfRange { slot: usize, total: usize },

    #[error("qubit slot {0} is used more than once")]
    DuplicateSlot(usize),

    #[error("Pauli word has {letters} letters but {slots} slots were given")]
    WordLengthMismatch { letters: usize, slots: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not dichotomic: max |M^2 - I| = {0:e}")]
    NotDichotomic(f64),

    #[error("operator is not a projector: max |P^2 - P| = {0:e}")]
    NotProjector(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("expectation has imaginary residue {0:e}; input is not Hermitian")]
    ImaginaryResidue(f64),

    #[error("unknown observable label `{0}`")]
    UnknownLabel(String),

    #[error("unknown sequence `{0}`")]
    UnknownSequence(String),

    #[error("outcome position {0} is not present in this distribution")]
    MissingPosition(String),

    #[error("noise parameter `{name}` = {value} is outside {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("configuration `{0}` is missing from the counts table")]
    MissingConfiguration(String),

    #[error("configuration `{0}` recorded no shots")]
    NoRecordedShots(String),

    #[error("standard error must be positive, got {0}")]
    NonPositiveError(f64),

    #[error("calibration targets infeasible: {0}")]
    InfeasibleTargets(String),

    #[error("{0}")]
    Config(String),

    /// Config diagnostic located by a JSON pointer (`""` for the root).
    #[error("config {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
