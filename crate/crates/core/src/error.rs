use thiserror::Error;

use crate::statevector::{MeasurementBasis, Outcome};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("register must hold at least one qubit")]
    EmptyRegister,
    #[error("bitstring {0:?} must consist of '0'/'1' characters")]
    InvalidBits(String),
    #[error("expected at least {min} qubits, got {got}")]
    TooFewQubits { min: usize, got: usize },
    #[error("amplitude vector length {0} is not a power of two")]
    BadLength(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("gate is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("control and target must differ (both {0})")]
    SameQubit(usize),
    #[error("register size mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("forced outcome {outcome} has probability {probability:e}")]
    ImpossibleOutcome { outcome: Outcome, probability: f64 },
    #[error("forced outcome {outcome} is not a {basis} basis label")]
    BasisMismatch {
        outcome: Outcome,
        basis: MeasurementBasis,
    },
    #[error("forced outcome list exhausted after {0} measurements")]
    OutcomesExhausted(usize),
    #[error("forced outcome list has {0} unused entries")]
    OutcomesUnused(usize),
    #[error("{actor} may not touch qubit {qubit}")]
    Locality { actor: String, qubit: String },
    #[error("protocol needs at least one controller")]
    NoControllers,
    #[error("controller {0} has an empty script")]
    EmptyScript(usize),
    #[error("target is not normalized (|alpha|^2 + |beta|^2 = {0})")]
    TargetNotNormalized(f64),
    #[error("{qubits} qubits exceed the enumeration bound of {bound}")]
    BoundExceeded { qubits: usize, bound: usize },
    #[error("unknown correction strategy {0:?}")]
    UnknownStrategy(String),
    #[error("no unique Pauli correction matches the oracle (matches: {0})")]
    NoUniquePauli(usize),
    #[error("invalid forced outcome string {0:?}")]
    BadForcedString(String),
    #[error("invalid config: {0}")]
    Config(String),
}
