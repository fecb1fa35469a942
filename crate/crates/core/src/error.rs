use thiserror::Error;

use crate::pvqd::PvqdTrajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("{kind} gate needs {expected} distinct target(s), got {targets:?}")]
    InvalidTargets {
        kind: &'static str,
        expected: usize,
        targets: Vec<usize>,
    },

    #[error("gate angle must be finite, got {0}")]
    NonFiniteAngle(f64),

    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },

    #[error("noise channels need the density-matrix backend")]
    NoiseOnPureState,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{n_qubits} qubits exceeds the {limit}-qubit cap for this operation")]
    SizeCap { n_qubits: usize, limit: usize },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("subsystem must keep at least one qubit")]
    EmptySubsystem,

    #[error("subsystem size {m} out of range for a {n}-qubit register")]
    SubsystemOutOfRange { m: usize, n: usize },

    #[error("shot count must be positive")]
    ZeroShots,

    #[error("readout calibration matrix of qubit {0} is singular")]
    SingularCalibration(usize),

    #[error("{name} = {value} is not a probability")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("matrix is not Hermitian (residue {0:e})")]
    NotHermitian(f64),

    #[error("parameter slot {0} is not bound to exactly one unit-scaled Pauli rotation")]
    ParameterShiftUnsupported(usize),

    #[error("non-finite cost at iteration {iteration}")]
    NonFiniteCost { iteration: usize },

    #[error("p-VQD aborted at step {step}: {reason}")]
    PvqdAborted {
        step: usize,
        reason: String,
        partial: Box<PvqdTrajectory>,
    },

    #[error("trajectory has no step at t = {0}")]
    MissingTrajectory(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
