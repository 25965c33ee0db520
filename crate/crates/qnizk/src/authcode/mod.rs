//! Trap-based authentication code: concatenated Steane encoding, traps,
//! a block permutation and a Pauli one-time pad. Encoded states are kept
//! symbolic (logical state plus key).

mod encoded;
mod key;
pub mod phi;
mod steane;

pub use encoded::{
    decode, decode_classical, encode, measure_encoded, measurement_distribution, pad_pushthrough, trap_amplitude,
    unpermute, EncodedStateHandle, MeasurementRecord, PadPushResult,
};
pub(crate) use encoded::split_blocks;
pub use key::{keygen, EncodingKey, Trap};
pub use steane::{steane_tables, SteaneCode};

use thiserror::Error;

use crate::quantum::QuantumError;

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("unsupported Steane level {0} (1..=3)")]
    UnsupportedLevel(u32),
    #[error("width mismatch: expected {expected}, got {got}")]
    Width { expected: usize, got: usize },
    #[error("malformed key: {0}")]
    MalformedKey(String),
    #[error("logical qubit {qubit} outside a handle of {logical} logical qubits")]
    SupportOutsideHandle { qubit: usize, logical: usize },
    #[error("undecodable: permutation does not match the encoding")]
    Undecodable,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}
