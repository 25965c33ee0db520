//! Non-interactive zero-knowledge arguments for QMA at desk scale.

pub mod authcode;
pub mod bits;
pub mod crypto;
pub mod fixtures;
pub mod hamiltonian;
pub mod knowledge;
pub mod predicates;
pub mod protocol;
pub mod quantum;
