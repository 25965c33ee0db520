//! Canned cheating provers.

use crate::hamiltonian::history_state;
use crate::protocol::{Protocol, ProtocolError, ProverStrategy, StandardProver};
use crate::quantum::Statevector;

use super::build_simulated_witness;

pub const NAMES: [&str; 6] = ["a1", "a2", "a3", "a4", "bad-commitment", "forged-proof"];

/// A1: no witness, encodes |0…0⟩.
pub fn zero_state(proto: &Protocol) -> StandardProver {
    StandardProver::new(ProverStrategy::encode("a1", Statevector::zero(proto.ctx.p())))
}

/// A2: honest history state for the complemented instance.
pub fn wrong_instance(proto: &Protocol) -> Result<StandardProver, ProtocolError> {
    let ctx = &proto.ctx;
    let wrong: Vec<bool> = ctx.x.iter().map(|b| !b).collect();
    let witness = ctx.circuit.best_witness(&wrong)?;
    let state = history_state(&ctx.circuit, &wrong, &witness)?.state;
    Ok(StandardProver::new(ProverStrategy::encode("a2", state)))
}

/// A3: the state that passes challenge `r_star` with certainty.
pub fn challenge_guess(proto: &Protocol, r_star: usize) -> Result<StandardProver, ProtocolError> {
    let sim = build_simulated_witness(&proto.ctx.ham, &proto.ctx.x, r_star)?;
    Ok(StandardProver::new(ProverStrategy::encode("a3", sim.state)))
}

/// A4: honest state, but reports the teleport record with bit `bit` flipped.
pub fn teleport_flip(proto: &Protocol, bit: usize) -> Result<StandardProver, ProtocolError> {
    let mut s = ProverStrategy::honest(proto)?;
    s.name = "a4".into();
    s.flip_d = Some(bit);
    Ok(StandardProver::new(s))
}

/// Honest state with a key commitment that opens to nothing.
pub fn bad_commitment(proto: &Protocol) -> Result<StandardProver, ProtocolError> {
    let mut s = ProverStrategy::honest(proto)?;
    s.name = "bad-commitment".into();
    s.bad_commitment = true;
    Ok(StandardProver::new(s))
}

/// Honest state, but the response is an encrypted made-up proof.
pub fn forged_proof(proto: &Protocol) -> Result<StandardProver, ProtocolError> {
    let mut s = ProverStrategy::honest(proto)?;
    s.name = "forged-proof".into();
    s.forged_proof = true;
    Ok(StandardProver::new(s))
}

pub fn by_name(proto: &Protocol, name: &str) -> Result<StandardProver, ProtocolError> {
    match name {
        "a1" => Ok(zero_state(proto)),
        "a2" => wrong_instance(proto),
        "a3" => challenge_guess(proto, 1),
        "a4" => teleport_flip(proto, 0),
        "bad-commitment" => bad_commitment(proto),
        "forged-proof" => forged_proof(proto),
        other => Err(ProtocolError::Malformed(format!("unknown adversary {other:?}; expected one of {NAMES:?}"))),
    }
}
