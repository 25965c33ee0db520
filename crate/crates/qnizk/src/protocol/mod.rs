//! Setup, verifier and prover steps, wire types and the proving relation.
//!
//! EPR pairs are not materialized. The session fixes the prover's encoded
//! state, samples the teleport record d uniformly and lets the verifier
//! measure the state with pads shifted by d, which is the same joint
//! distribution as measuring first and teleporting later.

mod machines;
mod session;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use machines::{
    prover_prepare, prover_respond, ProveMode, ProverFirst, ProverMachine, ProverStrategy, StandardProver, StandardVerifier,
    VerifierFirst, VerifierMachine, VerifierStrategy,
};
pub use session::{
    replay_matches, run_repeated, run_session, run_session_with_crs, RepetitionConfig, RepetitionOutcome, SessionArtifacts,
    SessionSeeds, Transcript, TRANSCRIPT_VERSION,
};

use crate::authcode::{measure_encoded, AuthError, EncodedStateHandle, EncodingKey, SteaneCode};
use crate::bits;
use crate::crypto::fhe::{self, Ciphertext, FhePublicKey, FheSecretKey};
use crate::crypto::nizk::{AttestationCrs, AttestationProof, AttestationTrapdoor};
use crate::crypto::{com_commit, com_gen, com_verify, hex32, sha256, Attestation, ComError, ComParams, ComPublicKey, ComSecretKey, Commitment, FheError, NizkBackend, NizkError, Relation};
use crate::hamiltonian::{extended_term, reduce_circuit, CircuitError, CliffordHamiltonian, HamiltonianError, VerifierCircuit};
use crate::predicates::{eval_q, PredicateContext, PredicateError, PredicateInput};

/// Width of the committed challenge.
pub const R_BITS: usize = 16;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("protocol order violated: {0}")]
    Order(String),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Auth(#[from] AuthError),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    Fhe(#[from] FheError),
    #[error(transparent)]
    Com(#[from] ComError),
    #[error(transparent)]
    Nizk(#[from] NizkError),
}

/// Everything both parties agree on before the CRS: circuit, instance, code.
#[derive(Debug)]
pub struct ProtocolContext {
    pub circuit: VerifierCircuit,
    pub ham: CliffordHamiltonian,
    pub x: Vec<bool>,
    pub code: SteaneCode,
    /// Parameters of pk_V (commits to r).
    pub com_v: ComParams,
    /// Parameters of pk_P (commits to the encoding key).
    pub com_p: ComParams,
}

impl ProtocolContext {
    pub fn new(circuit: VerifierCircuit, x: Vec<bool>, steane_level: u32) -> Result<Self, ProtocolError> {
        if x.len() != circuit.n_instance {
            return Err(ProtocolError::Malformed(format!("instance has {} bits, circuit expects {}", x.len(), circuit.n_instance)));
        }
        let ham = reduce_circuit(&circuit)?;
        if ham.num_terms() + x.len() >= 1 << R_BITS {
            return Err(ProtocolError::Malformed("too many challenges for the r encoding".into()));
        }
        Ok(ProtocolContext {
            circuit,
            ham,
            x,
            code: SteaneCode::new(steane_level)?,
            com_v: ComParams::toy(),
            com_p: ComParams::toy_strengthened(),
        })
    }

    pub fn predicates(&self) -> PredicateContext<'_> {
        PredicateContext { ham: &self.ham, x: &self.x, code: self.code }
    }

    /// Number of Hamiltonian terms.
    pub fn m(&self) -> usize {
        self.ham.num_terms()
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Logical qubits of the encoded state.
    pub fn p(&self) -> usize {
        self.ham.num_qubits()
    }

    pub fn teleport_width(&self) -> usize {
        4 * self.code.block_len() * self.p()
    }
}

/// Shared execution environment: the context and the NIZK functionality.
#[derive(Clone, Debug)]
pub struct Protocol {
    pub ctx: Arc<ProtocolContext>,
    pub nizk: Attestation<KeyRelation>,
}

impl Protocol {
    pub fn new(ctx: ProtocolContext) -> Self {
        let ctx = Arc::new(ctx);
        Protocol { nizk: Attestation::new(KeyRelation { ctx: Arc::clone(&ctx) }), ctx }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crs {
    pub gamma: AttestationCrs,
    pub pk_p: ComPublicKey,
    pub pk_v: ComPublicKey,
}

/// Trapdoors of a CRS, held only by extractors and simulators.
#[derive(Clone, Debug)]
pub struct CrsTrapdoors {
    pub sk_p: ComSecretKey,
    pub sk_v: ComSecretKey,
    pub gamma: AttestationTrapdoor,
}

/// γ, (pk_P, sk_P) and (pk_V, sk_V) drawn independently.
pub fn setup_crs<R: Rng + ?Sized>(proto: &Protocol, rng: &mut R) -> Result<(Crs, CrsTrapdoors), ProtocolError> {
    let (gamma, gamma_td) = proto.nizk.sim_setup(rng);
    let kp = com_gen(proto.ctx.com_p, rng)?;
    let kv = com_gen(proto.ctx.com_v, rng)?;
    Ok((Crs { gamma, pk_p: kp.pk, pk_v: kv.pk }, CrsTrapdoors { sk_p: kp.sk, sk_v: kv.sk, gamma: gamma_td }))
}

/// r = r' for r' ≤ m, else m+1.
pub fn collapse_challenge(r_prime: usize, m: usize) -> usize {
    if r_prime <= m {
        r_prime
    } else {
        m + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessingMessage {
    pub pk_e: FhePublicKey,
    pub sigma: Commitment,
    pub alpha: Ciphertext,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverMessage {
    #[serde(with = "bits::hex_bits")]
    pub d: Vec<bool>,
    pub sigma_keys: Commitment,
    pub proof_ct: Ciphertext,
}

/// Plaintext of α.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierPlaintext {
    pub r: usize,
    #[serde(with = "hex32")]
    pub s_v: [u8; 32],
    #[serde(with = "bits::hex_bits")]
    pub z: Vec<bool>,
}

/// Plaintext of π̃'.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CircuitOutput {
    Bot,
    Proof {
        #[serde(with = "bits::hex_bits")]
        d: Vec<bool>,
        proof: AttestationProof,
    },
}

impl CircuitOutput {
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("circuit output serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        serde_json::from_slice(bytes).ok()
    }
}

#[derive(Clone, Debug)]
pub struct VerifierState {
    pub r_prime: usize,
    pub r: usize,
    pub s_v: [u8; 32],
    pub sigma: Commitment,
    pub sk_e: FheSecretKey,
    pub z: Option<Vec<bool>>,
}

/// Steps (i)-(ii): sample r', collapse it, commit to r, generate FHE keys.
/// `forced_r` pins r' for targeted tests.
pub fn verifier_commit<R: Rng + ?Sized>(
    proto: &Protocol,
    crs: &Crs,
    forced_r: Option<usize>,
    rng: &mut R,
) -> Result<(VerifierState, FhePublicKey), ProtocolError> {
    let (m, n) = (proto.ctx.m(), proto.ctx.n());
    let r_prime = match forced_r {
        Some(r) if (1..=m + n).contains(&r) => r,
        Some(r) => return Err(ProtocolError::Malformed(format!("forced challenge {r} outside 1..={}", m + n))),
        None => rng.gen_range(1..=m + n),
    };
    let r = collapse_challenge(r_prime, m);
    let s_v: [u8; 32] = rng.gen();
    let sigma = com_commit(&crs.pk_v, &bits::int_to_bits(r as u64, R_BITS), &s_v);
    let (pk_e, sk_e) = fhe::gen(rng);
    Ok((VerifierState { r_prime, r, s_v, sigma, sk_e, z: None }, pk_e))
}

/// Step (iii): measure the received (teleported) state for challenge r.
pub fn verifier_measure<R: Rng + ?Sized>(
    proto: &Protocol,
    state: &mut VerifierState,
    received: &EncodedStateHandle,
    rng: &mut R,
) -> Result<Vec<bool>, ProtocolError> {
    let term = extended_term(&proto.ctx.ham, state.r, &proto.ctx.x)?;
    let z = measure_encoded(received, &term, rng)?.z;
    state.z = Some(z.clone());
    Ok(z)
}

/// Step (iv): α = Enc(pk_E, (r, s_V, z)).
pub fn verifier_alpha<R: Rng + ?Sized>(plain: &VerifierPlaintext, pk_e: &FhePublicKey, rng: &mut R) -> Ciphertext {
    fhe::enc(pk_e, &serde_json::to_vec(plain).expect("plaintext serializes"), rng)
}

/// Decrypt π̃', check d-consistency and verify the NIZK.
pub fn verifier_decide(proto: &Protocol, crs: &Crs, state: &VerifierState, msg: &ProverMessage) -> bool {
    let Some(z) = &state.z else { return false };
    let Ok(plain) = fhe::dec(&state.sk_e, &msg.proof_ct) else { return false };
    match CircuitOutput::from_bytes(&plain) {
        Some(CircuitOutput::Proof { d, proof }) => {
            if d != msg.d || d.len() != proto.ctx.teleport_width() {
                return false;
            }
            let stmt = KeyStatement {
                pk_p: crs.pk_p.clone(),
                sigma_keys: msg.sigma_keys.clone(),
                r: state.r,
                z: z.clone(),
                d,
                x: proto.ctx.x.clone(),
            };
            proto.nizk.verify(&crs.gamma, &stmt, &proof)
        }
        _ => false,
    }
}

/// Statement of the proving relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyStatement {
    pub pk_p: ComPublicKey,
    pub sigma_keys: Commitment,
    pub r: usize,
    pub z: Vec<bool>,
    pub d: Vec<bool>,
    pub x: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyWitness {
    pub key: EncodingKey,
    #[serde(with = "hex32")]
    pub s_p: [u8; 32],
}

/// σ_keys opens to (t, π, a, b) under s_P, and Q(t, π, a, b, r, z, d) = 1.
#[derive(Clone, Debug)]
pub struct KeyRelation {
    pub ctx: Arc<ProtocolContext>,
}

impl Relation for KeyRelation {
    type Statement = KeyStatement;
    type Witness = KeyWitness;

    fn holds(&self, stmt: &KeyStatement, w: &KeyWitness) -> bool {
        if stmt.x != self.ctx.x || w.key.num_logical() != self.ctx.p() {
            return false;
        }
        let input = PredicateInput { key: w.key.clone(), r: stmt.r, z: stmt.z.clone(), d: stmt.d.clone() };
        matches!(eval_q(&self.ctx.predicates(), &input), Ok(true))
            && com_verify(&stmt.pk_p, &stmt.sigma_keys, &w.key.to_bits(), &w.s_p)
    }

    fn statement_bytes(&self, stmt: &KeyStatement) -> Vec<u8> {
        let pk = sha256(&[&serde_json::to_vec(&stmt.pk_p).expect("pk serializes")]);
        let mut out = Vec::new();
        out.extend(pk);
        out.extend(stmt.sigma_keys.digest());
        out.extend((stmt.r as u64).to_be_bytes());
        for v in [&stmt.z, &stmt.d, &stmt.x] {
            out.extend((v.len() as u64).to_be_bytes());
            out.extend(bits::pack(v));
        }
        out
    }

    fn witness_bytes(&self, w: &KeyWitness) -> Vec<u8> {
        serde_json::to_vec(w).expect("witness serializes")
    }
}
