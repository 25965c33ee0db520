//! Extractors, the zero-knowledge simulator and canned adversaries.

pub mod adversaries;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::authcode::{decode, encode, keygen, EncodedStateHandle, EncodingKey};
use crate::bits;
use crate::crypto::fhe;
use crate::crypto::{com_commit, com_recover, com_verify, ComSecretKey};
use crate::crypto::nizk::AttestationTrapdoor;
use crate::hamiltonian::{
    challenge_weighted_energy, energy, extended_term, witness_map_tau, ChallengeKind, CliffordHamiltonian, HamiltonianError,
};
use crate::protocol::{
    prover_respond, run_session_with_crs, setup_crs, CircuitOutput, Crs, KeyWitness, PreprocessingMessage, ProveMode, Protocol,
    ProtocolError, ProverFirst, ProverMachine, ProverMessage, SessionArtifacts, SessionSeeds, StandardVerifier, Transcript,
    VerifierFirst, VerifierMachine, R_BITS,
};
use crate::quantum::{apply_unitary, gates, DensityMatrix, Statevector, TOL};

/// ρ_r: passes challenge r with certainty.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedWitness {
    pub r: usize,
    pub state: Statevector,
}

/// For r ≤ m: C_r†|0…01⟩ on the support, |0⟩ elsewhere. For r = m+1:
/// instance register |x⟩, everything else |0⟩.
pub fn build_simulated_witness(h: &CliffordHamiltonian, x: &[bool], r: usize) -> Result<SimulatedWitness, HamiltonianError> {
    let term = extended_term(h, r, x)?;
    let p = h.num_qubits();
    let state = match term.kind {
        ChallengeKind::Hamiltonian => {
            let mut s = Statevector::zero(p);
            let last = *term.support.last().expect("terms have support");
            s.apply(&gates::x(), &[last])?;
            apply_unitary(&s, term.clifford.adjoint().matrix(), &term.support)?
        }
        ChallengeKind::InstanceCheck => {
            let mut b = vec![false; p];
            for (i, &xi) in x.iter().enumerate() {
                b[h.registers.instance(i)] = xi;
            }
            Statevector::from_bits(&b)
        }
    };
    let rho = state.to_density();
    let penalty = rho.expectation(&term.rejection_projector(x), &term.support)?;
    if penalty > TOL {
        return Err(HamiltonianError::SizeMismatch(format!("simulated witness for r = {r} has penalty {penalty}")));
    }
    Ok(SimulatedWitness { r, state })
}

/// K's output: ξ over the full logical register, or ⊥.
#[derive(Clone, Debug)]
pub struct ExtractedWitness {
    pub state: DensityMatrix,
    /// Acceptance probability of the verifying circuit on τ(ξ).
    pub quality: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub success: bool,
    pub bot: bool,
    pub reason: Option<String>,
    /// Challenge-averaged penalty Σ_r Pr[r]·Tr(P_r ξ).
    pub energy: Option<f64>,
    /// Tr(H ξ) over the unweighted Hamiltonian.
    pub raw_energy: Option<f64>,
    pub quality: Option<f64>,
    /// Single-copy acceptance probability of the state the verifier received, 1 − energy.
    pub acceptance_probability: Option<f64>,
    /// The verifier's decision in the extraction run.
    pub decision: bool,
    /// Challenge the verifier committed to.
    pub challenge: Option<usize>,
    pub seeds: SessionSeeds,
    #[serde(skip)]
    pub witness: Option<ExtractedWitness>,
}

impl ExtractionReport {
    fn bot(reason: impl Into<String>, decision: bool, seeds: SessionSeeds) -> Self {
        ExtractionReport {
            success: false,
            bot: true,
            reason: Some(reason.into()),
            energy: None,
            raw_energy: None,
            quality: None,
            acceptance_probability: None,
            decision,
            challenge: None,
            seeds,
            witness: None,
        }
    }
}

/// Φ^{⊗p}(Dec_{key ⊕ d}(received)) followed by the energy and τ bookkeeping.
fn finish(proto: &Protocol, received: &EncodedStateHandle, key: &EncodingKey, d: &[bool], decision: bool, seeds: SessionSeeds) -> Result<ExtractionReport, ProtocolError> {
    let Ok(key_d) = key.with_pad_xor(d) else {
        return Ok(ExtractionReport::bot("teleport record has the wrong width", decision, seeds));
    };
    let logical = match decode(received, &key_d) {
        Ok(s) => s,
        Err(e) => return Ok(ExtractionReport::bot(format!("decode failed: {e}"), decision, seeds)),
    };
    let ctx = &proto.ctx;
    let xi = logical.to_density();
    let e = challenge_weighted_energy(&ctx.ham, &ctx.x, &xi)?;
    let raw = energy(&ctx.ham, &xi)?;
    let tau = witness_map_tau(&ctx.circuit, &xi)?;
    let quality = ctx.circuit.acceptance_probability(&tau)?;
    Ok(ExtractionReport {
        success: true,
        bot: false,
        reason: None,
        energy: Some(e),
        raw_energy: Some(raw),
        quality: Some(quality),
        acceptance_probability: Some((1.0 - e).clamp(0.0, 1.0)),
        decision,
        challenge: None,
        seeds,
        witness: Some(ExtractedWitness { state: xi, quality }),
    })
}

fn extraction_run(
    proto: &Protocol,
    prover: &mut dyn ProverMachine,
    seeds: SessionSeeds,
) -> Result<(Crs, crate::protocol::CrsTrapdoors, SessionArtifacts, StandardVerifier), ProtocolError> {
    let (crs, td) = setup_crs(proto, &mut seeds.stream("setup"))?;
    let mut verifier = StandardVerifier::honest();
    let art = run_session_with_crs(proto, &crs, prover, &mut verifier, seeds)?;
    Ok((crs, td, art, verifier))
}

/// AoQK extractor: knows sk_P, opens σ_keys with it and decodes the received state.
pub fn extract_aoqk(proto: &Protocol, prover: &mut dyn ProverMachine, seeds: SessionSeeds) -> Result<ExtractionReport, ProtocolError> {
    let (crs, td, art, _) = extraction_run(proto, prover, seeds)?;
    let mut rep = aoqk_report(proto, &crs, &td, &art, seeds)?;
    rep.challenge = art.r;
    Ok(rep)
}

fn aoqk_report(
    proto: &Protocol,
    crs: &Crs,
    td: &crate::protocol::CrsTrapdoors,
    art: &SessionArtifacts,
    seeds: SessionSeeds,
) -> Result<ExtractionReport, ProtocolError> {
    let decision = art.transcript.decision;
    let msg = &art.transcript.prover;
    let recovered = match com_recover(&crs.pk_p, &td.sk_p, &msg.sigma_keys) {
        Ok(r) => r,
        Err(e) => return Ok(ExtractionReport::bot(format!("commitment recovery failed: {e}"), decision, seeds)),
    };
    let key = match EncodingKey::from_bits(&recovered.payload, proto.ctx.p(), &proto.ctx.code) {
        Ok(k) => k,
        Err(e) => return Ok(ExtractionReport::bot(format!("malformed opening: {e}"), decision, seeds)),
    };
    finish(proto, &art.received, &key, &msg.d, decision, seeds)
}

/// PoQK extractor: reads the opening (key, s_P) through the proof-of-knowledge
/// extraction hook instead of the commitment trapdoor.
pub fn extract_poqk(proto: &Protocol, prover: &mut dyn ProverMachine, seeds: SessionSeeds) -> Result<ExtractionReport, ProtocolError> {
    let (crs, td, art, verifier) = extraction_run(proto, prover, seeds)?;
    let mut rep = poqk_report(proto, &crs, &td, &art, &verifier, seeds)?;
    rep.challenge = art.r;
    Ok(rep)
}

fn poqk_report(
    proto: &Protocol,
    crs: &Crs,
    td: &crate::protocol::CrsTrapdoors,
    art: &SessionArtifacts,
    verifier: &StandardVerifier,
    seeds: SessionSeeds,
) -> Result<ExtractionReport, ProtocolError> {
    let decision = art.transcript.decision;
    let msg = &art.transcript.prover;
    let st = verifier.state().ok_or_else(|| ProtocolError::Order("verifier never committed".into()))?;
    let proof = match fhe::dec(&st.sk_e, &msg.proof_ct).ok().and_then(|b| CircuitOutput::from_bytes(&b)) {
        Some(CircuitOutput::Proof { proof, .. }) => proof,
        _ => return Ok(ExtractionReport::bot("no proof of knowledge", decision, seeds)),
    };
    let witness = match proto.nizk.extract(&crs.gamma, &td.gamma, &proof)? {
        Some(bytes) => serde_json::from_slice::<KeyWitness>(&bytes).ok(),
        None => None,
    };
    let Some(w) = witness else {
        return Ok(ExtractionReport::bot("proof-of-knowledge extraction failed", decision, seeds));
    };
    if !com_verify(&crs.pk_p, &msg.sigma_keys, &w.key.to_bits(), &w.s_p) {
        return Ok(ExtractionReport::bot("extracted opening does not match the commitment", decision, seeds));
    }
    finish(proto, &art.received, &w.key, &msg.d, decision, seeds)
}

/// The simulated prover. Holds CRS trapdoors, never a witness: recovers r
/// from σ, encodes ρ_r, commits to a fixed key and proves with the simulator.
pub struct SimulatorProver {
    sk_v: ComSecretKey,
    gamma_td: AttestationTrapdoor,
    secrets: Option<(EncodingKey, [u8; 32], crate::crypto::Commitment)>,
    /// r recovered from σ, if any.
    pub recovered_r: Option<usize>,
}

impl SimulatorProver {
    pub fn new(sk_v: ComSecretKey, gamma_td: AttestationTrapdoor) -> Self {
        SimulatorProver { sk_v, gamma_td, secrets: None, recovered_r: None }
    }
}

impl ProverMachine for SimulatorProver {
    fn name(&self) -> String {
        "honest".into()
    }

    fn first(&mut self, proto: &Protocol, crs: &Crs, vf: &VerifierFirst, rng: &mut ChaCha20Rng) -> Result<ProverFirst, ProtocolError> {
        let ctx = &proto.ctx;
        let r = com_recover(&crs.pk_v, &self.sk_v, &vf.sigma)
            .ok()
            .map(|rec| bits::bits_to_int(&rec.payload) as usize)
            .filter(|&r| vf.sigma.len() == R_BITS && (1..=ctx.m() + 1).contains(&r));
        self.recovered_r = r;
        let logical = match r {
            Some(r) => build_simulated_witness(&ctx.ham, &ctx.x, r)?.state,
            None => Statevector::zero(ctx.p()),
        };
        let key = keygen(ctx.p(), &ctx.code, rng);
        let s_p: [u8; 32] = rng.gen();
        let sigma_keys = com_commit(&crs.pk_p, &EncodingKey::fixed(ctx.p(), &ctx.code).to_bits(), &s_p);
        let handle = encode(&logical, &key, &ctx.code)?;
        self.secrets = Some((key, s_p, sigma_keys.clone()));
        Ok(ProverFirst { handle, sigma_keys })
    }

    fn second(
        &mut self,
        proto: &Protocol,
        crs: &Crs,
        pre: &PreprocessingMessage,
        d: &[bool],
        rng: &mut ChaCha20Rng,
    ) -> Result<ProverMessage, ProtocolError> {
        let (key, s_p, sigma_keys) = self.secrets.as_ref().ok_or_else(|| ProtocolError::Order("second before first".into()))?;
        prover_respond(proto, crs, pre, key, *s_p, sigma_keys, d, ProveMode::Simulated(&self.gamma_td), rng)
    }
}

/// Simulated transcript against `verifier`. Takes no witness.
pub fn zk_simulate(proto: &Protocol, verifier: &mut dyn VerifierMachine, seeds: SessionSeeds) -> Result<Transcript, ProtocolError> {
    let (crs, td) = setup_crs(proto, &mut seeds.stream("setup"))?;
    let mut sim = SimulatorProver::new(td.sk_v, td.gamma);
    Ok(run_session_with_crs(proto, &crs, &mut sim, verifier, seeds)?.transcript)
}
