//! Interactive machines. A prover is driven through `first` (encoded state
//! and key commitment) and `second` (homomorphic response); a verifier through
//! `commit_challenge`, `measure` and `decide`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{
    verifier_alpha, verifier_commit, verifier_decide, verifier_measure, CircuitOutput, Crs, KeyStatement, KeyWitness,
    PreprocessingMessage, Protocol, ProtocolError, ProverMessage, VerifierPlaintext, VerifierState, R_BITS,
};
use crate::authcode::{encode, keygen, EncodedStateHandle, EncodingKey};
use crate::bits;
use crate::crypto::fhe::{self, Ciphertext, FheCircuit, FhePublicKey};
use crate::crypto::nizk::{AttestationProof, AttestationTrapdoor};
use crate::crypto::{com_commit, com_verify, BitCommitment, Commitment, NizkBackend};
use crate::hamiltonian::history_state;
use crate::predicates::{eval_q, PredicateInput};
use crate::quantum::Statevector;

/// The verifier's first message as seen by the prover.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierFirst {
    pub pk_e: FhePublicKey,
    pub sigma: Commitment,
}

/// The prover's first output: the state it teleports and σ_keys.
#[derive(Clone, Debug)]
pub struct ProverFirst {
    pub handle: EncodedStateHandle,
    pub sigma_keys: Commitment,
}

pub trait ProverMachine: Send {
    fn name(&self) -> String;
    fn first(&mut self, proto: &Protocol, crs: &Crs, vf: &VerifierFirst, rng: &mut ChaCha20Rng) -> Result<ProverFirst, ProtocolError>;
    /// `d` is the actual teleport record.
    fn second(
        &mut self,
        proto: &Protocol,
        crs: &Crs,
        pre: &PreprocessingMessage,
        d: &[bool],
        rng: &mut ChaCha20Rng,
    ) -> Result<ProverMessage, ProtocolError>;
}

pub trait VerifierMachine: Send {
    fn name(&self) -> String;
    fn commit_challenge(&mut self, proto: &Protocol, crs: &Crs, rng: &mut ChaCha20Rng) -> Result<VerifierFirst, ProtocolError>;
    fn measure(&mut self, proto: &Protocol, received: &EncodedStateHandle, rng: &mut ChaCha20Rng) -> Result<Ciphertext, ProtocolError>;
    fn decide(&mut self, proto: &Protocol, crs: &Crs, msg: &ProverMessage) -> Result<bool, ProtocolError>;
    /// Internal state after `commit_challenge`; used by harnesses that play the verifier.
    fn state(&self) -> Option<&VerifierState>;
}

/// How the response circuit proves.
#[derive(Clone, Copy)]
pub enum ProveMode<'a> {
    Real,
    Simulated(&'a AttestationTrapdoor),
}

/// The circuit C evaluated under FHE: check σ opens to r, check Q, then prove.
struct ResponseCircuit<'a> {
    proto: &'a Protocol,
    crs: &'a Crs,
    sigma: &'a Commitment,
    key: &'a EncodingKey,
    s_p: [u8; 32],
    sigma_keys: &'a Commitment,
    d: &'a [bool],
    mode: ProveMode<'a>,
}

impl ResponseCircuit<'_> {
    fn run(&self, input: &[u8]) -> CircuitOutput {
        let Ok(plain) = serde_json::from_slice::<VerifierPlaintext>(input) else {
            return CircuitOutput::Bot;
        };
        if plain.r >= 1 << R_BITS || !com_verify(&self.crs.pk_v, self.sigma, &bits::int_to_bits(plain.r as u64, R_BITS), &plain.s_v) {
            return CircuitOutput::Bot;
        }
        let input = PredicateInput { key: self.key.clone(), r: plain.r, z: plain.z.clone(), d: self.d.to_vec() };
        if !matches!(eval_q(&self.proto.ctx.predicates(), &input), Ok(true)) {
            return CircuitOutput::Bot;
        }
        let stmt = KeyStatement {
            pk_p: self.crs.pk_p.clone(),
            sigma_keys: self.sigma_keys.clone(),
            r: plain.r,
            z: plain.z,
            d: self.d.to_vec(),
            x: self.proto.ctx.x.clone(),
        };
        // The circuit is deterministic; its coins are hardwired.
        let mut coins = ChaCha20Rng::from_seed(self.s_p);
        let proof = match self.mode {
            ProveMode::Real => {
                let w = KeyWitness { key: self.key.clone(), s_p: self.s_p };
                self.proto.nizk.prove(&self.crs.gamma, &stmt, &w, &mut coins)
            }
            ProveMode::Simulated(td) => self.proto.nizk.sim_prove(&self.crs.gamma, td, &stmt, &mut coins),
        };
        match proof {
            Ok(proof) => CircuitOutput::Proof { d: self.d.to_vec(), proof },
            Err(_) => CircuitOutput::Bot,
        }
    }
}

impl FheCircuit for ResponseCircuit<'_> {
    fn descriptor(&self) -> Vec<u8> {
        let mut out = b"qnizk-response".to_vec();
        out.extend(self.sigma_keys.digest());
        out.extend(bits::pack(self.d));
        out
    }

    fn apply(&self, inputs: &[&[u8]]) -> Result<Vec<u8>, String> {
        match inputs {
            [input] => Ok(self.run(input).to_bytes()),
            _ => Ok(CircuitOutput::Bot.to_bytes()),
        }
    }
}

/// Steps 1-2 for a prover encoding `logical`: sample a key, encode, commit.
pub fn prover_prepare(
    proto: &Protocol,
    crs: &Crs,
    logical: &Statevector,
    rng: &mut ChaCha20Rng,
) -> Result<(ProverFirst, EncodingKey, [u8; 32]), ProtocolError> {
    let key = keygen(proto.ctx.p(), &proto.ctx.code, rng);
    let s_p: [u8; 32] = rng.gen();
    let sigma_keys = com_commit(&crs.pk_p, &key.to_bits(), &s_p);
    let handle = encode(logical, &key, &proto.ctx.code)?;
    Ok((ProverFirst { handle, sigma_keys }, key, s_p))
}

/// Steps 4-5: evaluate the response circuit on α and refresh.
#[allow(clippy::too_many_arguments)]
pub fn prover_respond(
    proto: &Protocol,
    crs: &Crs,
    pre: &PreprocessingMessage,
    key: &EncodingKey,
    s_p: [u8; 32],
    sigma_keys: &Commitment,
    d: &[bool],
    mode: ProveMode,
    rng: &mut ChaCha20Rng,
) -> Result<ProverMessage, ProtocolError> {
    let circuit = ResponseCircuit { proto, crs, sigma: &pre.sigma, key, s_p, sigma_keys, d, mode };
    let evaluated = fhe::eval(&pre.pk_e, &circuit, &[&pre.alpha])?;
    let proof_ct = fhe::refresh(&pre.pk_e, &evaluated, rng)?;
    Ok(ProverMessage { d: d.to_vec(), sigma_keys: sigma_keys.clone(), proof_ct })
}

/// What a [`StandardProver`] encodes and where it deviates.
#[derive(Clone, Debug)]
pub struct ProverStrategy {
    pub name: String,
    pub state: Statevector,
    /// Report d with this bit flipped.
    pub flip_d: Option<usize>,
    /// Send a commitment that opens to nothing.
    pub bad_commitment: bool,
    /// Skip the circuit and encrypt a made-up proof.
    pub forged_proof: bool,
}

impl ProverStrategy {
    pub fn encode(name: &str, state: Statevector) -> Self {
        ProverStrategy { name: name.into(), state, flip_d: None, bad_commitment: false, forged_proof: false }
    }

    /// History state of the best witness for the protocol's instance.
    pub fn honest(proto: &Protocol) -> Result<Self, ProtocolError> {
        let ctx = &proto.ctx;
        let witness = ctx.circuit.best_witness(&ctx.x)?;
        Ok(Self::encode("honest", history_state(&ctx.circuit, &ctx.x, &witness)?.state))
    }
}

#[derive(Clone, Debug)]
struct Secrets {
    key: EncodingKey,
    s_p: [u8; 32],
    sigma_keys: Commitment,
}

#[derive(Clone, Debug)]
pub struct StandardProver {
    pub strategy: ProverStrategy,
    secrets: Option<Secrets>,
}

impl StandardProver {
    pub fn new(strategy: ProverStrategy) -> Self {
        StandardProver { strategy, secrets: None }
    }

    pub fn honest(proto: &Protocol) -> Result<Self, ProtocolError> {
        Ok(Self::new(ProverStrategy::honest(proto)?))
    }

    fn secrets(&self) -> Result<Secrets, ProtocolError> {
        self.secrets.clone().ok_or_else(|| ProtocolError::Order("second before first".into()))
    }
}

fn garbage_commitment(len: usize, crs: &Crs, rng: &mut ChaCha20Rng) -> Commitment {
    let p = crs.pk_p.params;
    let mut draw = |k: usize| (0..k).map(|_| rng.gen_range(0..p.q) as u16).collect::<Vec<u16>>();
    let bits = (0..len)
        .map(|_| BitCommitment { z1: draw(p.m), z2: draw(p.n), z3: draw(1)[0], z4: Some(draw(p.z4_len())) })
        .collect();
    Commitment { bits }
}

impl ProverMachine for StandardProver {
    fn name(&self) -> String {
        self.strategy.name.clone()
    }

    fn first(&mut self, proto: &Protocol, crs: &Crs, _vf: &VerifierFirst, rng: &mut ChaCha20Rng) -> Result<ProverFirst, ProtocolError> {
        if self.secrets.is_some() {
            return Err(ProtocolError::Order("first called twice".into()));
        }
        let (mut first, key, s_p) = prover_prepare(proto, crs, &self.strategy.state, rng)?;
        if self.strategy.bad_commitment {
            first.sigma_keys = garbage_commitment(first.sigma_keys.len(), crs, rng);
        }
        self.secrets = Some(Secrets { key, s_p, sigma_keys: first.sigma_keys.clone() });
        Ok(first)
    }

    fn second(
        &mut self,
        proto: &Protocol,
        crs: &Crs,
        pre: &PreprocessingMessage,
        d: &[bool],
        rng: &mut ChaCha20Rng,
    ) -> Result<ProverMessage, ProtocolError> {
        let s = self.secrets()?;
        let mut d = d.to_vec();
        if let Some(i) = self.strategy.flip_d {
            let i = i % d.len();
            d[i] ^= true;
        }
        if self.strategy.forged_proof {
            let out = CircuitOutput::Proof { d: d.clone(), proof: AttestationProof { tag: rng.gen() } };
            let proof_ct = fhe::enc(&pre.pk_e, &out.to_bytes(), rng);
            return Ok(ProverMessage { d, sigma_keys: s.sigma_keys, proof_ct });
        }
        prover_respond(proto, crs, pre, &s.key, s.s_p, &s.sigma_keys, &d, ProveMode::Real, rng)
    }
}

/// Verifier behaviour: honest, with a pinned challenge, or encrypting a shifted r in α.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VerifierStrategy {
    pub forced_r: Option<usize>,
    pub alpha_r_shift: usize,
}

#[derive(Clone, Debug, Default)]
pub struct StandardVerifier {
    pub strategy: VerifierStrategy,
    state: Option<VerifierState>,
    pk_e: Option<FhePublicKey>,
}

impl StandardVerifier {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn with_challenge(r_prime: usize) -> Self {
        StandardVerifier { strategy: VerifierStrategy { forced_r: Some(r_prime), alpha_r_shift: 0 }, ..Self::default() }
    }

    pub fn mismatched_alpha() -> Self {
        StandardVerifier { strategy: VerifierStrategy { forced_r: None, alpha_r_shift: 1 }, ..Self::default() }
    }
}

impl VerifierMachine for StandardVerifier {
    fn name(&self) -> String {
        if self.strategy.alpha_r_shift != 0 {
            "mismatched-alpha".into()
        } else {
            "honest".into()
        }
    }

    fn commit_challenge(&mut self, proto: &Protocol, crs: &Crs, rng: &mut ChaCha20Rng) -> Result<VerifierFirst, ProtocolError> {
        if self.state.is_some() {
            return Err(ProtocolError::Order("challenge committed twice".into()));
        }
        let (st, pk_e) = verifier_commit(proto, crs, self.strategy.forced_r, rng)?;
        let vf = VerifierFirst { pk_e, sigma: st.sigma.clone() };
        self.state = Some(st);
        self.pk_e = Some(pk_e);
        Ok(vf)
    }

    fn measure(&mut self, proto: &Protocol, received: &EncodedStateHandle, rng: &mut ChaCha20Rng) -> Result<Ciphertext, ProtocolError> {
        let (Some(st), Some(pk_e)) = (self.state.as_mut(), self.pk_e) else {
            return Err(ProtocolError::Order("measure before commit".into()));
        };
        let z = verifier_measure(proto, st, received, rng)?;
        let plain = VerifierPlaintext { r: st.r + self.strategy.alpha_r_shift, s_v: st.s_v, z };
        Ok(verifier_alpha(&plain, &pk_e, rng))
    }

    fn decide(&mut self, proto: &Protocol, crs: &Crs, msg: &ProverMessage) -> Result<bool, ProtocolError> {
        let st = self.state.as_ref().ok_or_else(|| ProtocolError::Order("decide before commit".into()))?;
        if st.z.is_none() {
            return Err(ProtocolError::Order("decide before measure".into()));
        }
        Ok(verifier_decide(proto, crs, st, msg))
    }

    fn state(&self) -> Option<&VerifierState> {
        self.state.as_ref()
    }
}
