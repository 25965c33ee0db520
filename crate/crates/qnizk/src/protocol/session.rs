//! Session orchestration, repetition and replay.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{setup_crs, Crs, PreprocessingMessage, Protocol, ProtocolError, ProverFirst, ProverMachine, ProverMessage, VerifierMachine};
use crate::authcode::EncodedStateHandle;
use crate::bits;
use crate::crypto::sha256;

pub const TRANSCRIPT_VERSION: &str = "qnizk-transcript/1";

/// Seeds of one session. Every party draws from its own labelled stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SessionSeeds {
    pub master: u64,
    pub copy: u32,
    pub round: u32,
}

impl SessionSeeds {
    pub fn new(master: u64) -> Self {
        SessionSeeds { master, copy: 0, round: 0 }
    }

    pub fn stream(&self, label: &str) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(sha256(&[
            b"qnizk-stream",
            &self.master.to_be_bytes(),
            &self.copy.to_be_bytes(),
            &self.round.to_be_bytes(),
            label.as_bytes(),
        ]))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Parties {
    pub prover: String,
    pub verifier: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Transcript {
    pub version: String,
    pub parties: Parties,
    pub steane_level: u32,
    pub crs: Crs,
    pub preprocessing: PreprocessingMessage,
    pub prover: ProverMessage,
    #[serde(with = "bits::hex_bits")]
    pub x: Vec<bool>,
    pub decision: bool,
    pub seeds: SessionSeeds,
    #[serde(skip)]
    pub elapsed: Option<Duration>,
}

impl Transcript {
    /// Canonical bytes; excludes timing.
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("transcript serializes")
    }
}

/// A transcript plus what only the harness sees: the prover's encoded state,
/// the state the verifier received and the actual teleport record.
#[derive(Clone, Debug)]
pub struct SessionArtifacts {
    pub transcript: Transcript,
    pub prover_first: ProverFirst,
    pub received: EncodedStateHandle,
    pub d: Vec<bool>,
    /// Challenge the verifier committed to, if it exposes its state.
    pub r: Option<usize>,
}

/// Run one session under a given CRS.
pub fn run_session_with_crs(
    proto: &Protocol,
    crs: &Crs,
    prover: &mut dyn ProverMachine,
    verifier: &mut dyn VerifierMachine,
    seeds: SessionSeeds,
) -> Result<SessionArtifacts, ProtocolError> {
    let start = Instant::now();
    let mut v_rng = seeds.stream("verifier");
    let mut p_rng = seeds.stream("prover");
    let mut channel = seeds.stream("channel");
    let mut m_rng = seeds.stream("measure");
    let ctx = &proto.ctx;

    let vf = verifier.commit_challenge(proto, crs, &mut v_rng)?;
    let first = prover.first(proto, crs, &vf, &mut p_rng)?;
    if first.handle.key.num_logical() != ctx.p() || first.handle.code != ctx.code {
        return Err(ProtocolError::Malformed("encoded state has the wrong geometry".into()));
    }
    let d = bits::random_bits(ctx.teleport_width(), &mut channel);
    let received = first.handle.with_pad_xor(&d)?;
    let alpha = verifier.measure(proto, &received, &mut m_rng)?;
    let pre = PreprocessingMessage { pk_e: vf.pk_e, sigma: vf.sigma, alpha };
    let msg = prover.second(proto, crs, &pre, &d, &mut p_rng)?;
    let decision = verifier.decide(proto, crs, &msg)?;
    let r = verifier.state().map(|s| s.r);

    let transcript = Transcript {
        version: TRANSCRIPT_VERSION.into(),
        parties: Parties { prover: prover.name(), verifier: verifier.name() },
        steane_level: ctx.code.level(),
        crs: crs.clone(),
        preprocessing: pre,
        prover: msg,
        x: ctx.x.clone(),
        decision,
        seeds,
        elapsed: Some(start.elapsed()),
    };
    Ok(SessionArtifacts { transcript, prover_first: first, received, d, r })
}

/// Setup from the session's "setup" stream, then run.
pub fn run_session(
    proto: &Protocol,
    prover: &mut dyn ProverMachine,
    verifier: &mut dyn VerifierMachine,
    seeds: SessionSeeds,
) -> Result<SessionArtifacts, ProtocolError> {
    let (crs, _) = setup_crs(proto, &mut seeds.stream("setup"))?;
    run_session_with_crs(proto, &crs, prover, verifier, seeds)
}

/// k parallel copies per round, n_seq rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepetitionConfig {
    pub k: usize,
    pub n_seq: usize,
}

impl Default for RepetitionConfig {
    fn default() -> Self {
        RepetitionConfig { k: 1, n_seq: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct RepetitionOutcome {
    pub transcripts: Vec<Transcript>,
    pub decision: bool,
}

/// Every copy gets its own setup, prover and verifier; accept iff all copies accept.
pub fn run_repeated<P, V>(
    proto: &Protocol,
    config: RepetitionConfig,
    master: u64,
    mut make_prover: P,
    mut make_verifier: V,
) -> Result<RepetitionOutcome, ProtocolError>
where
    P: FnMut() -> Result<Box<dyn ProverMachine>, ProtocolError>,
    V: FnMut() -> Box<dyn VerifierMachine>,
{
    if config.k == 0 || config.n_seq == 0 {
        return Err(ProtocolError::Malformed("repetition counts must be at least 1".into()));
    }
    let mut transcripts = Vec::with_capacity(config.k * config.n_seq);
    for round in 0..config.n_seq {
        for copy in 0..config.k {
            let seeds = SessionSeeds { master, copy: copy as u32, round: round as u32 };
            let mut prover = make_prover()?;
            let mut verifier = make_verifier();
            transcripts.push(run_session(proto, prover.as_mut(), verifier.as_mut(), seeds)?.transcript);
        }
    }
    let decision = transcripts.iter().all(|t| t.decision);
    Ok(RepetitionOutcome { transcripts, decision })
}

/// Re-run with the transcript's seeds and compare canonical bytes.
pub fn replay_matches(
    proto: &Protocol,
    transcript: &Transcript,
    prover: &mut dyn ProverMachine,
    verifier: &mut dyn VerifierMachine,
) -> Result<bool, ProtocolError> {
    let again = run_session(proto, prover, verifier, transcript.seeds)?;
    Ok(again.transcript.to_bytes() == transcript.to_bytes())
}
