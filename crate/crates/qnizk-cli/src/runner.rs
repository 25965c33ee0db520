use serde::{Deserialize, Serialize};

use qnizk::bits;
use qnizk::hamiltonian::VerifierCircuit;
use qnizk::knowledge::{adversaries, extract_aoqk, extract_poqk, ExtractionReport, SimulatorProver};
use qnizk::protocol::{
    run_session, run_session_with_crs, setup_crs, Protocol, ProtocolContext, ProverMachine, RepetitionConfig, SessionSeeds,
    StandardProver, StandardVerifier, Transcript,
};

use crate::config::{CliError, Mode, RunConfig};

pub const RUN_SCHEMA: &str = "qnizk-run/1";

/// What a run writes to --out and what --replay reads back.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: String,
    pub mode: String,
    pub prover: String,
    pub circuit_name: String,
    /// The circuit itself, so a record replays without the original file.
    pub circuit: String,
    pub instance: String,
    pub steane_level: u32,
    pub repetition: RepetitionConfig,
    pub seed: u64,
    pub decision: bool,
    pub transcripts: Vec<Transcript>,
    pub extraction: Vec<ExtractionReport>,
}

impl RunRecord {
    /// Bytes compared on replay: everything except the free-form circuit name.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_value(self).expect("record serializes");
        v.as_object_mut().expect("object").remove("circuit_name");
        serde_json::to_vec(&v).expect("record serializes")
    }

    pub fn config(&self) -> Result<RunConfig, CliError> {
        let circuit = VerifierCircuit::from_json(&self.circuit).map_err(|e| CliError::Input(format!("record circuit: {e}")))?;
        let instance = bits::parse_bitstring(&self.instance).ok_or_else(|| CliError::Input("record instance is not a bitstring".into()))?;
        let mode: Mode = self.mode.parse().map_err(CliError::Input)?;
        let prover = (mode.is_extraction()).then(|| self.prover.clone());
        let cfg = RunConfig { mode, prover, circuit, instance, steane_level: self.steane_level, repetition: self.repetition, seed: self.seed };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One session's outcome as the harness sees it.
#[derive(Clone, Debug)]
pub struct SessionOutcome {
    pub decision: bool,
    pub r: Option<usize>,
    pub transcript: Option<Transcript>,
    pub extraction: Option<ExtractionReport>,
}

pub struct Runner {
    pub proto: Protocol,
    pub cfg: RunConfig,
}

impl Runner {
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        let ctx = ProtocolContext::new(cfg.circuit.clone(), cfg.instance.clone(), cfg.steane_level)?;
        Ok(Runner { proto: Protocol::new(ctx), cfg })
    }

    fn prover(&self, name: &str) -> Result<StandardProver, CliError> {
        Ok(match name {
            "honest" => StandardProver::honest(&self.proto)?,
            other => adversaries::by_name(&self.proto, other)?,
        })
    }

    pub fn prover_name(&self) -> String {
        match &self.cfg.mode {
            Mode::Honest | Mode::ZkSim => "honest".into(),
            Mode::Adversary(n) => n.clone(),
            Mode::ExtractAoqk | Mode::ExtractPoqk => self.cfg.prover.clone().unwrap_or_else(|| "honest".into()),
        }
    }

    pub fn session(&self, seeds: SessionSeeds) -> Result<SessionOutcome, CliError> {
        let proto = &self.proto;
        let mut verifier = StandardVerifier::honest();
        match &self.cfg.mode {
            Mode::Honest | Mode::Adversary(_) => {
                let mut p = self.prover(&self.prover_name())?;
                let art = run_session(proto, &mut p, &mut verifier, seeds)?;
                Ok(SessionOutcome { decision: art.transcript.decision, r: art.r, transcript: Some(art.transcript), extraction: None })
            }
            Mode::ZkSim => {
                let (crs, td) = setup_crs(proto, &mut seeds.stream("setup"))?;
                let mut sim = SimulatorProver::new(td.sk_v, td.gamma);
                let art = run_session_with_crs(proto, &crs, &mut sim, &mut verifier, seeds)?;
                Ok(SessionOutcome { decision: art.transcript.decision, r: art.r, transcript: Some(art.transcript), extraction: None })
            }
            Mode::ExtractAoqk | Mode::ExtractPoqk => {
                let mut p = self.prover(&self.prover_name())?;
                let p: &mut dyn ProverMachine = &mut p;
                let rep = if self.cfg.mode == Mode::ExtractAoqk { extract_aoqk(proto, p, seeds)? } else { extract_poqk(proto, p, seeds)? };
                if let Some(e) = rep.energy {
                    if !(-1e-9..=1.0 + 1e-9).contains(&e) {
                        return Err(CliError::Internal(format!("extracted energy {e} outside [0, 1]")));
                    }
                }
                Ok(SessionOutcome { decision: rep.decision, r: rep.challenge, transcript: None, extraction: Some(rep) })
            }
        }
    }

    /// All k × n_seq sessions of one run under `master`.
    pub fn run(&self, master: u64) -> Result<Vec<SessionOutcome>, CliError> {
        let RepetitionConfig { k, n_seq } = self.cfg.repetition;
        let mut out = Vec::with_capacity(k * n_seq);
        for round in 0..n_seq {
            for copy in 0..k {
                out.push(self.session(SessionSeeds { master, copy: copy as u32, round: round as u32 })?);
            }
        }
        Ok(out)
    }

    pub fn record(&self, circuit_name: &str, sessions: Vec<SessionOutcome>) -> RunRecord {
        let decision = sessions.iter().all(|s| s.decision);
        let mut transcripts = Vec::new();
        let mut extraction = Vec::new();
        for s in sessions {
            transcripts.extend(s.transcript);
            extraction.extend(s.extraction);
        }
        RunRecord {
            schema_version: RUN_SCHEMA.into(),
            mode: self.cfg.mode.to_string(),
            prover: self.prover_name(),
            circuit_name: circuit_name.into(),
            circuit: self.cfg.circuit.to_json(),
            instance: bits::to_bitstring(&self.cfg.instance),
            steane_level: self.cfg.steane_level,
            repetition: self.cfg.repetition,
            seed: self.cfg.seed,
            decision,
            transcripts,
            extraction,
        }
    }
}
