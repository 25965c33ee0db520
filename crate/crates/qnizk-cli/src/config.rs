use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qnizk::bits;
use qnizk::fixtures::fixture_dir;
use qnizk::hamiltonian::VerifierCircuit;
use qnizk::knowledge::adversaries::NAMES;
use qnizk::protocol::{ProtocolError, RepetitionConfig};

/// Exit-code classes: 2 for bad input, 3 for internal invariant violations.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Malformed(m) => CliError::Input(m),
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    Honest,
    Adversary(String),
    ZkSim,
    ExtractAoqk,
    ExtractPoqk,
}

impl Mode {
    pub fn is_extraction(&self) -> bool {
        matches!(self, Mode::ExtractAoqk | Mode::ExtractPoqk)
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "honest" => Ok(Mode::Honest),
            "zk-sim" => Ok(Mode::ZkSim),
            "extract-aoqk" => Ok(Mode::ExtractAoqk),
            "extract-poqk" => Ok(Mode::ExtractPoqk),
            other => match other.strip_prefix("adversary:") {
                Some(name) if NAMES.contains(&name.to_ascii_lowercase().as_str()) => Ok(Mode::Adversary(name.to_ascii_lowercase())),
                Some(name) => Err(format!("unknown adversary {name:?}; expected one of {}", NAMES.join(", "))),
                None => Err(format!("unknown mode {other:?}; expected honest, adversary:<name>, zk-sim, extract-aoqk or extract-poqk")),
            },
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Honest => f.write_str("honest"),
            Mode::Adversary(n) => write!(f, "adversary:{n}"),
            Mode::ZkSim => f.write_str("zk-sim"),
            Mode::ExtractAoqk => f.write_str("extract-aoqk"),
            Mode::ExtractPoqk => f.write_str("extract-poqk"),
        }
    }
}

/// Everything a run depends on. There is no ambient randomness: `seed` is required.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    /// Prover facing the extractor in extraction modes.
    pub prover: Option<String>,
    pub circuit: VerifierCircuit,
    pub instance: Vec<bool>,
    pub steane_level: u32,
    pub repetition: RepetitionConfig,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.instance.len() != self.circuit.n_instance {
            return Err(CliError::Input(format!(
                "circuit has {} instance bit(s), --instance gave {}",
                self.circuit.n_instance,
                self.instance.len()
            )));
        }
        if !(1..=2).contains(&self.steane_level) {
            return Err(CliError::Input(format!("--steane-level must be 1 or 2, got {}", self.steane_level)));
        }
        if self.repetition.k == 0 || self.repetition.n_seq == 0 {
            return Err(CliError::Input("--parallel-k and --sequential must be at least 1".into()));
        }
        if self.prover.is_some() && !self.mode.is_extraction() {
            return Err(CliError::Input("--prover only applies to extraction modes".into()));
        }
        if let Some(p) = &self.prover {
            if p != "honest" && !NAMES.contains(&p.as_str()) {
                return Err(CliError::Input(format!("unknown prover {p:?}; expected honest or one of {}", NAMES.join(", "))));
            }
        }
        Ok(())
    }
}

/// A path, or the name of a bundled fixture (looked up under QNIZK_FIXTURES).
pub fn resolve_circuit(arg: &str) -> PathBuf {
    let p = Path::new(arg);
    if p.exists() {
        return p.to_path_buf();
    }
    let name = arg.strip_suffix(".json").unwrap_or(arg);
    fixture_dir().join(format!("{name}.json"))
}

pub fn load_circuit(arg: &str) -> Result<VerifierCircuit, CliError> {
    let path = resolve_circuit(arg);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    VerifierCircuit::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn parse_instance(s: Option<&str>, circuit: &VerifierCircuit) -> Result<Vec<bool>, CliError> {
    match s {
        Some(s) => bits::parse_bitstring(s).ok_or_else(|| CliError::Input(format!("--instance must be a 0/1 string, got {s:?}"))),
        None if circuit.n_instance == 0 => Ok(Vec::new()),
        None => Err(CliError::Input(format!("circuit has {} instance bit(s); pass --instance", circuit.n_instance))),
    }
}
