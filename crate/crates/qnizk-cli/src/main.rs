//! `qnizk`: reduce verifier circuits, run protocol sessions, collect statistics.
//!
//! Exit codes: 0 accept, 1 reject, 2 input error, 3 internal invariant violation.

mod config;
mod runner;
mod stats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qnizk::hamiltonian::reduce_circuit;
use qnizk::protocol::RepetitionConfig;

use config::{load_circuit, parse_instance, CliError, Mode, RunConfig};
use runner::{RunRecord, Runner};

const REDUCE_SCHEMA: &str = "qnizk-reduce/1";
/// Largest register for which `reduce` diagonalizes the Hamiltonian.
const SPECTRUM_QUBITS: usize = 12;
const TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "qnizk", version, about = "Non-interactive zero-knowledge arguments for QMA on a desk-scale simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a verifier circuit to its Clifford Hamiltonian and check the energy bound.
    Reduce {
        #[command(flatten)]
        input: CircuitArgs,
        /// Write the Hamiltonian as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one (possibly repeated) protocol execution.
    Run {
        #[command(flatten)]
        proto: ProtocolArgs,
        /// Write the run record (transcripts, extraction reports) as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-run a saved record and check it reproduces byte for byte.
        #[arg(long, conflicts_with = "out")]
        replay: Option<PathBuf>,
    },
    /// Repeat runs under derived seeds and report acceptance and extraction statistics.
    Stats {
        #[command(flatten)]
        proto: ProtocolArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CircuitArgs {
    /// Circuit JSON path, or the name of a fixture under QNIZK_FIXTURES.
    #[arg(long, default_value = "accept")]
    circuit: String,
    /// Instance bits, e.g. 101.
    #[arg(long)]
    instance: Option<String>,
}

#[derive(Args)]
struct ProtocolArgs {
    #[command(flatten)]
    input: CircuitArgs,
    /// honest | adversary:<name> | zk-sim | extract-aoqk | extract-poqk
    #[arg(long, default_value = "honest")]
    mode: Mode,
    /// Prover facing the extractor (honest or an adversary name).
    #[arg(long)]
    prover: Option<String>,
    #[arg(long, default_value_t = 2)]
    steane_level: u32,
    /// Parallel copies per round.
    #[arg(long, default_value_t = 1)]
    parallel_k: usize,
    /// Sequential rounds.
    #[arg(long, default_value_t = 1)]
    sequential: usize,
    /// Master seed; required, there is no ambient randomness.
    #[arg(long)]
    seed: Option<u64>,
}

impl ProtocolArgs {
    fn config(&self, need_seed: bool) -> Result<RunConfig, CliError> {
        let circuit = load_circuit(&self.input.circuit)?;
        let instance = parse_instance(self.input.instance.as_deref(), &circuit)?;
        let seed = match self.seed {
            Some(s) => s,
            None if need_seed => return Err(CliError::Input("--seed is required".into())),
            None => 0,
        };
        let cfg = RunConfig {
            mode: self.mode.clone(),
            prover: self.prover.clone(),
            circuit,
            instance,
            steane_level: self.steane_level,
            repetition: RepetitionConfig { k: self.parallel_k, n_seq: self.sequential },
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json(path: &PathBuf, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn verdict(accept: bool) -> ExitCode {
    ExitCode::from(if accept { 0 } else { 1 })
}

fn reduce(input: &CircuitArgs, out: Option<&PathBuf>) -> Result<ExitCode, CliError> {
    let u = load_circuit(&input.circuit)?;
    let x = match input.instance.as_deref() {
        Some(_) => Some(parse_instance(input.instance.as_deref(), &u)?),
        None if u.n_instance == 0 => Some(Vec::new()),
        None => None,
    };
    if let Some(x) = &x {
        if x.len() != u.n_instance {
            return Err(CliError::Input(format!("circuit has {} instance bit(s), --instance gave {}", u.n_instance, x.len())));
        }
    }
    let h = reduce_circuit(&u).map_err(|e| CliError::Input(e.to_string()))?;
    let locality = h.terms.iter().map(|t| t.locality()).max().unwrap_or(0);
    if locality > 5 {
        return Err(CliError::Internal(format!("term locality {locality} exceeds 5")));
    }
    let q = h.num_qubits();
    let spectrum = if q <= SPECTRUM_QUBITS { Some(h.spectrum().map_err(|e| CliError::Internal(e.to_string()))?) } else { None };
    let max_acceptance = match &x {
        Some(x) => Some(u.max_acceptance(x).map_err(|e| CliError::Internal(e.to_string()))?),
        None => None,
    };
    // The history state of the best witness has energy (1 - p)/(T + 1).
    let bound = max_acceptance.map(|p| (1.0 - p) / (u.num_gates() + 1) as f64);
    let min_eig = spectrum.as_ref().map(|s| s[0]);
    let holds = match (min_eig, bound) {
        (Some(e), Some(b)) => Some(e <= b + TOL),
        _ => None,
    };
    let report = json!({
        "schema_version": REDUCE_SCHEMA,
        "circuit": input.circuit,
        "qubits": q,
        "registers": h.registers,
        "counts": h.counts(),
        "locality": locality,
        "min_eigenvalue": min_eig,
        "max_eigenvalue": spectrum.as_ref().and_then(|s| s.last().copied()),
        "max_acceptance": max_acceptance,
        "energy_bound": bound,
        "bound_holds": holds,
    });
    println!("{report}");
    if let Some(path) = out {
        write_json(path, &h.to_dump())?;
    }
    eprintln!(
        "{} qubits, {} terms (locality {locality}); λ_min {}",
        q,
        h.num_terms(),
        min_eig.map_or("not computed".into(), |e| format!("{e:.6}"))
    );
    if holds == Some(false) {
        return Err(CliError::Internal(format!("λ_min {} exceeds the history-state bound {}", min_eig.unwrap(), bound.unwrap())));
    }
    Ok(ExitCode::SUCCESS)
}

fn summary_line(rec: &RunRecord) -> serde_json::Value {
    json!({
        "schema_version": rec.schema_version,
        "mode": rec.mode,
        "prover": rec.prover,
        "seed": rec.seed,
        "sessions": rec.transcripts.len().max(rec.extraction.len()),
        "decision": if rec.decision { "accept" } else { "reject" },
        "extracted": rec.extraction.iter().filter(|r| r.success).count(),
        "bot": rec.extraction.iter().filter(|r| r.bot).count(),
    })
}

fn run(proto: &ProtocolArgs, out: Option<&PathBuf>, replay: Option<&PathBuf>) -> Result<ExitCode, CliError> {
    if let Some(path) = replay {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let saved: RunRecord = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if saved.schema_version != runner::RUN_SCHEMA {
            return Err(CliError::Input(format!("unsupported record version {:?}", saved.schema_version)));
        }
        let runner = Runner::new(saved.config()?)?;
        let again = runner.record(&saved.circuit_name, runner.run(saved.seed)?);
        if again.canonical_bytes() != saved.canonical_bytes() {
            return Err(CliError::Internal("replay diverged from the saved record".into()));
        }
        println!("{}", json!({ "replay": "identical", "summary": summary_line(&again) }));
        eprintln!("replay identical: {} session(s), {}", again.transcripts.len().max(again.extraction.len()), if again.decision { "accept" } else { "reject" });
        return Ok(verdict(again.decision));
    }

    let cfg = proto.config(true)?;
    let runner = Runner::new(cfg)?;
    let rec = runner.record(&proto.input.circuit, runner.run(runner.cfg.seed)?);
    if let Some(path) = out {
        write_json(path, &rec)?;
    }
    println!("{}", summary_line(&rec));
    for (i, t) in rec.transcripts.iter().enumerate() {
        eprintln!("session {i}: {}", if t.decision { "accept" } else { "reject" });
    }
    for (i, r) in rec.extraction.iter().enumerate() {
        match r.energy {
            Some(e) => eprintln!("session {i}: extracted, energy {e:.6}, quality {:.6}", r.quality.unwrap_or(f64::NAN)),
            None => eprintln!("session {i}: ⊥ ({})", r.reason.as_deref().unwrap_or("no reason")),
        }
    }
    eprintln!("decision: {}", if rec.decision { "accept" } else { "reject" });
    Ok(verdict(rec.decision))
}

fn stats(proto: &ProtocolArgs, trials: usize, jobs: Option<usize>, out: Option<&PathBuf>) -> Result<ExitCode, CliError> {
    if trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let cfg = proto.config(true)?;
    let seed = cfg.seed;
    let runner = Runner::new(cfg)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Input("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Internal(e.to_string()))?;
    let start = std::time::Instant::now();
    let results = pool.install(|| stats::run_trials(&runner, seed, trials))?;
    let report = stats::summarize(&runner, seed, &results);
    println!("{}", serde_json::to_string(&report).map_err(|e| CliError::Internal(e.to_string()))?);
    if let Some(path) = out {
        write_json(path, &report)?;
    }
    let a = &report.acceptance;
    eprintln!(
        "{}/{} accepted ({:.4}, 95% CI [{:.4}, {:.4}]) in {:.1?}",
        a.accepted,
        a.trials,
        a.rate,
        a.wilson95.0,
        a.wilson95.1,
        start.elapsed()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Reduce { input, out } => reduce(input, out.as_ref()),
        Command::Run { proto, out, replay } => run(proto, out.as_ref(), replay.as_ref()),
        Command::Stats { proto, trials, jobs, out } => stats(proto, *trials, *jobs, out.as_ref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
