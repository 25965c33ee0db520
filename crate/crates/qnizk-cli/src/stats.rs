use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::CliError;
use crate::runner::{Runner, SessionOutcome};

pub const STATS_SCHEMA: &str = "qnizk-stats/1";
const BINS: usize = 10;

/// Master seed of trial `i`: word 0 of ChaCha20 stream `i` under `seed`.
pub fn trial_seed(seed: u64, i: u64) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng.next_u64()
}

/// 95% Wilson score interval.
pub fn wilson(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let (n, p) = (n as f64, successes as f64 / n as f64);
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Serialize)]
pub struct Acceptance {
    pub accepted: usize,
    pub trials: usize,
    pub rate: f64,
    pub wilson95: (f64, f64),
}

#[derive(Debug, Serialize)]
pub struct InstanceCheck {
    pub challenge: usize,
    pub observed: f64,
    pub expected: f64,
    pub wilson95: (f64, f64),
}

#[derive(Debug, Serialize)]
pub struct ChallengeRow {
    pub sessions: usize,
    pub accepted: usize,
}

#[derive(Debug, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    fn unit(values: &[f64]) -> Self {
        let mut counts = vec![0; BINS];
        for &v in values {
            counts[((v.clamp(0.0, 1.0) * BINS as f64) as usize).min(BINS - 1)] += 1;
        }
        Histogram { lo: 0.0, hi: 1.0, counts }
    }
}

#[derive(Debug, Serialize)]
pub struct ExtractionStats {
    pub sessions: usize,
    pub bot: usize,
    pub mean_energy: Option<f64>,
    pub mean_quality: Option<f64>,
    pub energy: Histogram,
    pub quality: Histogram,
}

#[derive(Debug, Serialize)]
pub struct StatsReport {
    pub schema_version: &'static str,
    pub mode: String,
    pub prover: String,
    pub seed: u64,
    pub acceptance: Acceptance,
    pub sessions: usize,
    pub challenges: BTreeMap<usize, ChallengeRow>,
    pub instance_check: Option<InstanceCheck>,
    pub extraction: Option<ExtractionStats>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn run_trials(runner: &Runner, seed: u64, trials: usize) -> Result<Vec<Vec<SessionOutcome>>, CliError> {
    (0..trials as u64).into_par_iter().map(|i| runner.run(trial_seed(seed, i))).collect()
}

pub fn summarize(runner: &Runner, seed: u64, trials: &[Vec<SessionOutcome>]) -> StatsReport {
    let accepted = trials.iter().filter(|t| t.iter().all(|s| s.decision)).count();
    let mut challenges: BTreeMap<usize, ChallengeRow> = BTreeMap::new();
    let sessions: Vec<&SessionOutcome> = trials.iter().flatten().collect();
    for s in &sessions {
        if let Some(r) = s.r {
            let row = challenges.entry(r).or_insert(ChallengeRow { sessions: 0, accepted: 0 });
            row.sessions += 1;
            row.accepted += usize::from(s.decision);
        }
    }

    let ctx = &runner.proto.ctx;
    let total = ctx.m() + ctx.n();
    let with_r = sessions.iter().filter(|s| s.r.is_some()).count();
    let instance_check = (with_r > 0).then(|| {
        let hits = challenges.get(&(ctx.m() + 1)).map_or(0, |row| row.sessions);
        InstanceCheck {
            challenge: ctx.m() + 1,
            observed: hits as f64 / with_r as f64,
            expected: ctx.n() as f64 / total as f64,
            wilson95: wilson(hits, with_r),
        }
    });

    let reports: Vec<_> = sessions.iter().filter_map(|s| s.extraction.as_ref()).collect();
    let extraction = (!reports.is_empty()).then(|| {
        let energies: Vec<f64> = reports.iter().filter_map(|r| r.energy).collect();
        let qualities: Vec<f64> = reports.iter().filter_map(|r| r.quality).collect();
        ExtractionStats {
            sessions: reports.len(),
            bot: reports.iter().filter(|r| r.bot).count(),
            mean_energy: mean(&energies),
            mean_quality: mean(&qualities),
            energy: Histogram::unit(&energies),
            quality: Histogram::unit(&qualities),
        }
    });

    StatsReport {
        schema_version: STATS_SCHEMA,
        mode: runner.cfg.mode.to_string(),
        prover: runner.prover_name(),
        seed,
        acceptance: Acceptance {
            accepted,
            trials: trials.len(),
            rate: if trials.is_empty() { 0.0 } else { accepted as f64 / trials.len() as f64 },
            wilson95: wilson(accepted, trials.len()),
        },
        sessions: sessions.len(),
        challenges,
        instance_check,
        extraction,
    }
}
