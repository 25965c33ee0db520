mod common;

use common::*;
use qnizk::fixtures::load_circuit;
use qnizk::hamiltonian::{challenge_weighted_energy, extended_term};
use qnizk::knowledge::adversaries;
use qnizk::protocol::{
    replay_matches, run_repeated, run_session, Protocol, ProtocolContext, ProverMachine, ProverStrategy, RepetitionConfig,
    SessionSeeds, StandardProver, StandardVerifier, VerifierMachine,
};
use qnizk::quantum::Statevector;

fn exact_acceptance(proto: &Protocol, state: &Statevector) -> f64 {
    1.0 - challenge_weighted_energy(&proto.ctx.ham, &proto.ctx.x, &state.to_density()).unwrap()
}

fn accepts(proto: &Protocol, strategy: &ProverStrategy, master: u64) -> bool {
    let mut p = StandardProver::new(strategy.clone());
    run_session(proto, &mut p, &mut StandardVerifier::honest(), SessionSeeds::new(master)).unwrap().transcript.decision
}

fn repeated(proto: &Protocol, strategy: &ProverStrategy, k: usize, master: u64) -> bool {
    run_repeated(
        proto,
        RepetitionConfig { k, n_seq: 1 },
        master,
        || Ok(Box::new(StandardProver::new(strategy.clone())) as Box<dyn ProverMachine>),
        || Box::new(StandardVerifier::honest()) as Box<dyn VerifierMachine>,
    )
    .unwrap()
    .decision
}

#[test]
fn honest_prover_always_accepted() {
    for (level, runs) in [(1, 200), (2, 30)] {
        let proto = accept_protocol(level);
        let s = ProverStrategy::honest(&proto).unwrap();
        let ok = (0..runs).filter(|&i| accepts(&proto, &s, 1000 + i)).count();
        assert_eq!(ok, runs as usize, "level {level}");
    }
}

#[test]
fn honest_parallel_copies_accepted() {
    let proto = accept_protocol(1);
    let s = ProverStrategy::honest(&proto).unwrap();
    assert!((0..50).all(|i| repeated(&proto, &s, 2, i)));
}

#[test]
fn zero_state_acceptance_matches_exact_value_and_amplifies() {
    let proto = accept_protocol(1);
    let a1 = adversaries::zero_state(&proto).strategy;
    let exact = exact_acceptance(&proto, &a1.state);
    assert!((exact - 0.875).abs() < 1e-9, "{exact}");
    let n = 600;
    let hits = (0..n).filter(|&i| accepts(&proto, &a1, 5000 + i)).count();
    let p_hat = hits as f64 / n as f64;
    let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!(p_hat < 1.0 && (p_hat - exact).abs() < 4.0 * sigma, "p̂ = {p_hat}");

    let k8 = (0..200).filter(|&i| repeated(&proto, &a1, 8, 9000 + i)).count() as f64 / 200.0;
    assert!(k8 < 0.5, "k=8 acceptance {k8}");
}

#[test]
fn parallel_failure_bounded_by_k_times_single_copy_failure() {
    // eps fixture: the best history state has nonzero energy, so c < 1.
    let proto = Protocol::new(ProtocolContext::new(load_circuit("eps").unwrap(), vec![], 1).unwrap());
    let s = ProverStrategy::honest(&proto).unwrap();
    let c = exact_acceptance(&proto, &s.state);
    assert!(c < 1.0 - 1e-3 && c > 0.5, "c = {c}");
    let n = 600;
    let single_fail = (0..n).filter(|&i| !accepts(&proto, &s, 20_000 + i)).count() as f64 / n as f64;
    let sigma1 = (c * (1.0 - c) / n as f64).sqrt();
    assert!((single_fail - (1.0 - c)).abs() < 4.0 * sigma1 + 1e-3, "single-copy failure {single_fail}, exact {}", 1.0 - c);
    let k = 2;
    let bound = k as f64 * (1.0 - c);
    let fail = (0..n).filter(|&i| !repeated(&proto, &s, k, 30_000 + i)).count() as f64 / n as f64;
    let sigma = (bound * (1.0 - bound).max(0.0) / n as f64).sqrt();
    assert!(fail <= bound + 3.0 * sigma, "k=2 failure {fail} > {bound}");
}

#[test]
fn cheating_provers() {
    let proto = accept_protocol(1);
    for name in ["bad-commitment", "forged-proof"] {
        let s = adversaries::by_name(&proto, name).unwrap().strategy;
        assert!((0..30).all(|i| !accepts(&proto, &s, 40_000 + i)), "{name}");
    }
    // A2 and A3 pass some challenges but not all; acceptance tracks the exact value.
    for name in ["a2", "a3"] {
        let s = adversaries::by_name(&proto, name).unwrap().strategy;
        let exact = exact_acceptance(&proto, &s.state);
        assert!(exact < 1.0 - 1e-3, "{name}: {exact}");
        let n = 400;
        let p_hat = (0..n).filter(|&i| accepts(&proto, &s, 50_000 + i)).count() as f64 / n as f64;
        let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((p_hat - exact).abs() < 4.0 * sigma + 1e-3, "{name}: p̂ = {p_hat}, exact {exact}");
    }
    assert!(adversaries::by_name(&proto, "nope").is_err());
}

#[test]
fn teleport_flip_only_matters_on_touched_blocks() {
    // A4 flips d_x of physical qubit 0, which belongs to logical qubit 0.
    let proto = accept_protocol(1);
    let s = adversaries::teleport_flip(&proto, 0).unwrap().strategy;
    let (mut touched, mut touched_rejected) = (0, 0);
    for i in 0..600 {
        let mut p = StandardProver::new(s.clone());
        let art = run_session(&proto, &mut p, &mut StandardVerifier::honest(), SessionSeeds::new(60_000 + i)).unwrap();
        let r = art.r.unwrap();
        let term = extended_term(&proto.ctx.ham, r, &proto.ctx.x).unwrap();
        if term.support.contains(&0) {
            touched += 1;
            touched_rejected += usize::from(!art.transcript.decision);
        } else {
            assert!(art.transcript.decision, "r = {r} does not touch qubit 0");
        }
    }
    assert!(touched > 0 && touched_rejected > 0, "{touched_rejected}/{touched}");
}

#[test]
fn transcripts_replay_byte_identically() {
    for level in [1, 2] {
        let proto = accept_protocol(level);
        for master in [0, 42, u64::MAX] {
            let mut p = StandardProver::honest(&proto).unwrap();
            let t = run_session(&proto, &mut p, &mut StandardVerifier::honest(), SessionSeeds::new(master)).unwrap().transcript;
            let mut p2 = StandardProver::honest(&proto).unwrap();
            assert!(replay_matches(&proto, &t, &mut p2, &mut StandardVerifier::honest()).unwrap());
            let mut a1 = adversaries::zero_state(&proto);
            let t = run_session(&proto, &mut a1, &mut StandardVerifier::honest(), SessionSeeds::new(master)).unwrap().transcript;
            let mut a1 = adversaries::zero_state(&proto);
            assert!(replay_matches(&proto, &t, &mut a1, &mut StandardVerifier::honest()).unwrap());
        }
    }
    let proto = accept_protocol(1);
    let mut p = StandardProver::honest(&proto).unwrap();
    let a = run_session(&proto, &mut p, &mut StandardVerifier::honest(), SessionSeeds::new(1)).unwrap().transcript;
    let mut p = StandardProver::honest(&proto).unwrap();
    let b = run_session(&proto, &mut p, &mut StandardVerifier::honest(), SessionSeeds::new(2)).unwrap().transcript;
    assert_ne!(a.to_bytes(), b.to_bytes());
}

#[test]
fn copies_draw_independent_challenges() {
    let proto = accept_protocol(1);
    let s = ProverStrategy::honest(&proto).unwrap();
    let total = proto.ctx.m() + proto.ctx.n();
    let n = 600;
    let mut pairs = Vec::with_capacity(n);
    for master in 0..n as u64 {
        let rs: Vec<f64> = (0..2)
            .map(|copy| {
                let seeds = SessionSeeds { master, copy, round: 0 };
                let mut p = StandardProver::new(s.clone());
                run_session(&proto, &mut p, &mut StandardVerifier::honest(), seeds).unwrap().r.unwrap() as f64
            })
            .collect();
        pairs.push((rs[0], rs[1]));
    }
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| pairs.iter().map(f).sum::<f64>() / n as f64;
    let (m0, m1) = (mean(&|p| p.0), mean(&|p| p.1));
    let cov = mean(&|p| (p.0 - m0) * (p.1 - m1));
    let var0 = mean(&|p| (p.0 - m0).powi(2));
    let var1 = mean(&|p| (p.1 - m1).powi(2));
    let corr = cov / (var0 * var1).sqrt();
    assert!(corr.abs() < 0.15, "correlation {corr}");
    // Marginal of the instance-check challenge: n/(m+n).
    let inst = pairs.iter().filter(|p| p.0 as usize == total).count();
    let (lo, hi) = wilson(inst, n);
    let expect = proto.ctx.n() as f64 / total as f64;
    assert!(lo <= expect && expect <= hi, "Pr[r = m+1] in [{lo}, {hi}], expected {expect}");
}
