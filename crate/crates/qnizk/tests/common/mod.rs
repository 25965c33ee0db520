#![allow(dead_code)]

use std::collections::HashMap;
use std::hash::Hash;

use qnizk::authcode::phi::steane_encode_dense;
use qnizk::authcode::{pad_pushthrough, trap_amplitude, unpermute, EncodedStateHandle, EncodingKey, SteaneCode};
use qnizk::crypto::fhe::{BoolCircuit, BoolGate};
use qnizk::fixtures::load_circuit;
use qnizk::hamiltonian::{ChallengeKind, ChallengeTerm};
use qnizk::protocol::{Protocol, ProtocolContext, ProverMachine, StandardProver};
use qnizk::quantum::{c, index_to_bits, CMat, CliffordOp, Statevector, C64};
use rand::Rng;

/// The zero-energy fixture with x = 1.
pub fn accept_protocol(level: u32) -> Protocol {
    Protocol::new(ProtocolContext::new(load_circuit("accept").unwrap(), vec![true], level).unwrap())
}

pub fn honest(proto: &Protocol) -> Box<dyn ProverMachine> {
    Box::new(StandardProver::honest(proto).unwrap())
}

pub fn counts<K: Hash + Eq>(items: impl IntoIterator<Item = K>) -> HashMap<K, usize> {
    let mut m = HashMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

/// Total variation between two empirical distributions.
pub fn tv_counts<K: Hash + Eq + Clone>(a: &HashMap<K, usize>, b: &HashMap<K, usize>) -> f64 {
    let na = a.values().sum::<usize>() as f64;
    let nb = b.values().sum::<usize>() as f64;
    let mut keys: Vec<&K> = a.keys().collect();
    keys.extend(b.keys().filter(|k| !a.contains_key(*k)));
    keys.iter()
        .map(|k| (*a.get(*k).unwrap_or(&0) as f64 / na - *b.get(*k).unwrap_or(&0) as f64 / nb).abs())
        .sum::<f64>()
        / 2.0
}

/// Empirical counts against exact probabilities.
pub fn tv_exact<K: Hash + Eq>(emp: &HashMap<K, usize>, exact: &HashMap<K, f64>) -> f64 {
    let n = emp.values().sum::<usize>() as f64;
    let mut s: f64 = exact.iter().map(|(k, p)| (*emp.get(k).unwrap_or(&0) as f64 / n - p).abs()).sum();
    s += emp.iter().filter(|(k, _)| !exact.contains_key(*k)).map(|(_, c)| *c as f64 / n).sum::<f64>();
    s / 2.0
}

pub fn one_qubit_term(clifford: CliffordOp) -> ChallengeTerm {
    let mut p0 = CMat::zeros(2, 2);
    p0[(0, 0)] = c(1.0, 0.0);
    let projector = clifford.adjoint().matrix() * p0 * clifford.matrix();
    ChallengeTerm { r: 1, kind: ChallengeKind::Hamiltonian, support: vec![0], clifford, projector }
}

/// cos θ|0⟩ + e^{iφ} sin θ|1⟩.
pub fn qubit(theta: f64, phi: f64) -> Statevector {
    Statevector::new(vec![c(theta.cos(), 0.0), C64::from_polar(theta.sin(), phi)]).unwrap()
}

/// Dense 2N-qubit physical state of a one-block handle, built from scratch:
/// Steane encoding ⊗ traps, permuted, then X^a Z^b.
pub fn dense_block(handle: &EncodedStateHandle) -> Vec<C64> {
    let key = &handle.key;
    assert_eq!(key.num_logical(), 1);
    assert_eq!(key.block, 7);
    let mut pre = steane_encode_dense(&handle.logical);
    for t in &key.traps[0] {
        pre = pre.tensor(&t.state());
    }
    let w = 14;
    let mut out = vec![c(0.0, 0.0); 1 << w];
    for (idx, amp) in pre.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let pb = index_to_bits(idx, w);
        let mut phys = vec![false; w];
        for j in 0..w {
            phys[key.perm[j]] = pb[j];
        }
        let sign = phys.iter().zip(&key.b).filter(|(x, b)| **x && **b).count() % 2;
        let flipped: Vec<bool> = phys.iter().zip(&key.a).map(|(x, a)| x ^ a).collect();
        let mut k = 0usize;
        for b in &flipped {
            k = (k << 1) | usize::from(*b);
        }
        out[k] = if sign == 1 { -amp } else { *amp };
    }
    out
}

/// U on every qubit of a big-endian dense state.
pub fn apply_transversal(state: &mut [C64], u: &CMat) {
    let n = state.len().trailing_zeros() as usize;
    for q in 0..n {
        let stride = 1 << (n - 1 - q);
        for base in 0..state.len() {
            if base & stride != 0 {
                continue;
            }
            let (s0, s1) = (state[base], state[base | stride]);
            state[base] = u[(0, 0)] * s0 + u[(0, 1)] * s1;
            state[base | stride] = u[(1, 0)] * s0 + u[(1, 1)] * s1;
        }
    }
}

pub fn dense_distribution(state: &[C64]) -> HashMap<Vec<bool>, f64> {
    let n = state.len().trailing_zeros() as usize;
    state
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 1e-15)
        .map(|(i, a)| (index_to_bits(i, n), a.norm_sqr()))
        .collect()
}

fn pick<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Teleportation in the physical order on a dense state of the register S:
/// each S_j is paired with P_j, (P_j, V_j) start in |Φ+⟩. V applies `u` to
/// its halves and measures first; then P measures (S_j, P_j) in the basis
/// |β_{xz}⟩ = (Z^z X^x ⊗ I)|Φ+⟩, one pair at a time. Returns (z, d = x ‖ z).
pub fn teleport_physical<R: Rng>(state: &[C64], u: &CMat, rng: &mut R) -> (Vec<bool>, Vec<bool>) {
    let w = state.len().trailing_zeros() as usize;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // V measures its half of each pair: P's half collapses to φ[p] ∝ Σ_v ⟨z|U|v⟩ Φ+[p][v].
    let mut z = Vec::with_capacity(w);
    let mut phis = Vec::with_capacity(w);
    for _ in 0..w {
        let cand: Vec<[C64; 2]> = (0..2).map(|zz| [u[(zz, 0)] * h, u[(zz, 1)] * h]).collect();
        let weights: Vec<f64> = cand.iter().map(|p| p[0].norm_sqr() + p[1].norm_sqr()).collect();
        let zz = pick(&weights, rng);
        let norm = weights[zz].sqrt();
        phis.push([cand[zz][0] / norm, cand[zz][1] / norm]);
        z.push(zz == 1);
    }
    let mut dx = vec![false; w];
    let mut dz = vec![false; w];
    let mut cur: Vec<C64> = state.to_vec();
    for j in 0..w {
        let half = cur.len() / 2;
        let phi = phis[j];
        let mut options = Vec::with_capacity(4);
        for x in 0..2usize {
            for zb in 0..2usize {
                // β[s][p] = (-1)^{zb·s} δ_{s, p⊕x}/√2; w[s] = Σ_p conj(β[s][p]) φ[p].
                let cov: Vec<C64> = (0..2)
                    .map(|s| {
                        let sign = if zb * s == 1 { -1.0 } else { 1.0 };
                        phi[s ^ x] * (sign * h)
                    })
                    .collect();
                let next: Vec<C64> = (0..half).map(|r| cov[0] * cur[r] + cov[1] * cur[half + r]).collect();
                let weight: f64 = next.iter().map(|a| a.norm_sqr()).sum();
                options.push((x, zb, next, weight));
            }
        }
        let weights: Vec<f64> = options.iter().map(|o| o.3).collect();
        let k = pick(&weights, rng);
        let (x, zb, next, weight) = options.swap_remove(k);
        dx[j] = x == 1;
        dz[j] = zb == 1;
        let norm = weight.sqrt();
        cur = next.into_iter().map(|a| a / norm).collect();
    }
    (z, [dx, dz].concat())
}

/// (logical class of the code part, all traps consistent) for one block
/// measured under physical Clifford `c_phys`, read with key ⊕ d.
pub fn classify(key: &EncodingKey, code: &SteaneCode, c_phys: &CliffordOp, z: &[bool], d: &[bool]) -> (Option<bool>, bool) {
    let key_d = key.with_pad_xor(d).unwrap();
    let push = pad_pushthrough(std::slice::from_ref(&key_d.a), std::slice::from_ref(&key_d.b), None, c_phys).unwrap();
    let u: Vec<bool> = z.iter().zip(&push.e[0]).map(|(a, b)| a ^ b).collect();
    let (p, q) = unpermute(&u, &key.perm);
    let traps_ok = (0..key.block).all(|j| trap_amplitude(c_phys, &[key.traps[0][j]], &[q[j]]).norm() > 1e-9);
    (code.contains(&p), traps_ok)
}

pub fn random_circuit<R: Rng>(width: usize, size: usize, rng: &mut R) -> BoolCircuit {
    let mut gates = Vec::new();
    for k in 0..size {
        let avail = width + k;
        gates.push(match rng.gen_range(0..4) {
            0 => BoolGate::Xor(rng.gen_range(0..avail), rng.gen_range(0..avail)),
            1 => BoolGate::And(rng.gen_range(0..avail), rng.gen_range(0..avail)),
            2 => BoolGate::Not(rng.gen_range(0..avail)),
            _ => BoolGate::Const(rng.gen()),
        });
    }
    let outputs = (0..rng.gen_range(1..12)).map(|_| rng.gen_range(0..width + size)).collect();
    BoolCircuit { width, gates, outputs }
}

/// Wire-by-wire evaluation, independent of BoolCircuit::eval_bits.
pub fn direct_eval(circuit: &BoolCircuit, x: &[bool]) -> Vec<bool> {
    let mut w = x.to_vec();
    for g in &circuit.gates {
        let v = match *g {
            BoolGate::Xor(a, b) => w[a] != w[b],
            BoolGate::And(a, b) => w[a] && w[b],
            BoolGate::Not(a) => !w[a],
            BoolGate::Const(v) => v,
        };
        w.push(v);
    }
    circuit.outputs.iter().map(|&o| w[o]).collect()
}

/// Wilson score interval at 95%.
pub fn wilson(successes: usize, n: usize) -> (f64, f64) {
    let z = 1.959964;
    let n = n as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    (centre - half, centre + half)
}

/// Key paths and value kinds of a JSON document, with string lengths.
pub fn schema(v: &serde_json::Value) -> Vec<String> {
    fn walk(v: &serde_json::Value, path: String, out: &mut Vec<String>) {
        match v {
            serde_json::Value::Object(m) => m.iter().for_each(|(k, v)| walk(v, format!("{path}.{k}"), out)),
            serde_json::Value::Array(a) => {
                out.push(format!("{path}[{}]", a.len()));
                a.iter().for_each(|v| walk(v, format!("{path}[]"), out));
            }
            serde_json::Value::String(s) => out.push(format!("{path}:str{}", s.len())),
            serde_json::Value::Number(_) => out.push(format!("{path}:num")),
            serde_json::Value::Bool(_) => out.push(format!("{path}:bool")),
            serde_json::Value::Null => out.push(format!("{path}:null")),
        }
    }
    let mut out = Vec::new();
    walk(v, String::new(), &mut out);
    out.sort();
    out.dedup();
    out
}

/// |1⟩⟨1|_{t-1} ⊗ ½[I − |1⟩⟨0|_t ⊗ U − |0⟩⟨1|_t ⊗ U†] ⊗ |0⟩⟨0|_{t+1}, built densely.
pub fn kitaev_prop(u: &qnizk::hamiltonian::VerifierCircuit, t: usize) -> CMat {
    use qnizk::quantum::{embed, gates};
    let regs = u.registers();
    let q = regs.total();
    let dim = 1 << q;
    let g = &u.gates[t - 1];
    let cur = regs.clock(t);
    let raise = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let fwd = embed(&raise.kronecker(&g.kind.matrix()), &[cur, g.targets[0], g.targets[1]], q).unwrap();
    let mut core = (CMat::identity(dim, dim) - &fwd - fwd.adjoint()) * c(0.5, 0.0);
    if t > 1 {
        core = embed(&gates::proj1(), &[regs.clock(t - 1)], q).unwrap() * core;
    }
    if t < regs.t_clock {
        core = embed(&gates::proj0(), &[regs.clock(t + 1)], q).unwrap() * core;
    }
    core
}
