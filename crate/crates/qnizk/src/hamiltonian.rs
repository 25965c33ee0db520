//! Circuit-to-Hamiltonian reduction with a unary clock.
//!
//! Register layout (logical qubits): instance, witness, ancilla, then T clock
//! qubits. Time t is the clock pattern 1^t 0^{T-t}.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{
    c, embed, gates, hermitian_eigenvalues, index_to_bits, CMat, CliffordGate, CliffordOp, DensityMatrix,
    QuantumError, Statevector, C64,
};

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("challenge index {r} out of range 1..={max}")]
    ChallengeOutOfRange { r: usize, max: usize },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    /// Controlled phase diag(1, 1, 1, i).
    CP,
    /// H ⊗ H.
    HH,
}

impl GateKind {
    pub fn matrix(self) -> CMat {
        match self {
            GateKind::CP => gates::cp(),
            GateKind::HH => gates::hh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierCircuit {
    pub n_instance: usize,
    pub c_witness: usize,
    pub m_ancilla: usize,
    pub gates: Vec<Gate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGate {
    kind: String,
    targets: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    n_instance: usize,
    c_witness: usize,
    m_ancilla: usize,
    gates: Vec<RawGate>,
}

impl VerifierCircuit {
    pub fn new(n_instance: usize, c_witness: usize, m_ancilla: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let u = Self { n_instance, c_witness, m_ancilla, gates };
        u.validate()?;
        Ok(u)
    }

    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let raw: RawCircuit = serde_json::from_str(text).map_err(|e| CircuitError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut gates = Vec::with_capacity(raw.gates.len());
        for (i, g) in raw.gates.iter().enumerate() {
            let kind = match g.kind.as_str() {
                "CP" => GateKind::CP,
                "HH" => GateKind::HH,
                other => {
                    return Err(CircuitError::Invalid {
                        field: format!("gates[{i}].kind"),
                        message: format!("unknown gate kind {other:?} (expected \"CP\" or \"HH\")"),
                    })
                }
            };
            let targets: [usize; 2] = g.targets.clone().try_into().map_err(|_| CircuitError::Invalid {
                field: format!("gates[{i}].targets"),
                message: format!("expected 2 targets, got {}", g.targets.len()),
            })?;
            gates.push(Gate { kind, targets });
        }
        Self::new(raw.n_instance, raw.c_witness, raw.m_ancilla, gates)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    fn validate(&self) -> Result<(), CircuitError> {
        if self.gates.is_empty() {
            return Err(CircuitError::Invalid { field: "gates".into(), message: "circuit has no gates (T = 0)".into() });
        }
        if self.n_instance + self.c_witness == 0 {
            return Err(CircuitError::Invalid {
                field: "c_witness".into(),
                message: "no input qubits, so no output qubit".into(),
            });
        }
        let width = self.data_width();
        for (i, g) in self.gates.iter().enumerate() {
            let [a, b] = g.targets;
            if a >= width || b >= width {
                return Err(CircuitError::Invalid {
                    field: format!("gates[{i}].targets"),
                    message: format!("target out of range for {width} data qubits"),
                });
            }
            if a == b {
                return Err(CircuitError::Invalid {
                    field: format!("gates[{i}].targets"),
                    message: "targets must be distinct".into(),
                });
            }
        }
        Ok(())
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn input_width(&self) -> usize {
        self.n_instance + self.c_witness
    }

    pub fn data_width(&self) -> usize {
        self.n_instance + self.c_witness + self.m_ancilla
    }

    /// Always the first input qubit.
    pub fn output_qubit(&self) -> usize {
        0
    }

    pub fn registers(&self) -> RegisterMap {
        RegisterMap {
            n_instance: self.n_instance,
            c_witness: self.c_witness,
            m_ancilla: self.m_ancilla,
            t_clock: self.num_gates(),
        }
    }

    /// U_t ··· U_1 applied to a data-register state.
    pub fn run_prefix(&self, state: &Statevector, t: usize) -> Result<Statevector, QuantumError> {
        let mut s = state.clone();
        for g in &self.gates[..t] {
            s.apply(&g.kind.matrix(), &g.targets)?;
        }
        Ok(s)
    }

    /// Acceptance probability on an input-register state (instance ⊗ witness).
    pub fn acceptance_probability(&self, input: &DensityMatrix) -> Result<f64, HamiltonianError> {
        if input.num_qubits() != self.input_width() {
            return Err(HamiltonianError::SizeMismatch(format!(
                "input has {} qubits, circuit expects {}",
                input.num_qubits(),
                self.input_width()
            )));
        }
        let mut rho = input.tensor(&DensityMatrix::basis(self.m_ancilla, 0));
        for g in &self.gates {
            rho.apply(&g.kind.matrix(), &g.targets)?;
        }
        Ok(rho.expectation(&gates::proj1(), &[self.output_qubit()])?)
    }

    /// Largest acceptance probability over witnesses, instance fixed to `x`.
    pub fn max_acceptance(&self, x: &[bool]) -> Result<f64, HamiltonianError> {
        Ok(*hermitian_eigenvalues(&self.acceptance_operator(x)?).last().unwrap())
    }

    /// A witness attaining `max_acceptance`.
    pub fn best_witness(&self, x: &[bool]) -> Result<Statevector, HamiltonianError> {
        let eig = self.acceptance_operator(x)?.symmetric_eigen();
        let top = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        let v: Vec<C64> = eig.eigenvectors.column(top).iter().copied().collect();
        // Fix the global phase so the result is reproducible.
        let lead = *v.iter().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap();
        let ph = lead.conj() / lead.norm();
        Ok(Statevector::normalized(v.into_iter().map(|a| a * ph).collect())?)
    }

    /// ⟨x,·,0| U† Π_1 U |x,·,0⟩ on the witness register.
    pub fn acceptance_operator(&self, x: &[bool]) -> Result<CMat, HamiltonianError> {
        if x.len() != self.n_instance {
            return Err(HamiltonianError::SizeMismatch("instance width".into()));
        }
        let dw = 1usize << self.c_witness;
        let outs: Vec<Statevector> = (0..dw)
            .map(|w| {
                let bits: Vec<bool> = x
                    .iter()
                    .copied()
                    .chain(index_to_bits(w, self.c_witness))
                    .chain(std::iter::repeat_n(false, self.m_ancilla))
                    .collect();
                self.run_prefix(&Statevector::from_bits(&bits), self.num_gates())
            })
            .collect::<Result<_, _>>()?;
        let shift = self.data_width() - 1;
        let mut m = CMat::zeros(dw, dw);
        for i in 0..dw {
            for j in 0..dw {
                m[(i, j)] = outs[i]
                    .amplitudes()
                    .iter()
                    .zip(outs[j].amplitudes())
                    .enumerate()
                    .filter(|(idx, _)| idx >> shift & 1 == 1)
                    .map(|(_, (a, b))| a.conj() * b)
                    .sum();
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterMap {
    pub n_instance: usize,
    pub c_witness: usize,
    pub m_ancilla: usize,
    pub t_clock: usize,
}

impl RegisterMap {
    pub fn data_width(&self) -> usize {
        self.n_instance + self.c_witness + self.m_ancilla
    }

    pub fn total(&self) -> usize {
        self.data_width() + self.t_clock
    }

    pub fn instance(&self, i: usize) -> usize {
        assert!(i < self.n_instance);
        i
    }

    pub fn witness(&self, i: usize) -> usize {
        assert!(i < self.c_witness);
        self.n_instance + i
    }

    pub fn ancilla(&self, i: usize) -> usize {
        assert!(i < self.m_ancilla);
        self.n_instance + self.c_witness + i
    }

    /// Clock qubit t, 1-based.
    pub fn clock(&self, t: usize) -> usize {
        assert!((1..=self.t_clock).contains(&t));
        self.data_width() + t - 1
    }

    pub fn instance_qubits(&self) -> Vec<usize> {
        (0..self.n_instance).collect()
    }

    pub fn input_qubits(&self) -> Vec<usize> {
        (0..self.n_instance + self.c_witness).collect()
    }

    pub fn data_qubits(&self) -> Vec<usize> {
        (0..self.data_width()).collect()
    }

    pub fn clock_qubits(&self) -> Vec<usize> {
        (self.data_width()..self.total()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermLabel {
    In,
    Out,
    Prop,
    Clock,
}

impl fmt::Display for TermLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TermLabel::In => "in",
            TermLabel::Out => "out",
            TermLabel::Prop => "prop",
            TermLabel::Clock => "clock",
        };
        f.write_str(s)
    }
}

/// A projector C†|0^k⟩⟨0^k|C on `support`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianTerm {
    pub label: TermLabel,
    /// Gate index t (1-based) for propagation terms.
    pub step: Option<usize>,
    pub support: Vec<usize>,
    pub clifford: CliffordOp,
}

impl HamiltonianTerm {
    pub fn locality(&self) -> usize {
        self.support.len()
    }

    pub fn projector(&self) -> CMat {
        let k = self.support.len();
        let mut zero = CMat::zeros(1 << k, 1 << k);
        zero[(0, 0)] = c(1.0, 0.0);
        self.clifford.matrix().adjoint() * zero * self.clifford.matrix()
    }

    pub fn energy(&self, rho: &DensityMatrix) -> Result<f64, HamiltonianError> {
        Ok(rho.expectation(&self.projector(), &self.support)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TermCounts {
    pub input: usize,
    pub output: usize,
    pub clock: usize,
    /// Gate steps; each contributes several rank-one components.
    pub prop_steps: usize,
    pub prop_components: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliffordHamiltonian {
    pub terms: Vec<HamiltonianTerm>,
    pub registers: RegisterMap,
}

impl CliffordHamiltonian {
    pub fn num_qubits(&self) -> usize {
        self.registers.total()
    }

    /// m: number of terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn counts(&self) -> TermCounts {
        let mut out = TermCounts { total: self.terms.len(), ..Default::default() };
        let mut steps = std::collections::BTreeSet::new();
        for t in &self.terms {
            match t.label {
                TermLabel::In => out.input += 1,
                TermLabel::Out => out.output += 1,
                TermLabel::Clock => out.clock += 1,
                TermLabel::Prop => {
                    out.prop_components += 1;
                    steps.insert(t.step);
                }
            }
        }
        out.prop_steps = steps.len();
        out
    }

    /// Full 2^q × 2^q matrix.
    pub fn dense(&self) -> Result<CMat, HamiltonianError> {
        let q = self.num_qubits();
        let mut h = CMat::zeros(1 << q, 1 << q);
        for t in &self.terms {
            h += embed(&t.projector(), &t.support, q)?;
        }
        Ok(h)
    }

    /// Sum of the propagation components for gate step `t`.
    pub fn prop_group(&self, t: usize) -> Result<CMat, HamiltonianError> {
        let q = self.num_qubits();
        let mut h = CMat::zeros(1 << q, 1 << q);
        for term in self.terms.iter().filter(|x| x.label == TermLabel::Prop && x.step == Some(t)) {
            h += embed(&term.projector(), &term.support, q)?;
        }
        Ok(h)
    }

    pub fn spectrum(&self) -> Result<Vec<f64>, HamiltonianError> {
        Ok(hermitian_eigenvalues(&self.dense()?))
    }

    pub fn to_dump(&self) -> HamiltonianDump {
        HamiltonianDump {
            num_qubits: self.num_qubits(),
            registers: self.registers,
            counts: self.counts(),
            terms: self
                .terms
                .iter()
                .map(|t| TermDump {
                    label: t.label,
                    step: t.step,
                    support: t.support.clone(),
                    clifford: t
                        .clifford
                        .matrix()
                        .row_iter()
                        .map(|row| row.iter().map(|v| [v.re, v.im]).collect())
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermDump {
    pub label: TermLabel,
    pub step: Option<usize>,
    pub support: Vec<usize>,
    /// Row-major, complex entries as [re, im].
    pub clifford: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HamiltonianDump {
    pub num_qubits: usize,
    pub registers: RegisterMap,
    pub counts: TermCounts,
    pub terms: Vec<TermDump>,
}

fn computational_projector_term(label: TermLabel, support: Vec<usize>, ones: &[bool]) -> HamiltonianTerm {
    // C = X on the qubits that must read 1, so C|pattern⟩ = |0^k⟩.
    let word: Vec<CliffordGate> = ones.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| CliffordGate::X(i)).collect();
    HamiltonianTerm {
        label,
        step: None,
        clifford: CliffordOp::from_gates(support.len(), &word).expect("X word is Clifford"),
        support,
    }
}

/// Eigen-frame of a gate: U φ_j = λ_j P φ_j with Pauli P and stabilizer φ_j.
struct GateFrame {
    /// Words preparing φ_j from |00⟩ on (d1, d2).
    preps: Vec<Vec<CliffordGate>>,
    /// Controlled-P from a control qubit c onto (d1, d2), as a word on (c, d1, d2).
    controlled_p: Vec<CliffordGate>,
    p: CMat,
}

fn gate_frame(kind: GateKind) -> GateFrame {
    use CliffordGate::*;
    match kind {
        GateKind::CP => GateFrame {
            preps: vec![vec![], vec![X(1)], vec![X(0)], vec![X(0), X(1)]],
            controlled_p: vec![],
            p: gates::identity(2),
        },
        GateKind::HH => {
            // |+y⟩ = S H|0⟩, |-y⟩ = Z S H|0⟩; H|±y⟩ = e^{±iπ/4} Z|±y⟩.
            let plus = |q| vec![H(q), S(q)];
            let minus = |q| vec![H(q), S(q), Z(q)];
            GateFrame {
                preps: vec![
                    [plus(0), plus(1)].concat(),
                    [plus(0), minus(1)].concat(),
                    [minus(0), plus(1)].concat(),
                    [minus(0), minus(1)].concat(),
                ],
                controlled_p: vec![Cz(0, 1), Cz(0, 2)],
                p: gates::z().kronecker(&gates::z()),
            }
        }
    }
}

fn quarter_turn(v: C64) -> u8 {
    (0..4u8)
        .find(|&k| (crate::quantum::i_pow(k) - v).norm() < 1e-9)
        .expect("eigenvalue is a fourth root of unity")
}

/// The rank-one components of the propagation term for step `t` (1-based).
fn prop_terms(u: &VerifierCircuit, regs: &RegisterMap, t: usize) -> Vec<HamiltonianTerm> {
    let gate = &u.gates[t - 1];
    let frame = gate_frame(gate.kind);
    let umat = gate.kind.matrix();
    let big_t = regs.t_clock;
    let has_prev = t >= 2;
    let has_next = t < big_t;

    // Local layout: [prev?, cur, d1, d2, next?]
    let mut support = Vec::new();
    if has_prev {
        support.push(regs.clock(t - 1));
    }
    let cur = support.len();
    support.push(regs.clock(t));
    let d1 = support.len();
    support.extend(gate.targets);
    if has_next {
        support.push(regs.clock(t + 1));
    }
    let k = support.len();
    let remap = |g: &CliffordGate, base: usize| -> CliffordGate {
        use CliffordGate::*;
        match *g {
            H(q) => H(base + q),
            S(q) => S(base + q),
            Sdg(q) => Sdg(base + q),
            X(q) => X(base + q),
            Y(q) => Y(base + q),
            Z(q) => Z(base + q),
            Cnot(a, b) => Cnot(base + a, base + b),
            Cz(a, b) => Cz(base + a, base + b),
        }
    };

    frame
        .preps
        .iter()
        .map(|prep| {
            let phi = CliffordOp::from_gates(2, prep).expect("prep is Clifford");
            let phi_vec = phi.matrix().column(0).into_owned();
            let lambda = ((&frame.p * &phi_vec).adjoint() * (&umat * &phi_vec))[(0, 0)];
            // S^s on the clock qubit gives i^s = -λ.
            let s = quarter_turn(-lambda);
            let mut word: Vec<CliffordGate> = prep.iter().map(|g| remap(g, d1)).collect();
            word.push(CliffordGate::H(cur));
            word.extend(std::iter::repeat_n(CliffordGate::S(cur), s as usize));
            // controlled_p is written on (control=0, d1=1, d2=2).
            for g in &frame.controlled_p {
                word.push(match *g {
                    CliffordGate::Cz(0, b) => CliffordGate::Cz(cur, d1 + b - 1),
                    _ => unreachable!("controlled-P words only use CZ from the control"),
                });
            }
            if has_prev {
                word.push(CliffordGate::X(0));
            }
            let prep_op = CliffordOp::from_gates(k, &word).expect("prep word is Clifford");
            HamiltonianTerm { label: TermLabel::Prop, step: Some(t), support: support.clone(), clifford: prep_op.adjoint() }
        })
        .collect()
}

/// Reduce a verifier circuit to a sum of Clifford projectors.
pub fn reduce_circuit(u: &VerifierCircuit) -> Result<CliffordHamiltonian, CircuitError> {
    u.validate()?;
    let regs = u.registers();
    let big_t = regs.t_clock;
    let mut terms = Vec::new();
    terms.push(computational_projector_term(
        TermLabel::Out,
        vec![u.output_qubit(), regs.clock(big_t)],
        &[false, true],
    ));
    for i in 0..regs.m_ancilla {
        terms.push(computational_projector_term(TermLabel::In, vec![regs.ancilla(i), regs.clock(1)], &[true, false]));
    }
    for t in 1..big_t {
        terms.push(computational_projector_term(
            TermLabel::Clock,
            vec![regs.clock(t), regs.clock(t + 1)],
            &[false, true],
        ));
    }
    for t in 1..=big_t {
        terms.extend(prop_terms(u, &regs, t));
    }
    Ok(CliffordHamiltonian { terms, registers: regs })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryState {
    /// Over the full logical register (data then clock).
    pub state: Statevector,
    pub t: usize,
}

fn unary_clock(t: usize, big_t: usize) -> Vec<bool> {
    (0..big_t).map(|j| j < t).collect()
}

/// (T+1)^{-1/2} Σ_t U_t···U_1(|x⟩|ψ⟩|0^m⟩) ⊗ |1^t 0^{T-t}⟩.
pub fn history_state(u: &VerifierCircuit, x: &[bool], witness: &Statevector) -> Result<HistoryState, HamiltonianError> {
    if x.len() != u.n_instance {
        return Err(HamiltonianError::SizeMismatch(format!("instance has {} bits, expected {}", x.len(), u.n_instance)));
    }
    if witness.num_qubits() != u.c_witness {
        return Err(HamiltonianError::SizeMismatch(format!(
            "witness has {} qubits, expected {}",
            witness.num_qubits(),
            u.c_witness
        )));
    }
    let big_t = u.num_gates();
    let init = Statevector::from_bits(x).tensor(witness).tensor(&Statevector::zero(u.m_ancilla));
    let total = u.data_width() + big_t;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << total];
    let norm = 1.0 / ((big_t + 1) as f64).sqrt();
    let mut cur = init;
    for t in 0..=big_t {
        if t > 0 {
            let g = &u.gates[t - 1];
            cur.apply(&g.kind.matrix(), &g.targets)?;
        }
        let clock_idx = crate::quantum::bits_to_index(&unary_clock(t, big_t));
        for (i, a) in cur.amplitudes().iter().enumerate() {
            amps[(i << big_t) | clock_idx] += a * norm;
        }
    }
    Ok(HistoryState { state: Statevector::new(amps)?, t: big_t })
}

/// Tr(Hρ).
pub fn energy(h: &CliffordHamiltonian, rho: &DensityMatrix) -> Result<f64, HamiltonianError> {
    if rho.num_qubits() != h.num_qubits() {
        return Err(HamiltonianError::SizeMismatch(format!(
            "state has {} qubits, Hamiltonian {}",
            rho.num_qubits(),
            h.num_qubits()
        )));
    }
    h.terms.iter().map(|t| t.energy(rho)).sum()
}

/// Measure the clock, undo the circuit up to that time, keep the input register.
pub fn witness_map_tau(u: &VerifierCircuit, rho: &DensityMatrix) -> Result<DensityMatrix, HamiltonianError> {
    let regs = u.registers();
    if rho.num_qubits() != regs.total() {
        return Err(HamiltonianError::SizeMismatch("tau expects the full register".into()));
    }
    let big_t = regs.t_clock;
    let dd = 1usize << regs.data_width();
    let n_in = u.input_width();
    let mut out = CMat::zeros(1 << n_in, 1 << n_in);
    for clock in 0..(1usize << big_t) {
        let mut block = CMat::zeros(dd, dd);
        for i in 0..dd {
            for j in 0..dd {
                block[(i, j)] = rho.matrix()[((i << big_t) | clock, (j << big_t) | clock)];
            }
        }
        let p = block.trace().re;
        if p <= 1e-15 {
            continue;
        }
        let bits = index_to_bits(clock, big_t);
        let t = bits.iter().take_while(|&&b| b).count();
        let legal = bits[t..].iter().all(|&b| !b);
        if !legal {
            out[(0, 0)] += c(p, 0.0);
            continue;
        }
        let mut sub = DensityMatrix::from_matrix_unchecked(block);
        for g in u.gates[..t].iter().rev() {
            sub.apply(&g.kind.matrix().adjoint(), &g.targets)?;
        }
        out += sub.partial_trace(&regs.input_qubits())?.matrix();
    }
    Ok(DensityMatrix::new(out)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengeKind {
    Hamiltonian,
    InstanceCheck,
}

/// The term measured for challenge r ∈ [m+1].
#[derive(Clone, Debug, PartialEq)]
pub struct ChallengeTerm {
    /// 1-based.
    pub r: usize,
    pub kind: ChallengeKind,
    pub support: Vec<usize>,
    /// C_r; identity for the instance check.
    pub clifford: CliffordOp,
    /// The penalty projector on `support`.
    pub projector: CMat,
}

impl ChallengeTerm {
    /// The projector onto outcomes the verifier rejects. For the instance
    /// check this is |0⟩⟨0|_{clock_1} ⊗ (I − |x⟩⟨x|).
    pub fn rejection_projector(&self, x: &[bool]) -> CMat {
        match self.kind {
            ChallengeKind::Hamiltonian => self.projector.clone(),
            ChallengeKind::InstanceCheck => instance_mismatch(x),
        }
    }
}

fn instance_mismatch(x: &[bool]) -> CMat {
    let dx = 1usize << x.len();
    let mut notx = CMat::identity(dx, dx);
    let xi = crate::quantum::bits_to_index(x);
    notx[(xi, xi)] = c(0.0, 0.0);
    gates::proj0().kronecker(&notx)
}

/// Challenge r (1-based); r = m+1 is the instance check on clock_1 ∪ instance.
pub fn extended_term(h: &CliffordHamiltonian, r: usize, x: &[bool]) -> Result<ChallengeTerm, HamiltonianError> {
    let m = h.num_terms();
    if r == 0 || r > m + 1 {
        return Err(HamiltonianError::ChallengeOutOfRange { r, max: m + 1 });
    }
    if x.len() != h.registers.n_instance {
        return Err(HamiltonianError::SizeMismatch("instance width".into()));
    }
    if r <= m {
        let t = &h.terms[r - 1];
        return Ok(ChallengeTerm {
            r,
            kind: ChallengeKind::Hamiltonian,
            support: t.support.clone(),
            clifford: t.clifford.clone(),
            projector: t.projector(),
        });
    }
    let regs = &h.registers;
    let mut support = vec![regs.clock(1)];
    support.extend(regs.instance_qubits());
    let dx = 1usize << x.len();
    let projector = instance_mismatch(x) + gates::proj1().kronecker(&CMat::identity(dx, dx));
    Ok(ChallengeTerm {
        r,
        kind: ChallengeKind::InstanceCheck,
        clifford: CliffordOp::identity(support.len()),
        support,
        projector,
    })
}

/// Σ_r Pr[r]·(rejection projector of r): the challenge-averaged penalty
/// with r' uniform on [m+n].
pub fn challenge_weighted_energy(
    h: &CliffordHamiltonian,
    x: &[bool],
    rho: &DensityMatrix,
) -> Result<f64, HamiltonianError> {
    let m = h.num_terms();
    let n = h.registers.n_instance;
    let total = (m + n) as f64;
    let mut e = energy(h, rho)? / total;
    if n > 0 {
        let term = extended_term(h, m + 1, x)?;
        e += n as f64 / total * rho.expectation(&term.rejection_projector(x), &term.support)?;
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{approx_eq, reduced_density, TOL};

    fn toy() -> VerifierCircuit {
        VerifierCircuit::new(0, 1, 1, vec![Gate { kind: GateKind::CP, targets: [0, 1] }]).unwrap()
    }

    #[test]
    fn parse_errors_carry_location() {
        let bad = r#"{"n_instance":0,"c_witness":1,"m_ancilla":1,"gates":[{"kind":"CX","targets":[0,1]}]}"#;
        match VerifierCircuit::from_json(bad) {
            Err(CircuitError::Invalid { field, .. }) => assert_eq!(field, "gates[0].kind"),
            other => panic!("unexpected {other:?}"),
        }
        match VerifierCircuit::from_json("{\n\"n_instance\": }") {
            Err(CircuitError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let empty = r#"{"n_instance":0,"c_witness":1,"m_ancilla":0,"gates":[]}"#;
        assert!(matches!(VerifierCircuit::from_json(empty), Err(CircuitError::Invalid { .. })));
    }

    #[test]
    fn json_round_trip() {
        let u = toy();
        assert_eq!(VerifierCircuit::from_json(&u.to_json()).unwrap(), u);
    }

    #[test]
    fn toy_term_counts() {
        let h = reduce_circuit(&toy()).unwrap();
        let c = h.counts();
        assert_eq!((c.output, c.input, c.clock, c.prop_steps), (1, 1, 0, 1));
        assert_eq!(c.prop_components, 4);
        assert!(h.terms.iter().all(|t| t.locality() <= 5));
    }

    #[test]
    fn toy_history_state_is_plus_clock() {
        let u = toy();
        let hist = history_state(&u, &[], &Statevector::from_bits(&[true])).unwrap();
        // Layout: witness, ancilla, clock. Λ(P)|10⟩ = |10⟩.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let amps = hist.state.amplitudes();
        assert!((amps[0b100] - c(s, 0.0)).norm() < TOL);
        assert!((amps[0b101] - c(s, 0.0)).norm() < TOL);
        // The gate leaves |10⟩ fixed, so the clock is the pure |+⟩: diagonal (1/2, 1/2).
        let clock = reduced_density(&hist.state, &[2]).unwrap();
        let plus = Statevector::new(vec![c(s, 0.0), c(s, 0.0)]).unwrap().to_density();
        assert!(approx_eq(clock.matrix(), plus.matrix()));
        assert_eq!(clock.diagonal_probabilities().iter().map(|p| (p * 1e6).round()).collect::<Vec<_>>(), vec![5e5, 5e5]);
    }

    #[test]
    fn toy_history_state_has_zero_energy() {
        let u = toy();
        let h = reduce_circuit(&u).unwrap();
        let hist = history_state(&u, &[], &Statevector::from_bits(&[true])).unwrap();
        assert!(energy(&h, &hist.state.to_density()).unwrap().abs() < TOL);
    }

    #[test]
    fn energy_examples() {
        let u = toy();
        let h = reduce_circuit(&u).unwrap();
        let out = h.terms.iter().find(|t| t.label == TermLabel::Out).unwrap();
        let rho = Statevector::from_bits(&[true, false, true]).to_density();
        assert!(out.energy(&rho).unwrap().abs() < TOL);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!((out.energy(&mixed).unwrap() - 0.25).abs() < TOL);
        assert!(energy(&h, &DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn tau_recovers_witness_and_flags_garbage() {
        let u = VerifierCircuit::new(
            0,
            1,
            1,
            vec![Gate { kind: GateKind::CP, targets: [0, 1] }, Gate { kind: GateKind::CP, targets: [0, 1] }],
        )
        .unwrap();
        let hist = history_state(&u, &[], &Statevector::from_bits(&[true])).unwrap();
        let tau = witness_map_tau(&u, &hist.state.to_density()).unwrap();
        assert!(tau.trace_distance(&DensityMatrix::basis(1, 1)) < 1e-6);
        // Clock pattern 01 is not unary.
        let garbage = Statevector::from_bits(&[true, false, false, true]).to_density();
        let tau = witness_map_tau(&u, &garbage).unwrap();
        assert!(tau.trace_distance(&DensityMatrix::basis(1, 0)) < 1e-9);
    }

    #[test]
    fn extended_term_examples() {
        let u = VerifierCircuit::new(1, 1, 0, vec![Gate { kind: GateKind::CP, targets: [0, 1] }]).unwrap();
        let h = reduce_circuit(&u).unwrap();
        let m = h.num_terms();
        let x = [false];
        let term = extended_term(&h, m + 1, &x).unwrap();
        assert_eq!(term.support, vec![2, 0]);
        assert!(term.clifford.is_identity());
        // clock_1 = |1⟩: expectation 1.
        let one = Statevector::from_bits(&[true, true]).to_density();
        assert!((one.expectation(&term.projector, &[0, 1]).unwrap() - 1.0).abs() < TOL);
        // clock_1 = |0⟩, instance = x: expectation 0.
        let ok = Statevector::from_bits(&[false, false]).to_density();
        assert!(ok.expectation(&term.projector, &[0, 1]).unwrap().abs() < TOL);
        let first = extended_term(&h, 1, &x).unwrap();
        assert_eq!(first.projector, h.terms[0].projector());
        assert!(extended_term(&h, m + 2, &x).is_err());
        assert!(extended_term(&h, 0, &x).is_err());
    }

    #[test]
    fn max_acceptance_of_toy_is_one() {
        assert!((toy().max_acceptance(&[]).unwrap() - 1.0).abs() < TOL);
    }
}
