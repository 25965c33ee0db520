use serde::{Deserialize, Serialize};

use super::{embed, gates, is_unitary, CMat, Operator, PauliString, QuantumError};

/// A generator from the Clifford group, with qubit indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
}

impl CliffordGate {
    fn parts(&self) -> (CMat, Vec<usize>) {
        match *self {
            Self::H(q) => (gates::h(), vec![q]),
            Self::S(q) => (gates::s(), vec![q]),
            Self::Sdg(q) => (gates::sdg(), vec![q]),
            Self::X(q) => (gates::x(), vec![q]),
            Self::Y(q) => (gates::y(), vec![q]),
            Self::Z(q) => (gates::z(), vec![q]),
            Self::Cnot(a, b) => (gates::cnot(), vec![a, b]),
            Self::Cz(a, b) => (gates::cz(), vec![a, b]),
        }
    }
}

/// Exact unitary plus the images C X_q C† and C Z_q C† of every generator.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordOp {
    num_qubits: usize,
    matrix: CMat,
    x_images: Vec<PauliString>,
    z_images: Vec<PauliString>,
}

impl CliffordOp {
    pub fn from_matrix(matrix: CMat) -> Result<Self, QuantumError> {
        let num_qubits = super::log2_dim(matrix.nrows())?;
        if !is_unitary(&matrix) {
            return Err(QuantumError::NotClifford);
        }
        let adj = matrix.adjoint();
        let mut x_images = Vec::with_capacity(num_qubits);
        let mut z_images = Vec::with_capacity(num_qubits);
        for q in 0..num_qubits {
            for (img, xb, zb) in [(&mut x_images, true, false), (&mut z_images, false, true)] {
                let p = PauliString::single(num_qubits, q, xb, zb).matrix();
                let conj = &matrix * p * &adj;
                img.push(PauliString::decompose(&conj).ok_or(QuantumError::NotClifford)?);
            }
        }
        Ok(Self { num_qubits, matrix, x_images, z_images })
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self::from_matrix(gates::identity(num_qubits)).expect("identity is Clifford")
    }

    /// Gates applied left to right (first gate acts first).
    pub fn from_gates(num_qubits: usize, word: &[CliffordGate]) -> Result<Self, QuantumError> {
        let mut m = gates::identity(num_qubits);
        for g in word {
            let (u, t) = g.parts();
            m = embed(&u, &t, num_qubits)? * m;
        }
        Self::from_matrix(m)
    }

    pub fn h() -> Self {
        Self::from_matrix(gates::h()).unwrap()
    }

    pub fn s() -> Self {
        Self::from_matrix(gates::s()).unwrap()
    }

    pub fn cnot() -> Self {
        Self::from_matrix(gates::cnot()).unwrap()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix(self.matrix.adjoint()).expect("adjoint of a Clifford is Clifford")
    }

    /// Entry-wise complex conjugate.
    pub fn conj(&self) -> Self {
        Self::from_matrix(self.matrix.map(|v| v.conj())).expect("conjugate of a Clifford is Clifford")
    }

    /// self · other (other acts first).
    pub fn compose(&self, other: &CliffordOp) -> Self {
        Self::from_matrix(&self.matrix * &other.matrix).expect("product of Cliffords is Clifford")
    }

    pub fn tensor(&self, other: &CliffordOp) -> Self {
        Self::from_matrix(self.matrix.kronecker(&other.matrix)).expect("tensor of Cliffords is Clifford")
    }

    pub fn is_identity(&self) -> bool {
        super::approx_eq(&self.matrix, &gates::identity(self.num_qubits))
    }

    /// C P C†, from the generator images.
    pub fn conjugate(&self, p: &PauliString) -> PauliString {
        assert_eq!(p.num_qubits(), self.num_qubits, "pauli width mismatch");
        let mut out = PauliString::identity(self.num_qubits);
        out.phase = p.phase;
        for q in 0..self.num_qubits {
            if p.x[q] {
                out = out.mul(&self.x_images[q]);
            }
            if p.z[q] {
                out = out.mul(&self.z_images[q]);
            }
        }
        out
    }
}

impl Operator for CliffordOp {
    fn operator(&self) -> &CMat {
        &self.matrix
    }
}

/// P' with C·P = P'·C.
pub fn pauli_conjugate(c: &CliffordOp, p: &PauliString) -> Result<PauliString, QuantumError> {
    if c.num_qubits() != p.num_qubits() {
        return Err(QuantumError::DimensionMismatch { expected: c.num_qubits(), got: p.num_qubits() });
    }
    Ok(c.conjugate(p))
}
