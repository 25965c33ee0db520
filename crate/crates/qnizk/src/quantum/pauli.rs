use serde::{Deserialize, Serialize};

use super::{c, gates, i_pow, CMat, QuantumError, C64, TOL};

/// i^phase · ⊗_q X^{x_q} Z^{z_q}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
    pub phase: u8,
}

impl PauliString {
    pub fn new(x: Vec<bool>, z: Vec<bool>, phase: u8) -> Result<Self, QuantumError> {
        if x.len() != z.len() {
            return Err(QuantumError::DimensionMismatch { expected: x.len(), got: z.len() });
        }
        Ok(Self { x, z, phase: phase % 4 })
    }

    pub fn identity(n: usize) -> Self {
        Self { x: vec![false; n], z: vec![false; n], phase: 0 }
    }

    /// X^x Z^z on a single qubit of an n-qubit register.
    pub fn single(n: usize, qubit: usize, x: bool, z: bool) -> Self {
        let mut p = Self::identity(n);
        p.x[qubit] = x;
        p.z[qubit] = z;
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).filter(|(a, b)| **a || **b).count()
    }

    pub fn phase_factor(&self) -> C64 {
        i_pow(self.phase)
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.weight() == 0
    }

    /// self · other, phases tracked exactly.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        assert_eq!(self.num_qubits(), other.num_qubits(), "pauli width mismatch");
        // X^a Z^b X^c Z^d = (-1)^{b·c} X^{a+c} Z^{b+d}
        let flips = self.z.iter().zip(&other.x).filter(|(b, c)| **b && **c).count() as u8;
        PauliString {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
            phase: (self.phase + other.phase + 2 * (flips % 2)) % 4,
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let s = (0..self.num_qubits())
            .filter(|&q| (self.x[q] && other.z[q]) ^ (self.z[q] && other.x[q]))
            .count();
        s % 2 == 0
    }

    pub fn tensor(&self, other: &PauliString) -> PauliString {
        PauliString {
            x: self.x.iter().chain(&other.x).copied().collect(),
            z: self.z.iter().chain(&other.z).copied().collect(),
            phase: (self.phase + other.phase) % 4,
        }
    }

    pub fn matrix(&self) -> CMat {
        let mut m = CMat::from_element(1, 1, self.phase_factor());
        for q in 0..self.num_qubits() {
            let mut local = gates::identity(1);
            if self.x[q] {
                local = gates::x();
            }
            if self.z[q] {
                local = &local * gates::z();
            }
            m = m.kronecker(&local);
        }
        m
    }

    /// Write `m` as i^k X^x Z^z if it is one, within tolerance.
    pub fn decompose(m: &CMat) -> Option<PauliString> {
        let n = super::log2_dim(m.nrows()).ok()?;
        if !m.is_square() {
            return None;
        }
        let dim = m.nrows();
        // Column 0 has its single nonzero at row x.
        let x_idx = (0..dim).find(|&r| m[(r, 0)].norm() > 0.5)?;
        let alpha = m[(x_idx, 0)];
        let phase = (0..4u8).find(|&k| (i_pow(k) - alpha).norm() < 1e-6)?;
        let x = super::index_to_bits(x_idx, n);
        let mut z = vec![false; n];
        for (q, zq) in z.iter_mut().enumerate() {
            let e = 1usize << (n - 1 - q);
            *zq = (m[(x_idx ^ e, e)] / alpha - c(-1.0, 0.0)).norm() < 1e-6;
        }
        let p = PauliString { x, z, phase };
        if super::max_abs_diff(&p.matrix(), m) <= TOL * 10.0 {
            Some(p)
        } else {
            None
        }
    }
}
