//! Dense small-register linear algebra plus Pauli/Clifford bookkeeping.
//!
//! Qubit 0 is the most significant bit of a basis index everywhere.

mod clifford;
mod pauli;
mod state;

pub use clifford::{pauli_conjugate, CliffordGate, CliffordOp};
pub use pauli::PauliString;
pub use state::{apply_unitary, measure_computational, reduced_density, DensityMatrix, Statevector};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Absolute tolerance for linear-algebra comparisons.
pub const TOL: f64 = 1e-9;
/// Floor for PSD eigenvalue checks.
pub const PSD_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("duplicate target qubit {0}")]
    DuplicateTarget(usize),
    #[error("target qubit {qubit} out of range for {num_qubits} qubits")]
    TargetOutOfRange { qubit: usize, num_qubits: usize },
    #[error("empty keep set")]
    EmptyKeep,
    #[error("operator is not Clifford")]
    NotClifford,
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// i^k.
pub fn i_pow(k: u8) -> C64 {
    match k % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn approx_eq(a: &CMat, b: &CMat) -> bool {
    max_abs_diff(a, b) <= TOL
}

pub fn is_unitary(u: &CMat) -> bool {
    u.is_square() && approx_eq(&(u.adjoint() * u), &CMat::identity(u.nrows(), u.ncols()))
}

/// Sorted real eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Anything that can be applied as a dense unitary.
pub trait Operator {
    fn operator(&self) -> &CMat;
}

impl Operator for CMat {
    fn operator(&self) -> &CMat {
        self
    }
}

impl<T: Operator + ?Sized> Operator for &T {
    fn operator(&self) -> &CMat {
        (**self).operator()
    }
}

pub(crate) fn log2_dim(len: usize) -> Result<usize, QuantumError> {
    if len == 0 || !len.is_power_of_two() {
        return Err(QuantumError::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

pub(crate) fn check_targets(targets: &[usize], num_qubits: usize) -> Result<(), QuantumError> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= num_qubits {
            return Err(QuantumError::TargetOutOfRange { qubit: t, num_qubits });
        }
        if targets[..i].contains(&t) {
            return Err(QuantumError::DuplicateTarget(t));
        }
    }
    Ok(())
}

/// Bit masks (in basis-index space) for each listed qubit.
pub(crate) fn qubit_masks(targets: &[usize], num_qubits: usize) -> Vec<usize> {
    targets.iter().map(|&q| 1usize << (num_qubits - 1 - q)).collect()
}

/// Scatter the bits of `sub` (big-endian over `masks`) into a full index.
pub(crate) fn scatter(sub: usize, masks: &[usize]) -> usize {
    let k = masks.len();
    let mut idx = 0;
    for (j, m) in masks.iter().enumerate() {
        if sub >> (k - 1 - j) & 1 == 1 {
            idx |= m;
        }
    }
    idx
}

/// Gather the bits of `idx` selected by `masks` into a big-endian sub-index.
pub(crate) fn gather(idx: usize, masks: &[usize]) -> usize {
    masks.iter().fold(0, |acc, m| (acc << 1) | usize::from(idx & m != 0))
}

/// Embed a k-qubit operator acting on `targets` into an n-qubit dense matrix.
pub fn embed(op: &CMat, targets: &[usize], num_qubits: usize) -> Result<CMat, QuantumError> {
    check_targets(targets, num_qubits)?;
    let k = targets.len();
    if op.nrows() != 1 << k || op.ncols() != 1 << k {
        return Err(QuantumError::DimensionMismatch { expected: 1 << k, got: op.nrows() });
    }
    let dim = 1usize << num_qubits;
    let masks = qubit_masks(targets, num_qubits);
    let tmask: usize = masks.iter().sum();
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let rest = col & !tmask;
        let cs = gather(col, &masks);
        for rs in 0..(1 << k) {
            let v = op[(rs, cs)];
            if v != C64::new(0.0, 0.0) {
                out[(rest | scatter(rs, &masks), col)] = v;
            }
        }
    }
    Ok(out)
}

/// Computational basis bits of `index` on `n` qubits.
pub fn index_to_bits(index: usize, n: usize) -> Vec<bool> {
    (0..n).map(|q| index >> (n - 1 - q) & 1 == 1).collect()
}

pub fn bits_to_index(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}

/// Standard single- and two-qubit matrices.
pub mod gates {
    use super::{c, CMat};

    pub fn identity(n: usize) -> CMat {
        CMat::identity(1 << n, 1 << n)
    }

    pub fn h() -> CMat {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMat::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
    }

    pub fn x() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn y() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn z() -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]))
    }

    pub fn s() -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]))
    }

    pub fn sdg() -> CMat {
        s().adjoint()
    }

    pub fn cnot() -> CMat {
        let mut m = CMat::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(1.0, 0.0);
        m[(2, 3)] = c(1.0, 0.0);
        m[(3, 2)] = c(1.0, 0.0);
        m
    }

    pub fn cz() -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(-1.0, 0.0),
        ]))
    }

    /// Controlled phase Λ(P) with P = diag(1, i).
    pub fn cp() -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 1.0),
        ]))
    }

    pub fn hh() -> CMat {
        h().kronecker(&h())
    }

    pub fn proj0() -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]))
    }

    pub fn proj1() -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]))
    }
}
