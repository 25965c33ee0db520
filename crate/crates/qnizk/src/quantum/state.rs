use rand::Rng;

use super::{
    check_targets, gather, hermitian_eigenvalues, index_to_bits, log2_dim, qubit_masks, scatter,
    CMat, Operator, QuantumError, C64, PSD_TOL, TOL,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    pub fn new(amps: Vec<C64>) -> Result<Self, QuantumError> {
        let num_qubits = log2_dim(amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(Self { num_qubits, amps })
    }

    /// Normalizes the input; fails only on zero vectors or bad lengths.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self, QuantumError> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::new(amps)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = C64::new(1.0, 0.0);
        Self { num_qubits, amps }
    }

    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        Self::basis(bits.len(), super::bits_to_index(bits))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn tensor(&self, other: &Statevector) -> Statevector {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Statevector { num_qubits: self.num_qubits + other.num_qubits, amps }
    }

    pub fn inner(&self, other: &Statevector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, other: &Statevector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// In-place U on `targets`.
    pub fn apply(&mut self, u: &CMat, targets: &[usize]) -> Result<(), QuantumError> {
        apply_in_place(&mut self.amps, self.num_qubits, u, targets)
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        DensityMatrix { num_qubits: self.num_qubits, mat: &v * v.adjoint() }
    }
}

fn apply_in_place(amps: &mut [C64], n: usize, u: &CMat, targets: &[usize]) -> Result<(), QuantumError> {
    check_targets(targets, n)?;
    let k = targets.len();
    let d = 1usize << k;
    if u.nrows() != d || u.ncols() != d {
        return Err(QuantumError::DimensionMismatch { expected: d, got: u.nrows() });
    }
    let masks = qubit_masks(targets, n);
    let tmask: usize = masks.iter().sum();
    let offsets: Vec<usize> = (0..d).map(|s| scatter(s, &masks)).collect();
    let mut buf = vec![C64::new(0.0, 0.0); d];
    for base in 0..amps.len() {
        if base & tmask != 0 {
            continue;
        }
        for (s, o) in offsets.iter().enumerate() {
            buf[s] = amps[base | o];
        }
        for (r, o) in offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (s, b) in buf.iter().enumerate() {
                acc += u[(r, s)] * b;
            }
            amps[base | o] = acc;
        }
    }
    Ok(())
}

/// U|ψ⟩ with U acting on `targets`.
pub fn apply_unitary(
    state: &Statevector,
    op: impl Operator,
    targets: &[usize],
) -> Result<Statevector, QuantumError> {
    let mut out = state.clone();
    out.apply(op.operator(), targets)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    mat: CMat,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(mat: CMat) -> Result<Self, QuantumError> {
        if !mat.is_square() {
            return Err(QuantumError::InvalidDensity("not square".into()));
        }
        let num_qubits = log2_dim(mat.nrows())?;
        let rho = Self { num_qubits, mat };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(mat: CMat) -> Self {
        let num_qubits = mat.nrows().trailing_zeros() as usize;
        Self { num_qubits, mat }
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        let herm = super::max_abs_diff(&self.mat, &self.mat.adjoint());
        if herm > TOL {
            return Err(QuantumError::InvalidDensity(format!("not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TOL {
            return Err(QuantumError::InvalidDensity(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(QuantumError::InvalidDensity(format!("eigenvalue {min}")));
        }
        Ok(())
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let d = 1 << num_qubits;
        Self { num_qubits, mat: CMat::identity(d, d) / C64::new(d as f64, 0.0) }
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        Statevector::basis(num_qubits, index).to_density()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.mat)[0]
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            num_qubits: self.num_qubits + other.num_qubits,
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// Mixture Σ w_i ρ_i; weights are not renormalized.
    pub fn mix(parts: &[(f64, DensityMatrix)]) -> Result<DensityMatrix, QuantumError> {
        let first = parts.first().ok_or(QuantumError::EmptyKeep)?;
        let d = first.1.mat.nrows();
        let mut mat = CMat::zeros(d, d);
        for (w, rho) in parts {
            if rho.mat.nrows() != d {
                return Err(QuantumError::DimensionMismatch { expected: d, got: rho.mat.nrows() });
            }
            mat += &rho.mat * C64::new(*w, 0.0);
        }
        Ok(DensityMatrix { num_qubits: first.1.num_qubits, mat })
    }

    /// ρ → UρU† with U on `targets`.
    pub fn apply(&mut self, u: &CMat, targets: &[usize]) -> Result<(), QuantumError> {
        let n = self.num_qubits;
        let d = self.mat.nrows();
        for col in 0..d {
            let mut v: Vec<C64> = self.mat.column(col).iter().copied().collect();
            apply_in_place(&mut v, n, u, targets)?;
            self.mat.set_column(col, &nalgebra::DVector::from_vec(v));
        }
        self.mat = self.mat.adjoint();
        for col in 0..d {
            let mut v: Vec<C64> = self.mat.column(col).iter().copied().collect();
            apply_in_place(&mut v, n, u, targets)?;
            self.mat.set_column(col, &nalgebra::DVector::from_vec(v));
        }
        self.mat = self.mat.adjoint();
        Ok(())
    }

    /// Partial trace keeping `keep` in the listed order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix, QuantumError> {
        if keep.is_empty() {
            return Err(QuantumError::EmptyKeep);
        }
        let n = self.num_qubits;
        check_targets(keep, n)?;
        let kmasks = qubit_masks(keep, n);
        let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let rmasks = qubit_masks(&rest, n);
        let dk = 1usize << keep.len();
        let koff: Vec<usize> = (0..dk).map(|s| scatter(s, &kmasks)).collect();
        let mut out = CMat::zeros(dk, dk);
        for r in 0..(1usize << rest.len()) {
            let base = scatter(r, &rmasks);
            for i in 0..dk {
                for j in 0..dk {
                    out[(i, j)] += self.mat[(base | koff[i], base | koff[j])];
                }
            }
        }
        Ok(DensityMatrix { num_qubits: keep.len(), mat: out })
    }

    /// Re(Tr(O ρ)) with O acting on `targets`.
    pub fn expectation(&self, op: &CMat, targets: &[usize]) -> Result<f64, QuantumError> {
        let reduced = self.partial_trace(targets)?;
        if op.nrows() != reduced.mat.nrows() {
            return Err(QuantumError::DimensionMismatch { expected: reduced.mat.nrows(), got: op.nrows() });
        }
        Ok((op * &reduced.mat).trace().re)
    }

    pub fn fidelity_pure(&self, psi: &Statevector) -> f64 {
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        (v.adjoint() * &self.mat * &v)[(0, 0)].re
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.mat - &other.mat;
        hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum::<f64>() / 2.0
    }

    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)].re.max(0.0)).collect()
    }
}

/// Partial trace of |ψ⟩⟨ψ| onto `keep`.
pub fn reduced_density(state: &Statevector, keep: &[usize]) -> Result<DensityMatrix, QuantumError> {
    if keep.is_empty() {
        return Err(QuantumError::EmptyKeep);
    }
    let n = state.num_qubits;
    check_targets(keep, n)?;
    let kmasks = qubit_masks(keep, n);
    let dk = 1usize << keep.len();
    let mut out = CMat::zeros(dk, dk);
    let kmask: usize = kmasks.iter().sum();
    // Group amplitudes by the complement pattern.
    let mut groups: std::collections::HashMap<usize, Vec<(usize, C64)>> = Default::default();
    for (idx, a) in state.amps.iter().enumerate() {
        if a.norm_sqr() > 0.0 {
            groups.entry(idx & !kmask).or_default().push((gather(idx, &kmasks), *a));
        }
    }
    for entries in groups.values() {
        for (i, a) in entries {
            for (j, b) in entries {
                out[(*i, *j)] += a * b.conj();
            }
        }
    }
    Ok(DensityMatrix { num_qubits: keep.len(), mat: out })
}

/// Samples all qubits in the computational basis; returns the bits and their probability.
pub fn measure_computational<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> (Vec<bool>, f64) {
    let probs = rho.diagonal_probabilities();
    let total: f64 = probs.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p <= 0.0 {
            continue;
        }
        last = i;
        if u < *p {
            return (index_to_bits(i, rho.num_qubits), *p);
        }
        u -= p;
    }
    (index_to_bits(last, rho.num_qubits), probs[last])
}
