//! Ideal decoding channel of the level-1 Steane code on dense 7-qubit states.

use super::SteaneCode;
use crate::quantum::{c, embed, gates, CMat, DensityMatrix, PauliString, Statevector};

const CHECKS: [u8; 3] = [0b0001111, 0b0110011, 0b1010101];

fn pauli_on(mask: u8, x: bool) -> CMat {
    let xs: Vec<bool> = (0..7).map(|j| mask >> (6 - j) & 1 == 1).collect();
    let p = if x {
        PauliString { x: xs, z: vec![false; 7], phase: 0 }
    } else {
        PauliString { x: vec![false; 7], z: xs, phase: 0 }
    };
    p.matrix()
}

/// Encoding isometry V: C^2 → (C^2)^{⊗7}.
pub fn encoding_isometry() -> CMat {
    let code = SteaneCode::new(1).expect("level 1");
    let mut v = CMat::zeros(128, 2);
    let amp = c(1.0 / 8f64.sqrt(), 0.0);
    for bit in [false, true] {
        for w in code.codewords(bit).unwrap() {
            v[(crate::quantum::bits_to_index(&w), usize::from(bit))] = amp;
        }
    }
    v
}

pub fn steane_encode_dense(psi: &Statevector) -> Statevector {
    assert_eq!(psi.num_qubits(), 1);
    let v = encoding_isometry() * nalgebra::DVector::from_column_slice(psi.amplitudes());
    Statevector::new(v.iter().copied().collect()).expect("isometry preserves norm")
}

fn syndrome_projector(checks: &[CMat; 3], s: u8) -> CMat {
    let id = CMat::identity(128, 128);
    let mut p = id.clone();
    for (i, g) in checks.iter().enumerate() {
        let sign = if s >> (2 - i) & 1 == 1 { -1.0 } else { 1.0 };
        p = p * (&id + g * c(sign, 0.0)) * c(0.5, 0.0);
    }
    p
}

/// Σ_s V† C_s Π_s ρ Π_s C_s† V: measure both syndromes, correct a single
/// error, invert the encoding.
pub fn phi_decode_dense(rho: &DensityMatrix) -> DensityMatrix {
    assert_eq!(rho.num_qubits(), 7);
    let zc = CHECKS.map(|m| pauli_on(m, false));
    let xc = CHECKS.map(|m| pauli_on(m, true));
    let v = encoding_isometry();
    let mut out = CMat::zeros(2, 2);
    for sz in 0..8u8 {
        let pz = syndrome_projector(&zc, sz);
        // Z checks see X errors at position sz-1.
        let cx = if sz == 0 { CMat::identity(128, 128) } else { embed(&gates::x(), &[sz as usize - 1], 7).unwrap() };
        for sx in 0..8u8 {
            let px = syndrome_projector(&xc, sx);
            let cz = if sx == 0 { CMat::identity(128, 128) } else { embed(&gates::z(), &[sx as usize - 1], 7).unwrap() };
            let k = v.adjoint() * &cz * &cx * &px * &pz;
            out += &k * rho.matrix() * k.adjoint();
        }
    }
    DensityMatrix::new(out).expect("decoder output is a state")
}
