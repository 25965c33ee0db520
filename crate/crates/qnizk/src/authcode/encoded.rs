use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AuthError, EncodingKey, SteaneCode, Trap};
use crate::bits;
use crate::hamiltonian::ChallengeTerm;
use crate::quantum::{
    apply_unitary, i_pow, index_to_bits, measure_computational, reduced_density, CliffordOp, DensityMatrix,
    PauliString, Statevector, C64,
};

/// E(ψ) held symbolically: the logical state, the key it is encoded under and the code.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedStateHandle {
    pub logical: Statevector,
    pub key: EncodingKey,
    pub code: SteaneCode,
}

impl EncodedStateHandle {
    pub fn physical_width(&self) -> usize {
        self.key.physical_width()
    }

    /// The same physical state after X^{d_x} Z^{d_z} (teleportation outcomes).
    pub fn with_pad_xor(&self, d: &[bool]) -> Result<Self, AuthError> {
        Ok(Self { key: self.key.with_pad_xor(d)?, ..self.clone() })
    }
}

pub fn encode(logical: &Statevector, key: &EncodingKey, code: &SteaneCode) -> Result<EncodedStateHandle, AuthError> {
    key.validate()?;
    if key.block != code.block_len() {
        return Err(AuthError::Width { expected: code.block_len(), got: key.block });
    }
    if logical.num_qubits() != key.num_logical() {
        return Err(AuthError::Width { expected: key.num_logical(), got: logical.num_qubits() });
    }
    Ok(EncodedStateHandle { logical: logical.clone(), key: key.clone(), code: *code })
}

/// Dec under `key` followed by the ideal decoder on every block.
///
/// Residual pad differences on code positions become logical Paulis via the
/// code's frame decoder. A permutation mismatch scrambles code and trap
/// qubits and is reported as undecodable.
pub fn decode(handle: &EncodedStateHandle, key: &EncodingKey) -> Result<Statevector, AuthError> {
    key.validate()?;
    if key.physical_width() != handle.physical_width() || key.block != handle.key.block {
        return Err(AuthError::Width { expected: handle.physical_width(), got: key.physical_width() });
    }
    if key.perm != handle.key.perm {
        return Err(AuthError::Undecodable);
    }
    let n = key.block;
    let mut state = handle.logical.clone();
    for i in 0..key.num_logical() {
        let base = 2 * n * i;
        let dx: Vec<bool> = (0..n).map(|j| handle.key.a[base + key.perm[j]] ^ key.a[base + key.perm[j]]).collect();
        let dz: Vec<bool> = (0..n).map(|j| handle.key.b[base + key.perm[j]] ^ key.b[base + key.perm[j]]).collect();
        let (fx, fz) = handle.code.decode_pauli_frame(&dx, &dz);
        if fx || fz {
            let p = PauliString::single(1, 0, fx, fz);
            state.apply(&p.matrix(), &[i])?;
        }
    }
    Ok(state)
}

/// Classical Dec on measured blocks: un-pad with `key.a`, un-permute, decode p_i.
/// `blocks` lists the logical index of each 2N-bit chunk of `u`.
pub fn decode_classical(u: &[bool], key: &EncodingKey, code: &SteaneCode, blocks: &[usize]) -> Vec<Option<bool>> {
    let n = key.block;
    split_blocks(u, n, blocks.len())
        .iter()
        .zip(blocks)
        .map(|(chunk, &i)| {
            let pad = &key.a[key.block_range(i)];
            let clear = bits::xor(chunk, pad);
            let (p, _) = unpermute(&clear, &key.perm);
            code.contains(&p)
        })
        .collect()
}

pub(crate) fn split_blocks(u: &[bool], n: usize, k: usize) -> Vec<&[bool]> {
    assert_eq!(u.len(), 2 * n * k, "block width mismatch");
    u.chunks(2 * n).collect()
}

/// (p, q): code and trap bits of one physical block.
pub fn unpermute(block: &[bool], perm: &[usize]) -> (Vec<bool>, Vec<bool>) {
    let n = perm.len() / 2;
    let pre: Vec<bool> = perm.iter().map(|&p| block[p]).collect();
    (pre[..n].to_vec(), pre[n..].to_vec())
}

/// The strings (e, f) and phase α of C^{⊗2N}·X^a Z^b = α X^e Z^f·C^{⊗2N}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadPushResult {
    #[serde(with = "bits::hex_bits_vec")]
    pub e: Vec<Vec<bool>>,
    #[serde(with = "bits::hex_bits_vec")]
    pub f: Vec<Vec<bool>>,
    /// α = i^phase.
    pub phase: u8,
}

impl PadPushResult {
    pub fn alpha(&self) -> C64 {
        i_pow(self.phase)
    }
}

/// Push the pads (a ⊕ a', b ⊕ b') of the k touched blocks through C position-wise.
pub fn pad_pushthrough(
    a: &[Vec<bool>],
    b: &[Vec<bool>],
    d_prime: Option<(&[Vec<bool>], &[Vec<bool>])>,
    c: &CliffordOp,
) -> Result<PadPushResult, AuthError> {
    let k = c.num_qubits();
    if a.len() != k || b.len() != k {
        return Err(AuthError::Width { expected: k, got: a.len() });
    }
    let width = a[0].len();
    let mut x: Vec<Vec<bool>> = a.to_vec();
    let mut z: Vec<Vec<bool>> = b.to_vec();
    if let Some((ap, bp)) = d_prime {
        if ap.len() != k || bp.len() != k {
            return Err(AuthError::Width { expected: k, got: ap.len() });
        }
        for i in 0..k {
            if ap[i].len() != width || bp[i].len() != width {
                return Err(AuthError::Width { expected: width, got: ap[i].len() });
            }
            bits::xor_in_place(&mut x[i], &ap[i]);
            bits::xor_in_place(&mut z[i], &bp[i]);
        }
    }
    if x.iter().chain(&z).any(|v| v.len() != width) {
        return Err(AuthError::Width { expected: width, got: 0 });
    }
    let mut e = vec![vec![false; width]; k];
    let mut f = vec![vec![false; width]; k];
    let mut phase = 0u8;
    for j in 0..width {
        let p = PauliString {
            x: (0..k).map(|i| x[i][j]).collect(),
            z: (0..k).map(|i| z[i][j]).collect(),
            phase: 0,
        };
        let img = c.conjugate(&p);
        for i in 0..k {
            e[i][j] = img.x[i];
            f[i][j] = img.z[i];
        }
        phase = (phase + img.phase) % 4;
    }
    Ok(PadPushResult { e, f, phase })
}

/// ⟨q| C |t_1 … t_k⟩.
pub fn trap_amplitude(c: &CliffordOp, traps: &[Trap], q: &[bool]) -> C64 {
    let state = trap_output(c, traps);
    state.amplitudes()[crate::quantum::bits_to_index(q)]
}

fn trap_output(c: &CliffordOp, traps: &[Trap]) -> Statevector {
    let mut s = traps[0].state();
    for t in &traps[1..] {
        s = s.tensor(&t.state());
    }
    let targets: Vec<usize> = (0..traps.len()).collect();
    apply_unitary(&s, c, &targets).expect("trap register matches Clifford width")
}

/// Outcome of measuring the touched blocks after the transversal Clifford.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub r: usize,
    /// Logical index of each 2N-bit chunk of `z`, in order.
    pub blocks: Vec<usize>,
    #[serde(with = "bits::hex_bits")]
    pub z: Vec<bool>,
}

fn check_support(handle: &EncodedStateHandle, term: &ChallengeTerm) -> Result<(), AuthError> {
    let p = handle.key.num_logical();
    if let Some(&bad) = term.support.iter().find(|&&s| s >= p) {
        return Err(AuthError::SupportOutsideHandle { qubit: bad, logical: p });
    }
    Ok(())
}

/// Pads of the touched blocks, split into per-block vectors.
fn touched_pads(key: &EncodingKey, blocks: &[usize]) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
    let a = blocks.iter().map(|&i| key.a[key.block_range(i)].to_vec()).collect();
    let b = blocks.iter().map(|&i| key.b[key.block_range(i)].to_vec()).collect();
    (a, b)
}

/// Sample z for challenge `term`: the verifier applies the physical Clifford
/// transversally to the touched blocks and measures every qubit.
pub fn measure_encoded<R: Rng + ?Sized>(
    handle: &EncodedStateHandle,
    term: &ChallengeTerm,
    rng: &mut R,
) -> Result<MeasurementRecord, AuthError> {
    check_support(handle, term)?;
    let key = &handle.key;
    let code = &handle.code;
    let n = key.block;
    let k = term.support.len();
    let c_phys = code.physical_for(&term.clifford);

    // Logical outcome: the transversal action is C_r on the logical state.
    let mut rho = reduced_density(&handle.logical, &term.support)?;
    let local: Vec<usize> = (0..k).collect();
    rho.apply(term.clifford.matrix(), &local)?;
    let (logical_bits, _) = measure_computational(&rho, rng);

    let code_words: Vec<Vec<bool>> = logical_bits.iter().map(|&bit| code.sample_codeword(bit, rng)).collect();

    let mut trap_bits = vec![vec![false; n]; k];
    for j in 0..n {
        let traps: Vec<Trap> = term.support.iter().map(|&i| key.traps[i][j]).collect();
        let out = trap_output(&c_phys, &traps).to_density();
        let (q, _) = measure_computational(&out, rng);
        for i in 0..k {
            trap_bits[i][j] = q[i];
        }
    }

    let (a, b) = touched_pads(key, &term.support);
    let push = pad_pushthrough(&a, &b, None, &c_phys)?;
    let mut z = Vec::with_capacity(2 * n * k);
    for i in 0..k {
        let mut block = vec![false; 2 * n];
        for j in 0..n {
            block[key.perm[j]] = code_words[i][j];
            block[key.perm[n + j]] = trap_bits[i][j];
        }
        bits::xor_in_place(&mut block, &push.e[i]);
        z.extend(block);
    }
    Ok(MeasurementRecord { r: term.r, blocks: term.support.clone(), z })
}

/// Exact distribution of `measure_encoded`'s z. Enumerates codewords, so only level 1 and small k.
pub fn measurement_distribution(
    handle: &EncodedStateHandle,
    term: &ChallengeTerm,
) -> Result<HashMap<Vec<bool>, f64>, AuthError> {
    check_support(handle, term)?;
    let code = &handle.code;
    let key = &handle.key;
    let n = key.block;
    let k = term.support.len();
    let tables = [code.codewords(false), code.codewords(true)];
    let (Some(d0), Some(d1)) = (&tables[0], &tables[1]) else {
        return Err(AuthError::UnsupportedLevel(code.level()));
    };
    if k > 2 {
        return Err(AuthError::Width { expected: 2, got: k });
    }
    let c_phys = code.physical_for(&term.clifford);
    let mut rho = reduced_density(&handle.logical, &term.support)?;
    rho.apply(term.clifford.matrix(), &(0..k).collect::<Vec<_>>())?;
    let logical = rho.diagonal_probabilities();

    // Per trap position: distribution over the k outcome bits.
    let trap_dists: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let traps: Vec<Trap> = term.support.iter().map(|&i| key.traps[i][j]).collect();
            DensityMatrix::diagonal_probabilities(&trap_output(&c_phys, &traps).to_density())
        })
        .collect();
    let mut trap_joint: Vec<(Vec<Vec<bool>>, f64)> = vec![(vec![vec![]; k], 1.0)];
    for dist in &trap_dists {
        let mut next = Vec::new();
        for (prefix, p) in &trap_joint {
            for (q, pq) in dist.iter().enumerate() {
                if *pq <= 1e-15 {
                    continue;
                }
                let qb = index_to_bits(q, k);
                let mut np = prefix.clone();
                for i in 0..k {
                    np[i].push(qb[i]);
                }
                next.push((np, p * pq));
            }
        }
        trap_joint = next;
    }

    let (a, b) = touched_pads(key, &term.support);
    let push = pad_pushthrough(&a, &b, None, &c_phys)?;
    let per_word = 1.0 / d0.len() as f64;
    let mut out: HashMap<Vec<bool>, f64> = HashMap::new();
    for (lidx, pl) in logical.iter().enumerate() {
        if *pl <= 1e-15 {
            continue;
        }
        let lbits = index_to_bits(lidx, k);
        // All combinations of one codeword per block.
        let mut combos: Vec<(Vec<&Vec<bool>>, f64)> = vec![(vec![], *pl)];
        for &bit in &lbits {
            let set = if bit { d1 } else { d0 };
            combos = combos
                .into_iter()
                .flat_map(|(pre, p)| {
                    set.iter().map(move |w| {
                        let mut v = pre.clone();
                        v.push(w);
                        (v, p * per_word)
                    })
                })
                .collect();
        }
        for (words, pw) in &combos {
            for (traps, pt) in &trap_joint {
                let mut z = Vec::with_capacity(2 * n * k);
                for i in 0..k {
                    let mut block = vec![false; 2 * n];
                    for j in 0..n {
                        block[key.perm[j]] = words[i][j];
                        block[key.perm[n + j]] = traps[i][j];
                    }
                    bits::xor_in_place(&mut block, &push.e[i]);
                    z.extend(block);
                }
                *out.entry(z).or_insert(0.0) += pw * pt;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::keygen;
    use super::*;
    use crate::hamiltonian::ChallengeKind;
    use crate::quantum::{approx_eq, c, CMat, CliffordGate, TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn plus() -> Statevector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Statevector::new(vec![c(s, 0.0), c(s, 0.0)]).unwrap()
    }

    fn term(clifford: CliffordOp, support: Vec<usize>) -> ChallengeTerm {
        let k = support.len();
        let mut zero = CMat::zeros(1 << k, 1 << k);
        zero[(0, 0)] = c(1.0, 0.0);
        ChallengeTerm {
            r: 1,
            kind: ChallengeKind::Hamiltonian,
            projector: clifford.matrix().adjoint() * zero * clifford.matrix(),
            support,
            clifford,
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let code = SteaneCode::new(2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let psi = plus().tensor(&Statevector::from_bits(&[true]));
        let k1 = keygen(2, &code, &mut rng);
        let k2 = keygen(2, &code, &mut rng);
        let h1 = encode(&psi, &k1, &code).unwrap();
        assert_eq!(h1.physical_width(), 2 * 49 * 2);
        assert!(decode(&h1, &k1).unwrap().fidelity(&psi) > 1.0 - 1e-9);
        let h2 = encode(&psi, &k2, &code).unwrap();
        assert_eq!(decode(&h2, &k2).unwrap(), decode(&h1, &k1).unwrap());
        assert!(matches!(decode(&h1, &k2), Err(AuthError::Undecodable)) || k1.perm == k2.perm);
    }

    #[test]
    fn whole_block_pad_mismatch_is_a_logical_pauli() {
        let code = SteaneCode::new(1).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let key = keygen(1, &code, &mut rng);
        let h = encode(&Statevector::zero(1), &key, &code).unwrap();
        // Flip the X pad on every code position: logical X.
        let mut other = key.clone();
        for j in 0..7 {
            other.a[key.perm[j]] ^= true;
        }
        let out = decode(&h, &other).unwrap();
        assert!(out.fidelity(&Statevector::basis(1, 1)) > 1.0 - 1e-9);
        // One flipped position is corrected.
        let mut one = key.clone();
        one.a[key.perm[2]] ^= true;
        assert!(decode(&h, &one).unwrap().fidelity(&Statevector::zero(1)) > 1.0 - 1e-9);
    }

    #[test]
    fn classical_decode() {
        let code = SteaneCode::new(1).unwrap();
        let key = EncodingKey::fixed(1, &code);
        let mut u = code.codewords(true).unwrap()[0].clone();
        u.extend(vec![false; 7]);
        assert_eq!(decode_classical(&u, &key, &code, &[0]), vec![Some(true)]);
        u[0] ^= true;
        assert_eq!(decode_classical(&u, &key, &code, &[0]), vec![None]);
    }

    #[test]
    fn pushthrough_examples() {
        let a = vec![vec![true, false, true]];
        let b = vec![vec![false, true, true]];
        let id = CliffordOp::identity(1);
        let r = pad_pushthrough(&a, &b, None, &id).unwrap();
        assert_eq!((r.e.clone(), r.f.clone(), r.phase), (a.clone(), b.clone(), 0));
        let zeros = vec![vec![false; 3]];
        let r = pad_pushthrough(&zeros, &zeros, Some((&zeros, &zeros)), &CliffordOp::h()).unwrap();
        assert_eq!((r.e, r.f, r.phase), (zeros.clone(), zeros.clone(), 0));
        let x_only = vec![vec![true, false, false]];
        let r = pad_pushthrough(&x_only, &zeros, None, &CliffordOp::h()).unwrap();
        assert_eq!(r.e, zeros);
        assert_eq!(r.f, x_only);
    }

    #[test]
    fn pushthrough_matrix_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let c2 = CliffordOp::from_gates(2, &[CliffordGate::H(0), CliffordGate::S(1), CliffordGate::Cnot(0, 1)]).unwrap();
        for _ in 0..20 {
            let w = 3;
            let rb = |rng: &mut ChaCha20Rng| (0..2).map(|_| bits::random_bits(w, rng)).collect::<Vec<_>>();
            let (a, b, ap, bp) = (rb(&mut rng), rb(&mut rng), rb(&mut rng), rb(&mut rng));
            let r = pad_pushthrough(&a, &b, Some((&ap, &bp)), &c2).unwrap();
            // Positions are independent; check position by position as 2-qubit matrices.
            for j in 0..w {
                let lhs_p = PauliString {
                    x: vec![a[0][j] ^ ap[0][j], a[1][j] ^ ap[1][j]],
                    z: vec![b[0][j] ^ bp[0][j], b[1][j] ^ bp[1][j]],
                    phase: 0,
                };
                let rhs_p = PauliString { x: vec![r.e[0][j], r.e[1][j]], z: vec![r.f[0][j], r.f[1][j]], phase: 0 };
                let lhs = c2.matrix() * lhs_p.matrix();
                let rhs = rhs_p.matrix() * c2.matrix();
                // Equal up to a fourth root of unity, which the phase accumulates.
                assert!((0..4).any(|k| approx_eq(&lhs, &(&rhs * i_pow(k)))));
            }
        }
    }

    #[test]
    fn identity_traps_zero_read_zero() {
        let code = SteaneCode::new(1).unwrap();
        let key = EncodingKey::fixed(1, &code);
        let h = encode(&Statevector::zero(1), &key, &code).unwrap();
        let t = term(CliffordOp::identity(1), vec![0]);
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        for _ in 0..50 {
            let rec = measure_encoded(&h, &t, &mut rng).unwrap();
            assert!(rec.z[7..].iter().all(|&b| !b));
            assert_eq!(code.contains(&rec.z[..7]), Some(false));
        }
    }

    #[test]
    fn sampler_support_matches_exact_distribution() {
        let code = SteaneCode::new(1).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let key = keygen(1, &code, &mut rng);
        let hs = CliffordOp::from_gates(1, &[CliffordGate::S(0), CliffordGate::H(0)]).unwrap();
        let h = encode(&plus(), &key, &code).unwrap();
        let t = term(hs, vec![0]);
        let dist = measurement_distribution(&h, &t).unwrap();
        assert!((dist.values().sum::<f64>() - 1.0).abs() < TOL);
        for _ in 0..500 {
            let rec = measure_encoded(&h, &t, &mut rng).unwrap();
            assert!(dist.contains_key(&rec.z));
        }
    }

    #[test]
    fn support_outside_handle_is_an_error() {
        let code = SteaneCode::new(1).unwrap();
        let h = encode(&Statevector::zero(1), &EncodingKey::fixed(1, &code), &code).unwrap();
        let t = term(CliffordOp::identity(1), vec![3]);
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(matches!(measure_encoded(&h, &t, &mut rng), Err(AuthError::SupportOutsideHandle { .. })));
    }
}
