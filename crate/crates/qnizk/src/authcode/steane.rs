use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AuthError;
use crate::quantum::CliffordOp;

/// Rows of the [7,4] Hamming parity-check matrix; column j is binary(j+1).
/// Their span is the even-weight subcode D^0.
const CHECKS: [u8; 3] = [0b0001111, 0b0110011, 0b1010101];

fn word7(bits: &[bool]) -> u8 {
    bits.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b))
}

fn syndrome7(w: u8) -> u8 {
    // Position j (MSB first) contributes j+1.
    (0..7).filter(|j| w >> (6 - j) & 1 == 1).fold(0u8, |s, j| s ^ (j as u8 + 1))
}

/// Codeword value of a 7-bit word, if it is one.
fn base_value(w: u8) -> Option<bool> {
    (syndrome7(w) == 0).then_some(w.count_ones() % 2 == 1)
}

fn base_sample<R: Rng + ?Sized>(bit: bool, rng: &mut R) -> u8 {
    let mut w = if bit { 0x7f } else { 0 };
    for row in CHECKS {
        if rng.gen::<bool>() {
            w ^= row;
        }
    }
    w
}

/// Logical (x, z) flip left by a residual 7-bit Pauli frame after ideal correction.
fn base_frame(w: u8) -> bool {
    let s = syndrome7(w);
    let corrected = if s == 0 { w } else { w ^ (1 << (7 - s)) };
    corrected.count_ones() % 2 == 1
}

/// The t-fold concatenated Steane code, as classical codeword sets D^0, D^1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SteaneCode {
    level: u32,
}

/// Build the level-`t` code (1 ≤ t ≤ 3).
pub fn steane_tables(t: u32) -> Result<SteaneCode, AuthError> {
    SteaneCode::new(t)
}

impl SteaneCode {
    pub fn new(level: u32) -> Result<Self, AuthError> {
        if !(1..=3).contains(&level) {
            return Err(AuthError::UnsupportedLevel(level));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// N = 7^t.
    pub fn block_len(&self) -> usize {
        7usize.pow(self.level)
    }

    /// log2 |D^b| = (N − 1)/2.
    pub fn codeword_count_log2(&self) -> u32 {
        (self.block_len() as u32 - 1) / 2
    }

    /// |D^0| = |D^1|, when it fits in a u128.
    pub fn codeword_count(&self) -> Option<u128> {
        1u128.checked_shl(self.codeword_count_log2())
    }

    /// Logical value of `word`, or None if it is not a codeword.
    pub fn contains(&self, word: &[bool]) -> Option<bool> {
        if word.len() != self.block_len() {
            return None;
        }
        Self::value_at(self.level, word)
    }

    fn value_at(level: u32, word: &[bool]) -> Option<bool> {
        if level == 1 {
            return base_value(word7(word));
        }
        let inner = word.len() / 7;
        let mut outer = 0u8;
        for chunk in word.chunks(inner) {
            outer = (outer << 1) | u8::from(Self::value_at(level - 1, chunk)?);
        }
        base_value(outer)
    }

    /// Uniform element of D^bit.
    pub fn sample_codeword<R: Rng + ?Sized>(&self, bit: bool, rng: &mut R) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.block_len());
        Self::sample_at(self.level, bit, rng, &mut out);
        out
    }

    fn sample_at<R: Rng + ?Sized>(level: u32, bit: bool, rng: &mut R, out: &mut Vec<bool>) {
        let w = base_sample(bit, rng);
        for j in 0..7 {
            let b = w >> (6 - j) & 1 == 1;
            if level == 1 {
                out.push(b);
            } else {
                Self::sample_at(level - 1, b, rng, out);
            }
        }
    }

    /// All of D^bit; only materialized at level 1.
    pub fn codewords(&self, bit: bool) -> Option<Vec<Vec<bool>>> {
        if self.level != 1 {
            return None;
        }
        let mut out: Vec<Vec<bool>> = (0u8..128)
            .filter(|&w| base_value(w) == Some(bit))
            .map(|w| (0..7).map(|j| w >> (6 - j) & 1 == 1).collect())
            .collect();
        out.sort();
        Some(out)
    }

    /// The logical operation implemented by applying `c` transversally.
    /// Codeword weights are 0 or 3 mod 4, so at odd levels the logical
    /// action is the complex conjugate.
    pub fn logical_action(&self, c: &CliffordOp) -> CliffordOp {
        if self.level % 2 == 1 {
            c.conj()
        } else {
            c.clone()
        }
    }

    /// The transversal operation whose logical action is `logical`.
    pub fn physical_for(&self, logical: &CliffordOp) -> CliffordOp {
        self.logical_action(logical)
    }

    /// Logical (X, Z) flips left by the Pauli frame X^x Z^z on one block
    /// after hierarchical ideal decoding.
    pub fn decode_pauli_frame(&self, x: &[bool], z: &[bool]) -> (bool, bool) {
        assert_eq!(x.len(), self.block_len());
        assert_eq!(z.len(), self.block_len());
        (Self::frame_at(self.level, x), Self::frame_at(self.level, z))
    }

    fn frame_at(level: u32, e: &[bool]) -> bool {
        if level == 1 {
            return base_frame(word7(e));
        }
        let inner = e.len() / 7;
        let outer = e.chunks(inner).fold(0u8, |acc, ch| (acc << 1) | u8::from(Self::frame_at(level - 1, ch)));
        base_frame(outer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{approx_eq, gates, CliffordGate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn all_words7() -> impl Iterator<Item = Vec<bool>> {
        (0u8..128).map(|w| (0..7).map(|j| w >> (6 - j) & 1 == 1).collect())
    }

    #[test]
    fn level_one_tables() {
        let code = steane_tables(1).unwrap();
        let d0 = code.codewords(false).unwrap();
        let d1 = code.codewords(true).unwrap();
        assert_eq!((d0.len(), d1.len()), (8, 8));
        assert!(d0.contains(&vec![false; 7]));
        assert!(d0.iter().all(|w| !d1.contains(w)));
        assert_eq!(code.codeword_count(), Some(8));
    }

    #[test]
    fn level_one_membership_is_exhaustively_consistent() {
        let code = SteaneCode::new(1).unwrap();
        let d0 = code.codewords(false).unwrap();
        let d1 = code.codewords(true).unwrap();
        for w in all_words7() {
            let expect = if d0.contains(&w) {
                Some(false)
            } else if d1.contains(&w) {
                Some(true)
            } else {
                None
            };
            assert_eq!(code.contains(&w), expect);
        }
    }

    #[test]
    fn closure_under_xor() {
        let code = SteaneCode::new(1).unwrap();
        let all: Vec<_> = [false, true].iter().flat_map(|&b| code.codewords(b).unwrap()).collect();
        for a in &all {
            for b in &all {
                let s: Vec<bool> = a.iter().zip(b).map(|(x, y)| x ^ y).collect();
                let va = code.contains(a).unwrap();
                let vb = code.contains(b).unwrap();
                assert_eq!(code.contains(&s), Some(va ^ vb));
            }
        }
    }

    #[test]
    fn level_two_sizes_and_sampling() {
        let code = SteaneCode::new(2).unwrap();
        assert_eq!(code.block_len(), 49);
        assert_eq!(code.codeword_count(), Some(1 << 24));
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for bit in [false, true] {
            for _ in 0..200 {
                assert_eq!(code.contains(&code.sample_codeword(bit, &mut rng)), Some(bit));
            }
        }
        assert_eq!(code.contains(&[false; 49]), Some(false));
        let mut one_flip = vec![false; 49];
        one_flip[3] = true;
        assert_eq!(code.contains(&one_flip), None);
        assert!(SteaneCode::new(4).is_err());
        assert!(SteaneCode::new(0).is_err());
    }

    #[test]
    fn single_errors_are_corrected_by_the_frame_decoder() {
        for level in [1, 2] {
            let code = SteaneCode::new(level).unwrap();
            let n = code.block_len();
            for j in 0..n {
                let mut e = vec![false; n];
                e[j] = true;
                assert_eq!(code.decode_pauli_frame(&e, &e), (false, false));
            }
            let ones = vec![true; n];
            assert_eq!(code.decode_pauli_frame(&ones, &vec![false; n]), (true, false));
        }
    }

    #[test]
    fn logical_action_conjugates_at_odd_levels() {
        let s = CliffordOp::from_gates(1, &[CliffordGate::S(0)]).unwrap();
        let l1 = SteaneCode::new(1).unwrap().logical_action(&s);
        assert!(approx_eq(l1.matrix(), &gates::sdg()));
        let l2 = SteaneCode::new(2).unwrap().logical_action(&s);
        assert!(approx_eq(l2.matrix(), &gates::s()));
        let h = CliffordOp::h();
        assert!(approx_eq(SteaneCode::new(1).unwrap().logical_action(&h).matrix(), &gates::h()));
    }

    #[test]
    fn transversal_s_phases_match_codeword_weights() {
        // S^{⊗7}|c⟩ = i^{wt c}|c⟩: weight ≡ 0 mod 4 on D^0 and ≡ 3 mod 4 on D^1.
        let code = SteaneCode::new(1).unwrap();
        for bit in [false, true] {
            for w in code.codewords(bit).unwrap() {
                let wt = w.iter().filter(|&&b| b).count();
                assert_eq!(wt % 4, if bit { 3 } else { 0 });
            }
        }
    }
}
