use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AuthError, SteaneCode};
use crate::bits;
use crate::quantum::{c, Statevector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trap {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "+y")]
    PlusY,
}

impl Trap {
    pub const ALL: [Trap; 3] = [Trap::Zero, Trap::Plus, Trap::PlusY];

    pub fn state(self) -> Statevector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Trap::Zero => Statevector::zero(1),
            Trap::Plus => Statevector::new(vec![c(s, 0.0), c(s, 0.0)]).unwrap(),
            Trap::PlusY => Statevector::new(vec![c(s, 0.0), c(0.0, s)]).unwrap(),
        }
    }

    fn code(self) -> u8 {
        match self {
            Trap::Zero => 0,
            Trap::Plus => 1,
            Trap::PlusY => 2,
        }
    }

    fn from_code(v: u8) -> Option<Trap> {
        Self::ALL.get(v as usize).copied()
    }
}

/// The (t, π, a, b) key. `perm[j]` is the physical position of pre-position
/// j within each 2N-block; pre-positions 0..N hold code qubits and N..2N traps.
/// Pads are indexed by physical qubit 2N·i + position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingKey {
    pub block: usize,
    pub traps: Vec<Vec<Trap>>,
    pub perm: Vec<usize>,
    #[serde(with = "bits::hex_bits")]
    pub a: Vec<bool>,
    #[serde(with = "bits::hex_bits")]
    pub b: Vec<bool>,
}

/// Sample a uniform key for `p` logical qubits.
pub fn keygen<R: Rng + ?Sized>(p: usize, code: &SteaneCode, rng: &mut R) -> EncodingKey {
    let n = code.block_len();
    let traps = (0..p).map(|_| (0..n).map(|_| Trap::ALL[rng.gen_range(0..3)]).collect()).collect();
    let mut perm: Vec<usize> = (0..2 * n).collect();
    perm.shuffle(rng);
    EncodingKey { block: n, traps, perm, a: bits::random_bits(2 * n * p, rng), b: bits::random_bits(2 * n * p, rng) }
}

impl EncodingKey {
    /// Identity permutation, zero pads, |0⟩ traps.
    pub fn fixed(p: usize, code: &SteaneCode) -> Self {
        let n = code.block_len();
        EncodingKey {
            block: n,
            traps: vec![vec![Trap::Zero; n]; p],
            perm: (0..2 * n).collect(),
            a: vec![false; 2 * n * p],
            b: vec![false; 2 * n * p],
        }
    }

    pub fn num_logical(&self) -> usize {
        self.traps.len()
    }

    pub fn physical_width(&self) -> usize {
        2 * self.block * self.num_logical()
    }

    pub fn validate(&self) -> Result<(), AuthError> {
        let n = self.block;
        let width = self.physical_width();
        let mut seen = vec![false; 2 * n];
        for &p in &self.perm {
            if p >= 2 * n || seen[p] {
                return Err(AuthError::MalformedKey("perm is not a permutation".into()));
            }
            seen[p] = true;
        }
        if self.perm.len() != 2 * n || self.traps.iter().any(|t| t.len() != n) {
            return Err(AuthError::MalformedKey("block geometry".into()));
        }
        if self.a.len() != width || self.b.len() != width {
            return Err(AuthError::MalformedKey("pad width".into()));
        }
        Ok(())
    }

    /// Physical range of logical qubit i.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        2 * self.block * i..2 * self.block * (i + 1)
    }

    /// Pads after teleportation outcomes d = (x ‖ z) have been absorbed.
    pub fn with_pad_xor(&self, d: &[bool]) -> Result<EncodingKey, AuthError> {
        let w = self.physical_width();
        if d.len() != 2 * w {
            return Err(AuthError::Width { expected: 2 * w, got: d.len() });
        }
        let mut out = self.clone();
        bits::xor_in_place(&mut out.a, &d[..w]);
        bits::xor_in_place(&mut out.b, &d[w..]);
        Ok(out)
    }

    fn perm_width(&self) -> usize {
        (usize::BITS - (2 * self.block - 1).leading_zeros()) as usize
    }

    /// Fixed-layout payload: traps (2 bits each), π entries, a, b.
    pub fn to_bits(&self) -> Vec<bool> {
        let pw = self.perm_width();
        let mut out = Vec::new();
        for row in &self.traps {
            for t in row {
                out.extend(bits::int_to_bits(t.code() as u64, 2));
            }
        }
        for &p in &self.perm {
            out.extend(bits::int_to_bits(p as u64, pw));
        }
        out.extend(&self.a);
        out.extend(&self.b);
        out
    }

    pub fn payload_len(p: usize, code: &SteaneCode) -> usize {
        Self::fixed(p, code).to_bits().len()
    }

    pub fn from_bits(payload: &[bool], p: usize, code: &SteaneCode) -> Result<Self, AuthError> {
        let n = code.block_len();
        let mut key = Self::fixed(p, code);
        let expected = key.to_bits().len();
        if payload.len() != expected {
            return Err(AuthError::Width { expected, got: payload.len() });
        }
        let pw = key.perm_width();
        let mut pos = 0;
        let mut take = |w: usize| {
            let v = bits::bits_to_int(&payload[pos..pos + w]);
            pos += w;
            v
        };
        for i in 0..p {
            for j in 0..n {
                key.traps[i][j] = Trap::from_code(take(2) as u8)
                    .ok_or_else(|| AuthError::MalformedKey("trap code 3".into()))?;
            }
        }
        for j in 0..2 * n {
            key.perm[j] = take(pw) as usize;
        }
        let w = 2 * n * p;
        let off = payload.len() - 2 * w;
        key.a = payload[off..off + w].to_vec();
        key.b = payload[off + w..].to_vec();
        key.validate()?;
        Ok(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn keygen_is_deterministic_and_well_formed() {
        let code = SteaneCode::new(1).unwrap();
        let k1 = keygen(3, &code, &mut ChaCha20Rng::seed_from_u64(7));
        let k2 = keygen(3, &code, &mut ChaCha20Rng::seed_from_u64(7));
        assert_eq!(k1, k2);
        k1.validate().unwrap();
        assert_eq!(k1.physical_width(), 42);
    }

    #[test]
    fn payload_round_trip() {
        for level in [1, 2] {
            let code = SteaneCode::new(level).unwrap();
            let key = keygen(4, &code, &mut ChaCha20Rng::seed_from_u64(level as u64));
            let bits = key.to_bits();
            assert_eq!(bits.len(), EncodingKey::payload_len(4, &code));
            assert_eq!(EncodingKey::from_bits(&bits, 4, &code).unwrap(), key);
        }
    }

    #[test]
    fn malformed_payload_is_rejected() {
        let code = SteaneCode::new(1).unwrap();
        let mut bits = EncodingKey::fixed(1, &code).to_bits();
        // First permutation entry becomes equal to the second.
        let pw = 4;
        let start = 2 * 7;
        bits[start..start + pw].copy_from_slice(&[false, false, false, true]);
        assert!(EncodingKey::from_bits(&bits, 1, &code).is_err());
        assert!(EncodingKey::from_bits(&bits[1..], 1, &code).is_err());
    }

    #[test]
    fn marginals_are_uniform() {
        let code = SteaneCode::new(1).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let mut traps = [0usize; 3];
        let mut first = [0usize; 14];
        let draws = 10_000;
        for _ in 0..draws {
            let k = keygen(1, &code, &mut rng);
            traps[Trap::ALL.iter().position(|t| *t == k.traps[0][0]).unwrap()] += 1;
            first[k.perm[0]] += 1;
        }
        for t in traps {
            assert!((t as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.02);
        }
        for f in first {
            assert!((f as f64 / draws as f64 - 1.0 / 14.0).abs() < 0.02);
        }
    }

    #[test]
    fn trap_symbols_serialize() {
        assert_eq!(serde_json::to_string(&Trap::PlusY).unwrap(), "\"+y\"");
        let code = SteaneCode::new(1).unwrap();
        let key = keygen(1, &code, &mut ChaCha20Rng::seed_from_u64(1));
        let js = serde_json::to_string(&key).unwrap();
        assert_eq!(serde_json::from_str::<EncodingKey>(&js).unwrap(), key);
    }
}
