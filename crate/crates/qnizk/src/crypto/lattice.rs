//! Extractable, perfectly binding bit commitments from LWE with a gadget trapdoor.
//!
//! Per bit b with randomness (s, e, w):
//!   z1 = A s + e,  z2 = wᵀA,  z3 = wᵀz1 + b⌊q/2⌋
//! and in the strengthened variant additionally z4 = A'w + e'.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::hex_u16;

/// Nonzero entries per row of the trapdoor matrices.
pub const TRAPDOOR_ROW_WEIGHT: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("bit {index}: trapdoor inversion failed")]
    Inversion { index: usize },
    #[error("bit {index}: recovered error exceeds bound")]
    ErrorBound { index: usize },
    #[error("malformed commitment: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComParams {
    pub n: usize,
    pub m: usize,
    pub q: u32,
    /// LWE errors are uniform in [-bound, bound].
    pub bound: u32,
    pub strengthened: bool,
}

impl ComParams {
    pub fn toy() -> Self {
        ComParams { n: 8, m: 32, q: 3329, bound: 1, strengthened: false }
    }

    pub fn toy_strengthened() -> Self {
        ComParams { strengthened: true, ..Self::toy() }
    }

    pub fn validate(&self) -> Result<(), ComError> {
        if self.q < 5 || self.q > u16::MAX as u32 || !is_prime(self.q) {
            return Err(ComError::Params(format!("q = {} must be a prime below 2^16", self.q)));
        }
        if self.n == 0 || self.m < 2 * self.n + 1 {
            return Err(ComError::Params(format!("need m >= 2n + 1, got n = {}, m = {}", self.n, self.m)));
        }
        if self.bound == 0 || 8 * self.bound >= self.q {
            return Err(ComError::Params(format!("bound {} must be in [1, q/8)", self.bound)));
        }
        Ok(())
    }

    /// Rows of the uniform part of A.
    fn top(&self) -> usize {
        self.m - 2 * self.n
    }

    /// Noise after multiplying by [R | I].
    pub fn inversion_noise(&self) -> u32 {
        self.bound * (1 + TRAPDOOR_ROW_WEIGHT as u32)
    }

    fn gadget_base(&self) -> u32 {
        8 * self.inversion_noise()
    }

    /// Width of z4 in the strengthened variant.
    pub fn z4_len(&self) -> usize {
        self.top() + self.m
    }

    /// Whether inversion is unique and Regev decryption cannot wrap.
    pub fn is_sound(&self) -> bool {
        let nb = self.inversion_noise();
        let g = self.gadget_base();
        g * 2 * nb + 2 * nb < self.q && (self.m as u32) * self.bound < self.q / 4 && 2 * nb < self.q / 4
    }
}

fn is_prime(q: u32) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComPublicKey {
    pub params: ComParams,
    /// m × n, row-major.
    #[serde(with = "hex_u16")]
    pub a: Vec<u16>,
    /// (top + m) × m, row-major; strengthened only.
    #[serde(with = "hex_u16::option")]
    pub a_prime: Option<Vec<u16>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComSecretKey {
    /// 2n × top ternary.
    pub r: Vec<i8>,
    /// m × top ternary; strengthened only.
    pub r_prime: Option<Vec<i8>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComKeyPair {
    pub pk: ComPublicKey,
    pub sk: ComSecretKey,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitCommitment {
    #[serde(with = "hex_u16")]
    pub z1: Vec<u16>,
    #[serde(with = "hex_u16")]
    pub z2: Vec<u16>,
    pub z3: u16,
    #[serde(with = "hex_u16::option", default, skip_serializing_if = "Option::is_none")]
    pub z4: Option<Vec<u16>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub bits: Vec<BitCommitment>,
}

impl Commitment {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for bc in &self.bits {
            for v in bc.z1.iter().chain(&bc.z2).chain(std::iter::once(&bc.z3)).chain(bc.z4.iter().flatten()) {
                h.update(v.to_be_bytes());
            }
        }
        h.finalize().into()
    }
}

/// Expanded randomness of one bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitRandomness {
    pub s: Vec<u16>,
    pub e: Vec<i16>,
    pub w: Vec<bool>,
    pub e_prime: Vec<i16>,
}

impl BitRandomness {
    /// s = 0, e = 0, w = 0.
    pub fn zero(params: &ComParams) -> Self {
        BitRandomness {
            s: vec![0; params.n],
            e: vec![0; params.m],
            w: vec![false; params.m],
            e_prime: if params.strengthened { vec![0; params.z4_len()] } else { Vec::new() },
        }
    }

    /// Deterministic expansion of a 32-byte per-bit seed.
    pub fn expand(params: &ComParams, bit_seed: &[u8; 32]) -> Self {
        let mut rng = ChaCha20Rng::from_seed(*bit_seed);
        let b = params.bound as i16;
        let s = (0..params.n).map(|_| rng.gen_range(0..params.q) as u16).collect();
        let e = (0..params.m).map(|_| rng.gen_range(-b..=b)).collect();
        let w = (0..params.m).map(|_| rng.gen()).collect();
        let e_prime = if params.strengthened { (0..params.z4_len()).map(|_| rng.gen_range(-b..=b)).collect() } else { Vec::new() };
        BitRandomness { s, e, w, e_prime }
    }
}

/// Seed of bit `index` under a commitment seed.
pub fn bit_seed(seed: &[u8; 32], index: usize) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed);
    h.update((index as u64).to_be_bytes());
    h.finalize().into()
}

fn reduce(v: i64, q: u32) -> u16 {
    v.rem_euclid(q as i64) as u16
}

/// Centered representative in (-q/2, q/2].
fn center(v: u16, q: u32) -> i64 {
    let v = v as i64;
    let q = q as i64;
    if v > q / 2 {
        v - q
    } else {
        v
    }
}

fn mat_vec(mat: &[u16], rows: usize, cols: usize, v: &[i64], q: u32) -> Vec<u16> {
    (0..rows)
        .map(|i| reduce(mat[i * cols..(i + 1) * cols].iter().zip(v).map(|(&a, &x)| a as i64 * x).sum(), q))
        .collect()
}

fn sparse_ternary<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<i8> {
    let mut r = vec![0i8; rows * cols];
    for i in 0..rows {
        for _ in 0..TRAPDOOR_ROW_WEIGHT {
            let j = rng.gen_range(0..cols);
            r[i * cols + j] = if rng.gen() { 1 } else { -1 };
        }
    }
    r
}

/// Bottom block H - R·Ā where H is given per row as a sparse (col, value) list.
fn trapdoor_bottom(abar: &[u16], top: usize, cols: usize, r: &[i8], h: impl Fn(usize) -> Vec<(usize, u32)>, q: u32) -> Vec<u16> {
    let rows = r.len() / top;
    let mut out = vec![0u16; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let ra: i64 = (0..top).map(|k| r[i * top + k] as i64 * abar[k * cols + j] as i64).sum();
            out[i * cols + j] = reduce(-ra, q);
        }
        for (j, v) in h(i) {
            out[i * cols + j] = reduce(out[i * cols + j] as i64 + v as i64, q);
        }
    }
    out
}

pub fn com_gen<R: Rng + ?Sized>(params: ComParams, rng: &mut R) -> Result<ComKeyPair, ComError> {
    params.validate()?;
    let (n, m, q, top) = (params.n, params.m, params.q, params.top());
    let g = params.gadget_base();

    let abar: Vec<u16> = (0..top * n).map(|_| rng.gen_range(0..q) as u16).collect();
    let r = sparse_ternary(2 * n, top, rng);
    // Gadget rows 2j, 2j+1 read s_j with weights 1 and g.
    let bottom = trapdoor_bottom(&abar, top, n, &r, |i| vec![(i / 2, if i % 2 == 0 { 1 } else { g })], q);
    let a = [abar, bottom].concat();

    let (a_prime, r_prime) = if params.strengthened {
        let abar_p: Vec<u16> = (0..top * m).map(|_| rng.gen_range(0..q) as u16).collect();
        let rp = sparse_ternary(m, top, rng);
        let half = q / 2;
        let bottom = trapdoor_bottom(&abar_p, top, m, &rp, |i| vec![(i, half)], q);
        (Some([abar_p, bottom].concat()), Some(rp))
    } else {
        (None, None)
    };
    Ok(ComKeyPair { pk: ComPublicKey { params, a, a_prime }, sk: ComSecretKey { r, r_prime } })
}

pub fn commit_bit(pk: &ComPublicKey, bit: bool, rand: &BitRandomness) -> BitCommitment {
    let p = &pk.params;
    let q = p.q;
    let s: Vec<i64> = rand.s.iter().map(|&v| v as i64).collect();
    let z1: Vec<u16> = mat_vec(&pk.a, p.m, p.n, &s, q)
        .iter()
        .zip(&rand.e)
        .map(|(&v, &e)| reduce(v as i64 + e as i64, q))
        .collect();
    let z2: Vec<u16> = (0..p.n)
        .map(|j| reduce((0..p.m).filter(|&i| rand.w[i]).map(|i| pk.a[i * p.n + j] as i64).sum(), q))
        .collect();
    let wz: i64 = (0..p.m).filter(|&i| rand.w[i]).map(|i| z1[i] as i64).sum();
    let z3 = reduce(wz + if bit { (q / 2) as i64 } else { 0 }, q);
    let z4 = pk.a_prime.as_ref().map(|ap| {
        let w: Vec<i64> = rand.w.iter().map(|&b| b as i64).collect();
        mat_vec(ap, p.z4_len(), p.m, &w, q)
            .iter()
            .zip(&rand.e_prime)
            .map(|(&v, &e)| reduce(v as i64 + e as i64, q))
            .collect()
    });
    BitCommitment { z1, z2, z3, z4 }
}

/// Commit to `payload`, bit i using the expansion of `bit_seed(seed, i)`.
pub fn com_commit(pk: &ComPublicKey, payload: &[bool], seed: &[u8; 32]) -> Commitment {
    let bits = payload
        .iter()
        .enumerate()
        .map(|(i, &b)| commit_bit(pk, b, &BitRandomness::expand(&pk.params, &bit_seed(seed, i))))
        .collect();
    Commitment { bits }
}

fn within(v: &[i16], bound: u32) -> bool {
    v.iter().all(|e| e.unsigned_abs() as u32 <= bound)
}

/// Opening check of one bit against explicit randomness.
pub fn verify_bit_with(pk: &ComPublicKey, bc: &BitCommitment, bit: bool, rand: &BitRandomness) -> bool {
    let p = &pk.params;
    let shapes = rand.s.len() == p.n
        && rand.e.len() == p.m
        && rand.w.len() == p.m
        && (!p.strengthened || rand.e_prime.len() == p.z4_len());
    shapes
        && within(&rand.e, p.bound)
        && within(&rand.e_prime, p.bound)
        && rand.s.iter().all(|&v| (v as u32) < p.q)
        && commit_bit(pk, bit, rand) == *bc
}

/// Opening check of one bit against its per-bit seed.
pub fn verify_bit(pk: &ComPublicKey, bc: &BitCommitment, bit: bool, bit_seed: &[u8; 32]) -> bool {
    verify_bit_with(pk, bc, bit, &BitRandomness::expand(&pk.params, bit_seed))
}

pub fn com_verify(pk: &ComPublicKey, z: &Commitment, payload: &[bool], seed: &[u8; 32]) -> bool {
    z.len() == payload.len()
        && z.bits.iter().zip(payload).enumerate().all(|(i, (bc, &b))| verify_bit(pk, bc, b, &bit_seed(seed, i)))
}

/// Output of trapdoor extraction for one bit. w and e' only in the strengthened variant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredBit {
    pub bit: bool,
    pub s: Vec<u16>,
    pub e: Vec<i16>,
    pub w: Option<Vec<bool>>,
    pub e_prime: Option<Vec<i16>>,
}

impl RecoveredBit {
    pub fn randomness(&self) -> Option<BitRandomness> {
        Some(BitRandomness { s: self.s.clone(), e: self.e.clone(), w: self.w.clone()?, e_prime: self.e_prime.clone()? })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recovered {
    pub payload: Vec<bool>,
    pub bits: Vec<RecoveredBit>,
}

/// [R | I]·c for a stacked (top + rows)-vector c.
fn lift(r: &[i8], top: usize, c: &[u16], q: u32) -> Vec<i64> {
    let rows = r.len() / top;
    (0..rows)
        .map(|i| {
            let rc: i64 = (0..top).map(|k| r[i * top + k] as i64 * c[k] as i64).sum();
            center(reduce(c[top + i] as i64 + rc, q), q)
        })
        .collect()
}

/// Recover (s, e) from z1 = A s + e.
pub fn invert(pk: &ComPublicKey, sk: &ComSecretKey, z1: &[u16]) -> Option<(Vec<u16>, Vec<i16>)> {
    let p = &pk.params;
    let (q, nb, g) = (p.q, p.inversion_noise() as i64, p.gadget_base() as i64);
    if z1.len() != p.m || sk.r.len() != 2 * p.n * p.top() {
        return None;
    }
    let v = lift(&sk.r, p.top(), z1, q);
    let mut s = Vec::with_capacity(p.n);
    for j in 0..p.n {
        let (v0, v1) = (v[2 * j], v[2 * j + 1]);
        let best = (-nb..=nb)
            .map(|e0| reduce(v0 - e0, q))
            .map(|cand| (center(reduce(v1 - g * cand as i64, q), q).abs() + (center(reduce(v0 - cand as i64, q), q)).abs(), cand))
            .min()?;
        if best.0 > 2 * nb {
            return None;
        }
        s.push(best.1);
    }
    let s_i: Vec<i64> = s.iter().map(|&x| x as i64).collect();
    let e = mat_vec(&pk.a, p.m, p.n, &s_i, q)
        .iter()
        .zip(z1)
        .map(|(&as_, &z)| center(reduce(z as i64 - as_ as i64, q), q) as i16)
        .collect();
    Some((s, e))
}

fn recover_bit(pk: &ComPublicKey, sk: &ComSecretKey, bc: &BitCommitment, index: usize) -> Result<RecoveredBit, ComError> {
    let p = &pk.params;
    let q = p.q;
    if bc.z2.len() != p.n || bc.z4.is_some() != p.strengthened {
        return Err(ComError::Malformed(format!("bit {index}: wrong shape")));
    }
    let (s, e) = invert(pk, sk, &bc.z1).ok_or(ComError::Inversion { index })?;
    if !within(&e, p.bound) {
        return Err(ComError::ErrorBound { index });
    }
    let zs: i64 = bc.z2.iter().zip(&s).map(|(&a, &b)| a as i64 * b as i64).sum();
    let v = center(reduce(bc.z3 as i64 - zs, q), q);
    let bit = v.unsigned_abs() > (q / 4) as u64;

    let (w, e_prime) = match (&bc.z4, &pk.a_prime, &sk.r_prime) {
        (Some(z4), Some(ap), Some(rp)) => {
            if z4.len() != p.z4_len() {
                return Err(ComError::Malformed(format!("bit {index}: z4 width")));
            }
            let w: Vec<bool> = lift(rp, p.top(), z4, q).iter().map(|v| v.unsigned_abs() > (q / 4) as u64).collect();
            let wi: Vec<i64> = w.iter().map(|&b| b as i64).collect();
            let ep: Vec<i16> = mat_vec(ap, p.z4_len(), p.m, &wi, q)
                .iter()
                .zip(z4)
                .map(|(&a, &z)| center(reduce(z as i64 - a as i64, q), q) as i16)
                .collect();
            if !within(&ep, p.bound) {
                return Err(ComError::ErrorBound { index });
            }
            (Some(w), Some(ep))
        }
        (None, _, _) => (None, None),
        _ => return Err(ComError::Malformed("strengthened key material missing".into())),
    };
    Ok(RecoveredBit { bit, s, e, w, e_prime })
}

pub fn com_recover(pk: &ComPublicKey, sk: &ComSecretKey, z: &Commitment) -> Result<Recovered, ComError> {
    let bits = z.bits.iter().enumerate().map(|(i, bc)| recover_bit(pk, sk, bc, i)).collect::<Result<Vec<_>, _>>()?;
    Ok(Recovered { payload: bits.iter().map(|b| b.bit).collect(), bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn keys(strengthened: bool, seed: u64) -> ComKeyPair {
        let params = ComParams { strengthened, ..ComParams::toy() };
        com_gen(params, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn toy_params_are_sound() {
        assert!(ComParams::toy().is_sound());
        assert_eq!(ComParams::toy().inversion_noise(), 4);
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = [
            ComParams { q: 3328, ..ComParams::toy() },
            ComParams { m: 16, ..ComParams::toy() },
            ComParams { bound: 500, ..ComParams::toy() },
        ];
        for p in bad {
            assert!(matches!(com_gen(p, &mut ChaCha20Rng::seed_from_u64(0)), Err(ComError::Params(_))));
        }
    }

    #[test]
    fn same_seed_same_pair() {
        assert_eq!(keys(true, 4), keys(true, 4));
        assert_ne!(keys(false, 4).pk, keys(false, 5).pk);
    }

    #[test]
    fn invert_round_trips() {
        let kp = keys(false, 1);
        let p = kp.pk.params;
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..100 {
            let s: Vec<u16> = (0..p.n).map(|_| rng.gen_range(0..p.q) as u16).collect();
            let e: Vec<i16> = (0..p.m).map(|_| rng.gen_range(-1..=1)).collect();
            // Direct computation of As + e.
            let z1: Vec<u16> = (0..p.m)
                .map(|i| {
                    let dot: i64 = (0..p.n).map(|j| kp.pk.a[i * p.n + j] as i64 * s[j] as i64).sum();
                    (dot + e[i] as i64).rem_euclid(p.q as i64) as u16
                })
                .collect();
            assert_eq!(invert(&kp.pk, &kp.sk, &z1), Some((s, e)));
        }
    }

    #[test]
    fn sampled_errors_within_bound() {
        let p = ComParams::toy_strengthened();
        for i in 0..200 {
            let r = BitRandomness::expand(&p, &bit_seed(&[3; 32], i));
            assert!(r.e.iter().chain(&r.e_prime).all(|e| e.abs() <= p.bound as i16));
        }
    }

    #[test]
    fn degenerate_randomness_q17() {
        let p = ComParams { q: 17, ..ComParams::toy() };
        let kp = com_gen(p, &mut ChaCha20Rng::seed_from_u64(0)).unwrap();
        let zero = BitRandomness::zero(&p);
        assert_eq!(commit_bit(&kp.pk, true, &zero).z3, 8);
        assert_eq!(commit_bit(&kp.pk, false, &zero).z3, 0);
        let z = Commitment { bits: vec![commit_bit(&kp.pk, true, &zero)] };
        assert_eq!(com_recover(&kp.pk, &kp.sk, &z).unwrap().payload, vec![true]);
    }

    #[test]
    fn verify_rejects_tampering() {
        let kp = keys(false, 7);
        let payload = vec![true, false, true, true];
        let z = com_commit(&kp.pk, &payload, &[9; 32]);
        assert!(com_verify(&kp.pk, &z, &payload, &[9; 32]));
        let mut flipped = payload.clone();
        flipped[1] ^= true;
        assert!(!com_verify(&kp.pk, &z, &flipped, &[9; 32]));
        let mut tampered = z.clone();
        tampered.bits[0].z1[0] = (tampered.bits[0].z1[0] + 1) % 3329;
        assert!(!com_verify(&kp.pk, &tampered, &payload, &[9; 32]));
        assert!(!com_verify(&kp.pk, &z, &payload[..3], &[9; 32]));
    }

    #[test]
    fn recover_round_trips_1000() {
        let kp = keys(false, 11);
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let payload: Vec<bool> = (0..1000).map(|_| rng.gen()).collect();
        let seed: [u8; 32] = rng.gen();
        let z = com_commit(&kp.pk, &payload, &seed);
        assert_eq!(com_recover(&kp.pk, &kp.sk, &z).unwrap().payload, payload);
    }

    #[test]
    fn strengthened_recovers_randomness() {
        let kp = keys(true, 13);
        let payload = vec![true, false, false, true, true];
        let z = com_commit(&kp.pk, &payload, &[1; 32]);
        assert_eq!(z.bits[0].z4.as_ref().unwrap().len(), 48);
        let rec = com_recover(&kp.pk, &kp.sk, &z).unwrap();
        assert_eq!(rec.payload, payload);
        for (i, rb) in rec.bits.iter().enumerate() {
            assert_eq!(rb.randomness().unwrap(), BitRandomness::expand(&kp.pk.params, &bit_seed(&[1; 32], i)));
        }
    }

    #[test]
    fn out_of_bound_error_flags_failure() {
        let kp = keys(false, 14);
        let mut z = com_commit(&kp.pk, &[true], &[2; 32]);
        // Push one coordinate well outside the error bound.
        z.bits[0].z1[0] = ((z.bits[0].z1[0] as u32 + 40) % 3329) as u16;
        assert!(com_recover(&kp.pk, &kp.sk, &z).is_err());
    }

    #[test]
    fn no_collisions_between_payloads() {
        let kp = keys(false, 15);
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let mut seen = std::collections::HashMap::new();
        for _ in 0..1000 {
            let b: bool = rng.gen();
            let bc = commit_bit(&kp.pk, b, &BitRandomness::expand(&kp.pk.params, &rng.gen()));
            if let Some(prev) = seen.insert(bc, b) {
                assert_eq!(prev, b);
            }
        }
        // Binding is structural: Regev noise m·B stays below q/4.
        assert!(kp.pk.params.m as u32 * kp.pk.params.bound < kp.pk.params.q / 4);
    }

    #[test]
    fn serde_round_trip() {
        let kp = keys(true, 17);
        let z = com_commit(&kp.pk, &[true, false], &[5; 32]);
        let back: Commitment = serde_json::from_str(&serde_json::to_string(&z).unwrap()).unwrap();
        assert_eq!(back, z);
        let pk: ComPublicKey = serde_json::from_str(&serde_json::to_string(&kp.pk).unwrap()).unwrap();
        assert_eq!(pk, kp.pk);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn recover_inverts_commit(bits in proptest::collection::vec(any::<bool>(), 1..24), seed in any::<[u8; 32]>()) {
            let kp = keys(true, 21);
            let z = com_commit(&kp.pk, &bits, &seed);
            prop_assert!(com_verify(&kp.pk, &z, &bits, &seed));
            prop_assert_eq!(com_recover(&kp.pk, &kp.sk, &z).unwrap().payload, bits);
        }
    }
}
