//! Bitstring helpers and the `"<len>:<hex>"` wire encoding.

use rand::Rng;

pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<bool> {
    (0..n).map(|_| rng.gen()).collect()
}

pub fn xor(a: &[bool], b: &[bool]) -> Vec<bool> {
    assert_eq!(a.len(), b.len(), "xor width mismatch");
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

pub fn xor_in_place(a: &mut [bool], b: &[bool]) {
    assert_eq!(a.len(), b.len(), "xor width mismatch");
    a.iter_mut().zip(b).for_each(|(x, y)| *x ^= y);
}

pub fn parse_bitstring(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|ch| match ch {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

pub fn to_bitstring(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// MSB-first packing.
pub fn pack(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|ch| ch.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i))))
        .collect()
}

pub fn unpack(bytes: &[u8], len: usize) -> Option<Vec<bool>> {
    if bytes.len() != len.div_ceil(8) {
        return None;
    }
    Some((0..len).map(|i| bytes[i / 8] >> (7 - i % 8) & 1 == 1).collect())
}

pub fn to_hex(bits: &[bool]) -> String {
    format!("{}:{}", bits.len(), hex::encode(pack(bits)))
}

pub fn from_hex(s: &str) -> Option<Vec<bool>> {
    let (len, body) = s.split_once(':')?;
    unpack(&hex::decode(body).ok()?, len.parse().ok()?)
}

/// Fixed-width big-endian encoding of an integer.
pub fn int_to_bits(v: u64, width: usize) -> Vec<bool> {
    (0..width).map(|i| v >> (width - 1 - i) & 1 == 1).collect()
}

pub fn bits_to_int(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

/// `#[serde(with = "crate::bits::hex_bits")]` for `Vec<bool>`.
pub mod hex_bits {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::to_hex(bits))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let s = String::deserialize(d)?;
        super::from_hex(&s).ok_or_else(|| D::Error::custom(format!("bad hex bitstring {s:?}")))
    }
}

/// Same encoding for `Vec<Vec<bool>>`.
pub mod hex_bits_vec {
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<bool>], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|b| super::to_hex(b)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<bool>>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| super::from_hex(s).ok_or_else(|| D::Error::custom(format!("bad hex bitstring {s:?}"))))
            .collect()
    }
}
