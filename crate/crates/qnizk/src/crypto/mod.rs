//! Classical primitives at toy parameters.

pub mod fhe;
pub mod hamiltonicity;
pub mod lattice;
pub mod nizk;

pub use fhe::{BoolCircuit, BoolGate, Ciphertext, FheCircuit, FheError, FhePublicKey, FheSecretKey};
pub use lattice::{
    bit_seed, com_commit, com_gen, com_recover, com_verify, commit_bit, verify_bit, verify_bit_with, BitCommitment, BitRandomness,
    ComError, ComKeyPair, ComParams, ComPublicKey, ComSecretKey, Commitment, Recovered,
};
pub use nizk::{Attestation, AttestationCrs, AttestationTrapdoor, NizkBackend, NizkError, Relation};

use sha2::{Digest, Sha256};

/// SHA-256 over the concatenation of `parts`.
pub fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Vec<u16> as big-endian hex.
pub(crate) mod hex_u16 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn encode(v: &[u16]) -> String {
        hex::encode(v.iter().flat_map(|x| x.to_be_bytes()).collect::<Vec<u8>>())
    }

    pub fn decode(s: &str) -> Option<Vec<u16>> {
        let bytes = hex::decode(s).ok()?;
        (bytes.len() % 2 == 0).then(|| bytes.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect())
    }

    pub fn serialize<S: Serializer>(v: &[u16], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u16>, D::Error> {
        decode(&String::deserialize(d)?).ok_or_else(|| D::Error::custom("bad u16 hex"))
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<Vec<u16>>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(&encode(v)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u16>>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| decode(&s).ok_or_else(|| D::Error::custom("bad u16 hex")))
                .transpose()
        }
    }
}

/// [u8; 32] as hex.
pub(crate) mod hex32 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let bytes = hex::decode(String::deserialize(d)?).map_err(D::Error::custom)?;
        bytes.try_into().map_err(|_| D::Error::custom("expected 32 bytes"))
    }
}

/// Vec<u8> as hex.
pub(crate) mod hex_bytes {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(D::Error::custom)
    }
}
