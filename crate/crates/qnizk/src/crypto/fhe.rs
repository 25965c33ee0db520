//! Transparent FHE backend.
//!
//! A ciphertext carries its plaintext next to a key tag and a nonce. Eval
//! applies the circuit to the plaintexts; Refresh rebuilds the ciphertext
//! from the plaintext with a fresh nonce, so its output depends only on the
//! key and the plaintext.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{hex32, hex_bytes, sha256};
use crate::bits;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FheError {
    #[error("ciphertext was produced under a different key")]
    KeyMismatch,
    #[error("width mismatch: expected {expected} bytes, got {got}")]
    Width { expected: usize, got: usize },
    #[error("circuit failed: {0}")]
    Circuit(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FheSecretKey {
    #[serde(with = "hex32")]
    secret: [u8; 32],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FhePublicKey {
    #[serde(with = "hex32")]
    pub tag: [u8; 32],
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ciphertext {
    #[serde(with = "hex32")]
    pub key_tag: [u8; 32],
    #[serde(with = "hex32")]
    pub nonce: [u8; 32],
    #[serde(with = "hex_bytes")]
    body: Vec<u8>,
}

/// A deterministic classical circuit over byte strings.
pub trait FheCircuit {
    /// Canonical description, folded into the output nonce.
    fn descriptor(&self) -> Vec<u8>;
    fn apply(&self, inputs: &[&[u8]]) -> Result<Vec<u8>, String>;
}

pub fn gen<R: Rng + ?Sized>(rng: &mut R) -> (FhePublicKey, FheSecretKey) {
    let secret: [u8; 32] = rng.gen();
    (FhePublicKey { tag: sha256(&[b"fhe-pk", &secret]) }, FheSecretKey { secret })
}

impl FheSecretKey {
    pub fn public(&self) -> FhePublicKey {
        FhePublicKey { tag: sha256(&[b"fhe-pk", &self.secret]) }
    }
}

pub fn enc<R: Rng + ?Sized>(pk: &FhePublicKey, plaintext: &[u8], rng: &mut R) -> Ciphertext {
    Ciphertext { key_tag: pk.tag, nonce: rng.gen(), body: plaintext.to_vec() }
}

pub fn dec(sk: &FheSecretKey, ct: &Ciphertext) -> Result<Vec<u8>, FheError> {
    if ct.key_tag != sk.public().tag {
        return Err(FheError::KeyMismatch);
    }
    Ok(ct.body.clone())
}

pub fn eval(pk: &FhePublicKey, circuit: &dyn FheCircuit, inputs: &[&Ciphertext]) -> Result<Ciphertext, FheError> {
    if inputs.iter().any(|ct| ct.key_tag != pk.tag) {
        return Err(FheError::KeyMismatch);
    }
    let bodies: Vec<&[u8]> = inputs.iter().map(|ct| ct.body.as_slice()).collect();
    let body = circuit.apply(&bodies).map_err(FheError::Circuit)?;
    let mut parts: Vec<&[u8]> = inputs.iter().map(|ct| ct.nonce.as_slice()).collect();
    let desc = circuit.descriptor();
    parts.push(&desc);
    Ok(Ciphertext { key_tag: pk.tag, nonce: sha256(&parts), body })
}

pub fn refresh<R: Rng + ?Sized>(pk: &FhePublicKey, ct: &Ciphertext, rng: &mut R) -> Result<Ciphertext, FheError> {
    if ct.key_tag != pk.tag {
        return Err(FheError::KeyMismatch);
    }
    Ok(enc(pk, &ct.body, rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoolGate {
    Xor(usize, usize),
    And(usize, usize),
    Not(usize),
    Const(bool),
}

/// Straight-line boolean circuit. Wires 0..width are the input bits (MSB-first
/// unpacking of the single input); each gate appends one wire; `outputs` picks
/// the output wires.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoolCircuit {
    pub width: usize,
    pub gates: Vec<BoolGate>,
    pub outputs: Vec<usize>,
}

impl BoolCircuit {
    pub fn identity(width: usize) -> Self {
        BoolCircuit { width, gates: Vec::new(), outputs: (0..width).collect() }
    }

    pub fn xor_const(c: &[bool]) -> Self {
        let width = c.len();
        let mut gates = Vec::new();
        let mut outputs = Vec::new();
        for (i, &b) in c.iter().enumerate() {
            gates.push(BoolGate::Const(b));
            gates.push(BoolGate::Xor(i, width + gates.len() - 1));
            outputs.push(width + gates.len() - 1);
        }
        BoolCircuit { width, gates, outputs }
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.width];
        for g in &self.gates {
            let d = match *g {
                BoolGate::Xor(a, b) | BoolGate::And(a, b) => 1 + depth[a].max(depth[b]),
                BoolGate::Not(a) => 1 + depth[a],
                BoolGate::Const(_) => 0,
            };
            depth.push(d);
        }
        self.outputs.iter().map(|&o| depth[o]).max().unwrap_or(0)
    }

    pub fn eval_bits(&self, input: &[bool]) -> Result<Vec<bool>, String> {
        if input.len() != self.width {
            return Err(format!("expected {} input bits, got {}", self.width, input.len()));
        }
        let mut wires = input.to_vec();
        for (k, g) in self.gates.iter().enumerate() {
            let avail = self.width + k;
            let get = |i: usize| wires.get(i).copied().filter(|_| i < avail).ok_or_else(|| format!("gate {k} reads wire {i}"));
            let v = match *g {
                BoolGate::Xor(a, b) => get(a)? ^ get(b)?,
                BoolGate::And(a, b) => get(a)? & get(b)?,
                BoolGate::Not(a) => !get(a)?,
                BoolGate::Const(c) => c,
            };
            wires.push(v);
        }
        self.outputs.iter().map(|&o| wires.get(o).copied().ok_or_else(|| format!("output wire {o}"))).collect()
    }
}

impl FheCircuit for BoolCircuit {
    fn descriptor(&self) -> Vec<u8> {
        serde_json::to_vec(self).unwrap_or_default()
    }

    fn apply(&self, inputs: &[&[u8]]) -> Result<Vec<u8>, String> {
        let [input] = inputs else {
            return Err(format!("expected one input, got {}", inputs.len()));
        };
        let expected = self.width.div_ceil(8);
        if input.len() != expected {
            return Err(format!("expected {expected} bytes, got {}", input.len()));
        }
        let x = bits::unpack(input, self.width).ok_or("unpack failed")?;
        Ok(bits::pack(&self.eval_bits(&x)?))
    }
}
