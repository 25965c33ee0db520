//! NIZK-for-NP interface and the attestation backend.
//!
//! The attestation backend is an ideal functionality: the CRS names a key held
//! inside the functionality, a proof is a MAC over the statement, and every
//! honest proof logs its witness so a trapdoor holder can extract it.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{hex32, sha256};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NizkError {
    #[error("witness does not satisfy the relation")]
    Refused,
    #[error("unknown CRS")]
    UnknownCrs,
    #[error("trapdoor does not match the CRS")]
    BadTrapdoor,
    #[error("simulation requires a programmable challenge hash")]
    NotProgrammable,
    #[error("invalid statement: {0}")]
    Statement(String),
}

/// Two-stage simulation: `sim_setup` emits the CRS with a trapdoor, then
/// `sim_prove` answers from the statement alone.
pub trait NizkBackend {
    type Statement;
    type Witness;
    type Crs: Clone;
    type Trapdoor;
    type Proof: Clone;

    fn setup<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Crs;
    fn prove<R: Rng + ?Sized>(
        &self,
        crs: &Self::Crs,
        stmt: &Self::Statement,
        witness: &Self::Witness,
        rng: &mut R,
    ) -> Result<Self::Proof, NizkError>;
    fn verify(&self, crs: &Self::Crs, stmt: &Self::Statement, proof: &Self::Proof) -> bool;
    fn sim_setup<R: Rng + ?Sized>(&self, rng: &mut R) -> (Self::Crs, Self::Trapdoor);
    fn sim_prove<R: Rng + ?Sized>(
        &self,
        crs: &Self::Crs,
        td: &Self::Trapdoor,
        stmt: &Self::Statement,
        rng: &mut R,
    ) -> Result<Self::Proof, NizkError>;
}

/// An NP relation with canonical encodings.
pub trait Relation {
    type Statement;
    type Witness;

    fn holds(&self, stmt: &Self::Statement, witness: &Self::Witness) -> bool;
    fn statement_bytes(&self, stmt: &Self::Statement) -> Vec<u8>;
    fn witness_bytes(&self, witness: &Self::Witness) -> Vec<u8>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttestationCrs {
    #[serde(with = "hex32")]
    pub id: [u8; 32],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttestationTrapdoor {
    key: [u8; 32],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttestationProof {
    #[serde(with = "hex32")]
    pub tag: [u8; 32],
}

#[derive(Default, Debug)]
struct AttestationState {
    keys: HashMap<[u8; 32], [u8; 32]>,
    log: HashMap<([u8; 32], [u8; 32]), Vec<u8>>,
}

/// Attestation backend for relation `R`. Clones share the functionality state.
#[derive(Debug)]
pub struct Attestation<R> {
    pub relation: R,
    state: Arc<Mutex<AttestationState>>,
}

impl<R: Clone> Clone for Attestation<R> {
    fn clone(&self) -> Self {
        Attestation { relation: self.relation.clone(), state: Arc::clone(&self.state) }
    }
}

impl<R: Relation> Attestation<R> {
    pub fn new(relation: R) -> Self {
        Attestation { relation, state: Arc::default() }
    }

    fn key(&self, crs: &AttestationCrs) -> Option<[u8; 32]> {
        self.state.lock().expect("attestation state poisoned").keys.get(&crs.id).copied()
    }

    fn tag(key: &[u8; 32], stmt: &[u8]) -> [u8; 32] {
        sha256(&[b"attest", key, stmt])
    }

    fn register<G: Rng + ?Sized>(&self, rng: &mut G) -> (AttestationCrs, [u8; 32]) {
        let mut st = self.state.lock().expect("attestation state poisoned");
        loop {
            let id: [u8; 32] = rng.gen();
            let key: [u8; 32] = rng.gen();
            // The same coins reproduce the same CRS.
            if *st.keys.entry(id).or_insert(key) == key {
                return (AttestationCrs { id }, key);
            }
        }
    }

    /// Witness logged for an honestly generated proof; needs the trapdoor.
    pub fn extract(&self, crs: &AttestationCrs, td: &AttestationTrapdoor, proof: &AttestationProof) -> Result<Option<Vec<u8>>, NizkError> {
        let st = self.state.lock().expect("attestation state poisoned");
        match st.keys.get(&crs.id) {
            None => Err(NizkError::UnknownCrs),
            Some(k) if *k != td.key => Err(NizkError::BadTrapdoor),
            Some(_) => Ok(st.log.get(&(crs.id, proof.tag)).cloned()),
        }
    }
}

impl<R: Relation> NizkBackend for Attestation<R> {
    type Statement = R::Statement;
    type Witness = R::Witness;
    type Crs = AttestationCrs;
    type Trapdoor = AttestationTrapdoor;
    type Proof = AttestationProof;

    fn setup<G: Rng + ?Sized>(&self, rng: &mut G) -> AttestationCrs {
        self.register(rng).0
    }

    fn prove<G: Rng + ?Sized>(&self, crs: &AttestationCrs, stmt: &R::Statement, witness: &R::Witness, _rng: &mut G) -> Result<AttestationProof, NizkError> {
        let key = self.key(crs).ok_or(NizkError::UnknownCrs)?;
        if !self.relation.holds(stmt, witness) {
            return Err(NizkError::Refused);
        }
        let tag = Self::tag(&key, &self.relation.statement_bytes(stmt));
        let wb = self.relation.witness_bytes(witness);
        self.state.lock().expect("attestation state poisoned").log.insert((crs.id, tag), wb);
        Ok(AttestationProof { tag })
    }

    fn verify(&self, crs: &AttestationCrs, stmt: &R::Statement, proof: &AttestationProof) -> bool {
        self.key(crs).is_some_and(|key| Self::tag(&key, &self.relation.statement_bytes(stmt)) == proof.tag)
    }

    fn sim_setup<G: Rng + ?Sized>(&self, rng: &mut G) -> (AttestationCrs, AttestationTrapdoor) {
        let (crs, key) = self.register(rng);
        (crs, AttestationTrapdoor { key })
    }

    fn sim_prove<G: Rng + ?Sized>(&self, crs: &AttestationCrs, td: &AttestationTrapdoor, stmt: &R::Statement, _rng: &mut G) -> Result<AttestationProof, NizkError> {
        match self.key(crs) {
            None => Err(NizkError::UnknownCrs),
            Some(k) if k != td.key => Err(NizkError::BadTrapdoor),
            Some(k) => Ok(AttestationProof { tag: Self::tag(&k, &self.relation.statement_bytes(stmt)) }),
        }
    }
}
