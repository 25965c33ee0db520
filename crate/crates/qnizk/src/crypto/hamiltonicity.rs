//! Fiat-Shamir Hamiltonicity NIZK over the lattice commitment.
//!
//! Each repetition commits to the adjacency matrix of a random n-cycle H.
//! Challenge 0 opens all of H, which must be a single Hamiltonian cycle.
//! Challenge 1 reveals φ with φ(G)'s cycle equal to H and opens every
//! non-edge of φ(G) in H as 0. Challenges come from a keyed hash of the
//! commitments; in simulation mode the hash is a programmable table.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::lattice::{bit_seed, com_commit, com_gen, verify_bit, ComParams, ComPublicKey, ComSecretKey, Commitment};
use super::nizk::{NizkBackend, NizkError};
use super::{hex32, sha256};

pub const DEFAULT_REPS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub adj: Vec<Vec<bool>>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![vec![false; n]; n];
        for &(u, v) in edges {
            adj[u][v] = true;
            adj[v][u] = true;
        }
        Graph { adj }
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &edges)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    fn is_square(&self) -> bool {
        self.adj.iter().all(|row| row.len() == self.len())
    }

    /// Whether `order` visits every vertex once along edges of the graph.
    pub fn is_hamiltonian_cycle(&self, order: &[usize]) -> bool {
        let n = self.len();
        if n < 3 || order.len() != n || !self.is_square() {
            return false;
        }
        let mut seen = vec![false; n];
        for &v in order {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return false;
            }
        }
        (0..n).all(|i| self.adj[order[i]][order[(i + 1) % n]])
    }

    /// Whether the graph itself is exactly one n-cycle.
    pub fn is_single_cycle(&self) -> bool {
        let n = self.len();
        if n < 3 || !self.is_square() {
            return false;
        }
        for u in 0..n {
            if self.adj[u][u] || (0..n).any(|v| self.adj[u][v] != self.adj[v][u]) || self.adj[u].iter().filter(|&&b| b).count() != 2 {
                return false;
            }
        }
        // Walk from 0; a single cycle returns after exactly n steps.
        let (mut prev, mut cur) = (usize::MAX, 0);
        for step in 1..=n {
            let next = (0..n).find(|&v| self.adj[cur][v] && v != prev).expect("degree two");
            prev = cur;
            cur = next;
            if cur == 0 {
                return step == n;
            }
        }
        false
    }

    fn flat(&self) -> Vec<bool> {
        self.adj.concat()
    }

    fn bytes(&self) -> Vec<u8> {
        let mut out = (self.len() as u64).to_be_bytes().to_vec();
        out.extend(self.flat().iter().map(|&b| b as u8));
        out
    }
}

fn cycle_graph(n: usize, order: &[usize]) -> Graph {
    let edges: Vec<_> = (0..n).map(|i| (order[i], order[(i + 1) % n])).collect();
    Graph::new(n, &edges)
}

/// Row-major positions (u, v) that are non-edges of φ(G).
fn non_edges(g: &Graph, phi: &[usize]) -> Vec<usize> {
    let n = g.len();
    let mut inv = vec![0; n];
    for (i, &p) in phi.iter().enumerate() {
        inv[p] = i;
    }
    (0..n * n).filter(|&pos| !g.adj[inv[pos / n]][inv[pos % n]]).collect()
}

fn is_permutation(phi: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    phi.len() == n && phi.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HamCrs {
    pub pk: ComPublicKey,
    #[serde(with = "hex32")]
    pub hash_key: [u8; 32],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Response {
    /// Challenge 0: every entry of H with its per-bit seed.
    Open { bits: Vec<bool>, seeds: Vec<[u8; 32]> },
    /// Challenge 1: φ and per-bit seeds of the non-edges of φ(G), row-major.
    Perm { phi: Vec<usize>, seeds: Vec<[u8; 32]> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HamProof {
    pub commitments: Vec<Commitment>,
    pub responses: Vec<Response>,
}

#[derive(Debug)]
pub struct ProgramTable {
    entries: HashMap<[u8; 32], Vec<bool>>,
    rng: ChaCha20Rng,
}

/// Challenge hash: keyed SHA-256, or a lazily sampled table that the simulator may program.
#[derive(Clone, Debug)]
pub enum ChallengeHash {
    Standard,
    Programmable(Arc<Mutex<ProgramTable>>),
}

#[derive(Clone, Debug)]
pub struct Hamiltonicity {
    pub reps: usize,
    pub params: ComParams,
    hash: ChallengeHash,
}

impl Hamiltonicity {
    pub fn new(reps: usize) -> Self {
        assert!((1..=256).contains(&reps));
        Hamiltonicity { reps, params: ComParams::toy(), hash: ChallengeHash::Standard }
    }

    pub fn programmable(reps: usize, seed: u64) -> Self {
        let table = ProgramTable { entries: HashMap::new(), rng: ChaCha20Rng::seed_from_u64(seed) };
        Hamiltonicity { hash: ChallengeHash::Programmable(Arc::new(Mutex::new(table))), ..Self::new(reps) }
    }

    fn digest(&self, g: &Graph, commitments: &[Commitment]) -> [u8; 32] {
        let digests: Vec<[u8; 32]> = commitments.iter().map(Commitment::digest).collect();
        let mut parts: Vec<&[u8]> = vec![b"ham-fs"];
        let gb = g.bytes();
        parts.push(&gb);
        parts.extend(digests.iter().map(|d| d.as_slice()));
        sha256(&parts)
    }

    fn challenge(&self, crs: &HamCrs, digest: &[u8; 32]) -> Vec<bool> {
        match &self.hash {
            ChallengeHash::Standard => {
                let h = sha256(&[b"ham-challenge", &crs.hash_key, digest]);
                (0..self.reps).map(|i| h[i / 8] >> (7 - i % 8) & 1 == 1).collect()
            }
            ChallengeHash::Programmable(table) => {
                let mut t = table.lock().expect("program table poisoned");
                let ProgramTable { entries, rng } = &mut *t;
                entries.entry(*digest).or_insert_with(|| (0..self.reps).map(|_| rng.gen()).collect()).clone()
            }
        }
    }

    fn program(&self, digest: [u8; 32], e: Vec<bool>) -> Result<bool, NizkError> {
        match &self.hash {
            ChallengeHash::Standard => Err(NizkError::NotProgrammable),
            ChallengeHash::Programmable(table) => {
                let mut t = table.lock().expect("program table poisoned");
                if t.entries.contains_key(&digest) {
                    return Ok(false);
                }
                t.entries.insert(digest, e);
                Ok(true)
            }
        }
    }

    fn check_statement(&self, g: &Graph) -> Result<(), NizkError> {
        if g.len() < 3 || !g.is_square() {
            return Err(NizkError::Statement("graph must be square with at least 3 vertices".into()));
        }
        Ok(())
    }

    fn verify_rep(&self, crs: &HamCrs, g: &Graph, com: &Commitment, e: bool, resp: &Response) -> bool {
        let n = g.len();
        if com.len() != n * n {
            return false;
        }
        match (e, resp) {
            (false, Response::Open { bits, seeds }) => {
                bits.len() == n * n
                    && seeds.len() == n * n
                    && (0..n * n).all(|p| verify_bit(&crs.pk, &com.bits[p], bits[p], &seeds[p]))
                    && Graph { adj: bits.chunks(n).map(<[bool]>::to_vec).collect() }.is_single_cycle()
            }
            (true, Response::Perm { phi, seeds }) => {
                if !is_permutation(phi, n) {
                    return false;
                }
                let positions = non_edges(g, phi);
                seeds.len() == positions.len()
                    && positions.iter().zip(seeds).all(|(&p, s)| verify_bit(&crs.pk, &com.bits[p], false, s))
            }
            _ => false,
        }
    }
}

/// Per-repetition randomness: the commitment seed.
fn open_all(h: &Graph, seed: &[u8; 32]) -> Response {
    let bits = h.flat();
    let seeds = (0..bits.len()).map(|p| bit_seed(seed, p)).collect();
    Response::Open { bits, seeds }
}

fn open_non_edges(g: &Graph, phi: Vec<usize>, seed: &[u8; 32]) -> Response {
    let seeds = non_edges(g, &phi).into_iter().map(|p| bit_seed(seed, p)).collect();
    Response::Perm { phi, seeds }
}

impl NizkBackend for Hamiltonicity {
    type Statement = Graph;
    type Witness = Vec<usize>;
    type Crs = HamCrs;
    type Trapdoor = ComSecretKey;
    type Proof = HamProof;

    fn setup<R: Rng + ?Sized>(&self, rng: &mut R) -> HamCrs {
        self.sim_setup(rng).0
    }

    fn prove<R: Rng + ?Sized>(&self, crs: &HamCrs, g: &Graph, cycle: &Vec<usize>, rng: &mut R) -> Result<HamProof, NizkError> {
        self.check_statement(g)?;
        if !g.is_hamiltonian_cycle(cycle) {
            return Err(NizkError::Refused);
        }
        let n = g.len();
        let mut orders = Vec::with_capacity(self.reps);
        let mut seeds = Vec::with_capacity(self.reps);
        let mut commitments = Vec::with_capacity(self.reps);
        for _ in 0..self.reps {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let seed: [u8; 32] = rng.gen();
            commitments.push(com_commit(&crs.pk, &cycle_graph(n, &order).flat(), &seed));
            orders.push(order);
            seeds.push(seed);
        }
        let e = self.challenge(crs, &self.digest(g, &commitments));
        let responses = (0..self.reps)
            .map(|i| {
                if e[i] {
                    // φ(cycle[j]) = order[j].
                    let mut phi = vec![0; n];
                    for j in 0..n {
                        phi[cycle[j]] = orders[i][j];
                    }
                    open_non_edges(g, phi, &seeds[i])
                } else {
                    open_all(&cycle_graph(n, &orders[i]), &seeds[i])
                }
            })
            .collect();
        Ok(HamProof { commitments, responses })
    }

    fn verify(&self, crs: &HamCrs, g: &Graph, proof: &HamProof) -> bool {
        if self.check_statement(g).is_err() || proof.commitments.len() != self.reps || proof.responses.len() != self.reps {
            return false;
        }
        let e = self.challenge(crs, &self.digest(g, &proof.commitments));
        (0..self.reps).all(|i| self.verify_rep(crs, g, &proof.commitments[i], e[i], &proof.responses[i]))
    }

    fn sim_setup<R: Rng + ?Sized>(&self, rng: &mut R) -> (HamCrs, ComSecretKey) {
        let kp = com_gen(self.params, rng).expect("toy parameters are valid");
        (HamCrs { pk: kp.pk, hash_key: rng.gen() }, kp.sk)
    }

    fn sim_prove<R: Rng + ?Sized>(&self, crs: &HamCrs, _td: &ComSecretKey, g: &Graph, rng: &mut R) -> Result<HamProof, NizkError> {
        self.check_statement(g)?;
        let n = g.len();
        loop {
            let e: Vec<bool> = (0..self.reps).map(|_| rng.gen()).collect();
            let mut commitments = Vec::with_capacity(self.reps);
            let mut responses = Vec::with_capacity(self.reps);
            for &ei in &e {
                let seed: [u8; 32] = rng.gen();
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(rng);
                if ei {
                    commitments.push(com_commit(&crs.pk, &vec![false; n * n], &seed));
                    responses.push(open_non_edges(g, order, &seed));
                } else {
                    let h = cycle_graph(n, &order);
                    commitments.push(com_commit(&crs.pk, &h.flat(), &seed));
                    responses.push(open_all(&h, &seed));
                }
            }
            if self.program(self.digest(g, &commitments), e)? {
                return Ok(HamProof { commitments, responses });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path4() -> Graph {
        Graph::new(4, &[(0, 1), (1, 2), (2, 3)])
    }

    /// Random structurally valid proof for `g`.
    fn random_proof<R: Rng>(g: &Graph, reps: usize, rng: &mut R) -> HamProof {
        let n = g.len();
        let pk_q = 3329u32;
        let commitments = (0..reps)
            .map(|_| Commitment {
                bits: (0..n * n)
                    .map(|_| crate::crypto::BitCommitment {
                        z1: (0..32).map(|_| rng.gen_range(0..pk_q) as u16).collect(),
                        z2: (0..8).map(|_| rng.gen_range(0..pk_q) as u16).collect(),
                        z3: rng.gen_range(0..pk_q) as u16,
                        z4: None,
                    })
                    .collect(),
            })
            .collect();
        let responses = (0..reps)
            .map(|_| {
                if rng.gen() {
                    Response::Open { bits: (0..n * n).map(|_| rng.gen()).collect(), seeds: (0..n * n).map(|_| rng.gen()).collect() }
                } else {
                    let mut phi: Vec<usize> = (0..n).collect();
                    phi.shuffle(rng);
                    let k = non_edges(g, &phi).len();
                    Response::Perm { phi, seeds: (0..k).map(|_| rng.gen()).collect() }
                }
            })
            .collect();
        HamProof { commitments, responses }
    }

    #[test]
    fn graph_checks() {
        assert!(Graph::cycle(5).is_single_cycle());
        assert!(Graph::cycle(5).is_hamiltonian_cycle(&[0, 1, 2, 3, 4]));
        assert!(!Graph::cycle(5).is_hamiltonian_cycle(&[0, 2, 1, 3, 4]));
        assert!(!path4().is_single_cycle());
        let two_triangles = Graph::new(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        assert!(!two_triangles.is_single_cycle());
    }

    #[test]
    fn honest_five_cycle_accepted() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let nizk = Hamiltonicity::new(DEFAULT_REPS);
        let crs = nizk.setup(&mut rng);
        let g = Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]);
        let proof = nizk.prove(&crs, &g, &vec![0, 1, 2, 3, 4], &mut rng).unwrap();
        assert!(nizk.verify(&crs, &g, &proof));
        let back: HamProof = serde_json::from_str(&serde_json::to_string(&proof).unwrap()).unwrap();
        assert!(nizk.verify(&crs, &g, &back));
    }

    #[test]
    fn flipped_opening_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let nizk = Hamiltonicity::new(DEFAULT_REPS);
        let crs = nizk.setup(&mut rng);
        let g = Graph::cycle(5);
        let mut proof = nizk.prove(&crs, &g, &vec![0, 1, 2, 3, 4], &mut rng).unwrap();
        match &mut proof.responses[0] {
            Response::Open { bits, .. } => bits[0] ^= true,
            Response::Perm { seeds, .. } => seeds[0][0] ^= 1,
        }
        assert!(!nizk.verify(&crs, &g, &proof));
    }

    #[test]
    fn non_hamiltonian_refused() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let nizk = Hamiltonicity::new(DEFAULT_REPS);
        let crs = nizk.setup(&mut rng);
        assert_eq!(nizk.prove(&crs, &path4(), &vec![0, 1, 2, 3], &mut rng), Err(NizkError::Refused));
    }

    #[test]
    fn random_forgeries_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let nizk = Hamiltonicity::new(DEFAULT_REPS);
        let crs = nizk.setup(&mut rng);
        let g = path4();
        let accepted = (0..1000).filter(|_| nizk.verify(&crs, &g, &random_proof(&g, DEFAULT_REPS, &mut rng))).count();
        assert_eq!(accepted, 0);
    }

    #[test]
    fn simulator_is_straight_line_and_accepted() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let nizk = Hamiltonicity::programmable(DEFAULT_REPS, 6);
        let (crs, td) = nizk.sim_setup(&mut rng);
        let g = Graph::cycle(5);
        for _ in 0..5 {
            let proof = nizk.sim_prove(&crs, &td, &g, &mut rng).unwrap();
            assert!(nizk.verify(&crs, &g, &proof));
        }
        // Honest proofs still verify against the programmable hash.
        let proof = nizk.prove(&crs, &g, &vec![4, 3, 2, 1, 0], &mut rng).unwrap();
        assert!(nizk.verify(&crs, &g, &proof));
        assert_eq!(Hamiltonicity::new(4).sim_prove(&crs, &td, &g, &mut rng), Err(NizkError::NotProgrammable));
    }
}
