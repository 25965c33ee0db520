//! Acceptance predicates R_r, Q and the hybrid variants R'_r, Q'.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::authcode::{pad_pushthrough, split_blocks, trap_amplitude, unpermute, AuthError, EncodingKey, SteaneCode, Trap};
use crate::bits;
use crate::hamiltonian::{extended_term, ChallengeKind, ChallengeTerm, CliffordHamiltonian, HamiltonianError};
use crate::quantum::CliffordOp;

/// Trap amplitudes below this count as zero.
pub const TRAP_ZERO: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PredicateError {
    #[error("width mismatch for {what}: expected {expected}, got {got}")]
    Width { what: &'static str, expected: usize, got: usize },
    #[error("challenge {r} out of range 1..={max}")]
    ChallengeOutOfRange { r: usize, max: usize },
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Auth(#[from] AuthError),
}

/// Public data every predicate needs: the Hamiltonian, the instance and the code.
#[derive(Clone, Copy, Debug)]
pub struct PredicateContext<'a> {
    pub ham: &'a CliffordHamiltonian,
    pub x: &'a [bool],
    pub code: SteaneCode,
}

impl<'a> PredicateContext<'a> {
    pub fn num_terms(&self) -> usize {
        self.ham.num_terms()
    }

    pub fn num_logical(&self) -> usize {
        self.ham.num_qubits()
    }

    pub fn term(&self, r: usize) -> Result<ChallengeTerm, PredicateError> {
        Ok(extended_term(self.ham, r, self.x)?)
    }

    /// Width of the teleport record, 4Np.
    pub fn teleport_width(&self) -> usize {
        4 * self.code.block_len() * self.num_logical()
    }
}

/// Arguments of Q(t, π, a, b, r, z, d).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateInput {
    pub key: EncodingKey,
    pub r: usize,
    #[serde(with = "bits::hex_bits")]
    pub z: Vec<bool>,
    #[serde(with = "bits::hex_bits")]
    pub d: Vec<bool>,
}

fn check_u(ctx: &PredicateContext, k: usize, u: &[bool]) -> Result<(), PredicateError> {
    let expected = 2 * ctx.code.block_len() * k;
    if u.len() != expected {
        return Err(PredicateError::Width { what: "u", expected, got: u.len() });
    }
    Ok(())
}

/// Every trap position overlaps the measured string: ⟨q_j| C |t_j⟩ ≠ 0.
fn traps_consistent(c: &CliffordOp, traps: &[&[Trap]], q: &[Vec<bool>]) -> bool {
    let n = q[0].len();
    (0..n).all(|j| {
        let t: Vec<Trap> = traps.iter().map(|row| row[j]).collect();
        let qj: Vec<bool> = q.iter().map(|row| row[j]).collect();
        trap_amplitude(c, &t, &qj).norm() > TRAP_ZERO
    })
}

struct Blocks {
    p: Vec<Vec<bool>>,
    q: Vec<Vec<bool>>,
}

fn split(u: &[bool], key: &EncodingKey, k: usize) -> Blocks {
    let (p, q) = split_blocks(u, key.block, k).into_iter().map(|blk| unpermute(blk, &key.perm)).unzip();
    Blocks { p, q }
}

/// R_r(t, π, u) on the already un-padded string u.
pub fn eval_r(ctx: &PredicateContext, r: usize, key: &EncodingKey, u: &[bool]) -> Result<bool, PredicateError> {
    let term = ctx.term(r)?;
    let k = term.support.len();
    check_u(ctx, k, u)?;
    let blocks = split(u, key, k);
    let traps: Vec<&[Trap]> = term.support.iter().map(|&i| key.traps[i].as_slice()).collect();
    let values: Vec<Option<bool>> = blocks.p.iter().map(|p| ctx.code.contains(p)).collect();
    match term.kind {
        ChallengeKind::Hamiltonian => {
            let cond1 = values.iter().all(Option::is_some) && values.contains(&Some(true));
            let c_phys = ctx.code.physical_for(&term.clifford);
            Ok(cond1 && traps_consistent(&c_phys, &traps, &blocks.q))
        }
        ChallengeKind::InstanceCheck => {
            // Block 0 is clock_1, then the instance blocks.
            let clock_moved = values[0] == Some(true);
            let instance_ok = values[1..].iter().zip(ctx.x).all(|(v, &xi)| *v == Some(xi));
            Ok((clock_moved || instance_ok) && traps_consistent(&CliffordOp::identity(k), &traps, &blocks.q))
        }
    }
}

/// Per-block (a', b') slices of d = (x ‖ z), contiguous 2N-bit blocks by logical index.
fn slice_d(ctx: &PredicateContext, d: &[bool], support: &[usize]) -> Result<(Vec<Vec<bool>>, Vec<Vec<bool>>), PredicateError> {
    let expected = ctx.teleport_width();
    if d.len() != expected {
        return Err(PredicateError::Width { what: "d", expected, got: d.len() });
    }
    let w = expected / 2;
    let bw = 2 * ctx.code.block_len();
    let ap = support.iter().map(|&i| d[bw * i..bw * (i + 1)].to_vec()).collect();
    let bp = support.iter().map(|&i| d[w + bw * i..w + bw * (i + 1)].to_vec()).collect();
    Ok((ap, bp))
}

fn pads(key: &EncodingKey, support: &[usize]) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
    (
        support.iter().map(|&i| key.a[key.block_range(i)].to_vec()).collect(),
        support.iter().map(|&i| key.b[key.block_range(i)].to_vec()).collect(),
    )
}

fn check_key(ctx: &PredicateContext, key: &EncodingKey) -> Result<(), PredicateError> {
    key.validate()?;
    if key.num_logical() != ctx.num_logical() || key.block != ctx.code.block_len() {
        return Err(PredicateError::Width { what: "key", expected: ctx.num_logical(), got: key.num_logical() });
    }
    Ok(())
}

/// Q(t, π, a, b, r, z, d) = R_r(t, π, z ⊕ e) with e from pushing (a ⊕ a', b ⊕ b') through C_r.
pub fn eval_q(ctx: &PredicateContext, input: &PredicateInput) -> Result<bool, PredicateError> {
    check_key(ctx, &input.key)?;
    let term = ctx.term(input.r)?;
    check_u(ctx, term.support.len(), &input.z)?;
    let (ap, bp) = slice_d(ctx, &input.d, &term.support)?;
    let (a, b) = pads(&input.key, &term.support);
    let c_phys = ctx.code.physical_for(&term.clifford);
    let push = pad_pushthrough(&a, &b, Some((&ap, &bp)), &c_phys)?;
    let u = bits::xor(&input.z, &push.e.concat());
    eval_r(ctx, input.r, &input.key, &u)
}

/// BJSW's Q̃ for r ≤ m: e from (a, b) alone.
pub fn eval_q_tilde(ctx: &PredicateContext, key: &EncodingKey, r: usize, z: &[bool]) -> Result<bool, PredicateError> {
    check_key(ctx, key)?;
    let m = ctx.num_terms();
    if r == 0 || r > m {
        return Err(PredicateError::ChallengeOutOfRange { r, max: m });
    }
    let term = ctx.term(r)?;
    check_u(ctx, term.support.len(), z)?;
    let (a, b) = pads(key, &term.support);
    let push = pad_pushthrough(&a, &b, None, &ctx.code.physical_for(&term.clifford))?;
    eval_r(ctx, r, key, &bits::xor(z, &push.e.concat()))
}

/// R'_r. For r = m+i only instance bit i is checked.
pub fn eval_r_prime(ctx: &PredicateContext, r: usize, key: &EncodingKey, u: &[bool]) -> Result<bool, PredicateError> {
    let m = ctx.num_terms();
    let n = ctx.x.len();
    if r == 0 || r > m + n {
        return Err(PredicateError::ChallengeOutOfRange { r, max: m + n });
    }
    if r <= m {
        return eval_r(ctx, r, key, u);
    }
    let i = r - m - 1;
    let term = ctx.term(m + 1)?;
    let k = term.support.len();
    check_u(ctx, k, u)?;
    let blocks = split(u, key, k);
    let traps: Vec<&[Trap]> = term.support.iter().map(|&q| key.traps[q].as_slice()).collect();
    let clock_moved = ctx.code.contains(&blocks.p[0]) == Some(true);
    let bit_ok = ctx.code.contains(&blocks.p[1 + i]) == Some(ctx.x[i]);
    Ok((clock_moved || bit_ok) && traps_consistent(&CliffordOp::identity(k), &traps, &blocks.q))
}

/// Q'(t, π, a, b, r, z) for r ∈ [m+n].
pub fn eval_q_prime(ctx: &PredicateContext, key: &EncodingKey, r: usize, z: &[bool]) -> Result<bool, PredicateError> {
    let m = ctx.num_terms();
    let n = ctx.x.len();
    if r == 0 || r > m + n {
        return Err(PredicateError::ChallengeOutOfRange { r, max: m + n });
    }
    if r <= m {
        return eval_q_tilde(ctx, key, r, z);
    }
    check_key(ctx, key)?;
    let term = ctx.term(m + 1)?;
    check_u(ctx, term.support.len(), z)?;
    let (a, _) = pads(key, &term.support);
    eval_r_prime(ctx, r, key, &bits::xor(z, &a.concat()))
}
