//! L2 state Merkle tree, state roots and the attention puzzle.
//!
//! Leaves are hashed individually, padded with the all-zero digest up to the
//! next power of two and combined pairwise with [`hash_pair`]. The attention
//! puzzle asks for the two direct children of the root.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest as _, Sha256};
use sha3::Keccak256;

use crate::error::{Error, Result};

/// A 256-bit digest. Displayed as lowercase hex without prefix.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0; 32]);

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let array: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::DigestLength(bytes.len()))?;
        Ok(Digest(array))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Big-endian integer in the 8 bytes starting at `offset`.
    pub fn window_u64(&self, offset: usize) -> u64 {
        let mut w = [0u8; 8];
        w.copy_from_slice(&self.0[offset..offset + 8]);
        u64::from_be_bytes(w)
    }

    pub fn flip_bit(&self, bit: usize) -> Digest {
        let mut out = *self;
        out.0[bit / 8] ^= 1 << (bit % 8);
        out
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl FromStr for Digest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|_| Error::DigestLength(s.len() / 2))?;
        Digest::from_slice(&bytes)
    }
}

/// 256-bit hash used for leaves and interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum HashAlgorithm {
    #[default]
    Sha256,
    Keccak256,
}

impl HashAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            HashAlgorithm::Sha256 => "sha256",
            HashAlgorithm::Keccak256 => "keccak256",
        }
    }

    /// Digest of the concatenation of `parts`.
    pub fn digest_parts(self, parts: &[&[u8]]) -> Digest {
        match self {
            HashAlgorithm::Sha256 => {
                let mut h = Sha256::new();
                parts.iter().for_each(|p| h.update(p));
                Digest(h.finalize().into())
            }
            HashAlgorithm::Keccak256 => {
                let mut h = Keccak256::new();
                parts.iter().for_each(|p| h.update(p));
                Digest(h.finalize().into())
            }
        }
    }

    pub fn digest(self, data: &[u8]) -> Digest {
        self.digest_parts(&[data])
    }

    pub fn hash_pair(self, left: &Digest, right: &Digest) -> Digest {
        self.digest_parts(&[&left.0, &right.0])
    }
}

impl fmt::Display for HashAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HashAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sha256" => Ok(HashAlgorithm::Sha256),
            "keccak256" => Ok(HashAlgorithm::Keccak256),
            other => Err(Error::param("hash", format!("unknown hash `{other}`"))),
        }
    }
}

/// SHA-256 of `left || right`.
pub fn hash_pair(left: &Digest, right: &Digest) -> Digest {
    HashAlgorithm::Sha256.hash_pair(left, right)
}

/// [`hash_pair`] over raw byte slices, rejecting anything but 32 bytes.
pub fn hash_pair_bytes(left: &[u8], right: &[u8]) -> Result<Digest> {
    Ok(hash_pair(
        &Digest::from_slice(left)?,
        &Digest::from_slice(right)?,
    ))
}

/// Opaque leaf encodings of an L2 state at some block height.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct L2State {
    pub leaves: Vec<Vec<u8>>,
    pub l2_block_num: u64,
}

impl L2State {
    pub fn new(leaves: Vec<Vec<u8>>, l2_block_num: u64) -> Result<Self> {
        if leaves.len() < 2 {
            return Err(Error::TooFewLeaves(leaves.len()));
        }
        Ok(L2State {
            leaves,
            l2_block_num,
        })
    }

    /// Pseudorandom state with `n_leaves` leaves of `leaf_len` bytes each.
    pub fn synthetic<R: Rng + ?Sized>(
        rng: &mut R,
        n_leaves: usize,
        leaf_len: usize,
        l2_block_num: u64,
    ) -> Result<Self> {
        let leaves = (0..n_leaves)
            .map(|_| {
                let mut leaf = vec![0u8; leaf_len];
                rng.fill(leaf.as_mut_slice());
                leaf
            })
            .collect();
        Self::new(leaves, l2_block_num)
    }
}

/// Root of the state tree together with its two direct children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateCommitment {
    pub sigma: Digest,
    pub left: Digest,
    pub right: Digest,
    pub l2_block_num: u64,
}

impl StateCommitment {
    /// The children an attentive validator would submit for this root.
    pub fn solution(&self) -> AttentionSolution {
        AttentionSolution {
            left: self.left,
            right: self.right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionSolution {
    pub left: Digest,
    pub right: Digest,
}

pub fn build_commitment(state: &L2State) -> Result<StateCommitment> {
    build_commitment_with(state, HashAlgorithm::Sha256)
}

pub fn build_commitment_with(state: &L2State, algo: HashAlgorithm) -> Result<StateCommitment> {
    if state.leaves.len() < 2 {
        return Err(Error::TooFewLeaves(state.leaves.len()));
    }
    let width = state.leaves.len().next_power_of_two();
    let mut level: Vec<Digest> = state.leaves.iter().map(|leaf| algo.digest(leaf)).collect();
    level.resize(width, Digest::ZERO);

    while level.len() > 2 {
        level = level
            .chunks_exact(2)
            .map(|pair| algo.hash_pair(&pair[0], &pair[1]))
            .collect();
    }
    let (left, right) = (level[0], level[1]);
    Ok(StateCommitment {
        sigma: algo.hash_pair(&left, &right),
        left,
        right,
        l2_block_num: state.l2_block_num,
    })
}

/// Copy of `state` with one pseudorandomly chosen bit flipped.
///
/// Only non-empty leaves are eligible; if every leaf is empty a byte is
/// appended to one of them instead.
pub fn corrupt_state(state: &L2State, rng_seed: u64) -> L2State {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut corrupted = state.clone();
    let candidates: Vec<usize> = (0..state.leaves.len())
        .filter(|&i| !state.leaves[i].is_empty())
        .collect();
    if candidates.is_empty() {
        let i = rng.random_range(0..corrupted.leaves.len());
        corrupted.leaves[i].push(rng.random_range(1..=u8::MAX));
    } else {
        let leaf = &mut corrupted.leaves[candidates[rng.random_range(0..candidates.len())]];
        let byte = rng.random_range(0..leaf.len());
        leaf[byte] ^= 1 << rng.random_range(0..8);
    }
    corrupted
}

/// Commitment to a corrupted copy of `state`; it is a well-formed tree over
/// wrong data.
pub fn corrupt_commitment(state: &L2State, rng_seed: u64) -> Result<StateCommitment> {
    corrupt_commitment_with(state, rng_seed, HashAlgorithm::Sha256)
}

pub fn corrupt_commitment_with(
    state: &L2State,
    rng_seed: u64,
    algo: HashAlgorithm,
) -> Result<StateCommitment> {
    build_commitment_with(&corrupt_state(state, rng_seed), algo)
}

pub fn verify_solution(recorded_sigma: &Digest, sol: &AttentionSolution) -> bool {
    verify_solution_with(recorded_sigma, sol, HashAlgorithm::Sha256)
}

pub fn verify_solution_with(
    recorded_sigma: &Digest,
    sol: &AttentionSolution,
    algo: HashAlgorithm,
) -> bool {
    algo.hash_pair(&sol.left, &sol.right) == *recorded_sigma
}
