//! Certificateless ring signatures over combined public keys.
//!
//! A manufactory publishes a vector `Y = (x_1·P, …, x_n·P)`. The private key
//! of identity `id` is `d = Σ h_i·x_i`, where `h_i` are the bits of `H0(id)`,
//! and anyone can compute the matching public key `E = Σ h_i·Y_i` from the
//! identity string alone. A ring signature is a list of ElGamal tuples
//! `⟨m, U, v⟩` satisfying `m·P = H1(U)·E + v·U`, one per ring member, whose
//! `m` values are chained by `w_{i+1} = h(msg, w_i ⊕ m_i)` into a closed
//! cycle. Every tuple but the signer's is a forgery computed without a
//! private key; the signer closes the cycle by signing the one value that
//! makes it consistent.

mod keys;
mod sign;
mod wire;

use std::fmt;
use std::sync::Arc;

use crate::group::{expand_digest, hash_to_scalar, identity_bits, Group};

pub use keys::{keygen, parse_id, setup, IdentityKey, ManufactoryKey, MasterKeyPair, Registry};
pub use sign::{
    forge_tuple, ring_sign, ring_sign_metered, ring_verify, ring_verify_metered, verify_tuple,
    RingSignature, RingTuple, VerifyError,
};

/// Output length of `H0`, and therefore the master key vector length.
pub const MASTER_KEY_LEN: usize = 256;

pub(crate) const TAG_H0: &[u8] = b"H0";
pub(crate) const TAG_H1: &[u8] = b"H1";
pub(crate) const TAG_RING: &[u8] = b"ring";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CrsError {
    #[error("malformed identity `{0}` (expected `manufactory:identity`)")]
    MalformedId(String),
    #[error("manufactory `{0}` is not registered")]
    UnknownManufactory(String),
    #[error("manufactory `{0}` is already registered")]
    DuplicateManufactory(String),
    #[error("identity `{0}` derives the zero key")]
    DegenerateKey(String),
    #[error("identity `{id}` does not belong to manufactory `{manufactory}`")]
    ManufactoryMismatch { id: String, manufactory: String },
    #[error("master key vector length {0} outside 1..=256")]
    VectorLength(usize),
    #[error("master secret component {0} is zero")]
    ZeroSecret(usize),
    #[error("ring is empty")]
    EmptyRing,
    #[error("ring position {0} does not hold the signer's identity")]
    SignerMismatch(usize),
}

/// The hash functions of the scheme.
///
/// [`StandardHashes`] is the production choice. The trait exists so tests
/// can substitute hand-computable stand-ins.
pub trait RingHashes<G: Group>: Send + Sync {
    /// `H0`: the first `n` bits of the identity digest.
    fn identity_bits(&self, id: &str, n: usize) -> Vec<bool>;
    /// `H1: 𝔾 → Z_q`.
    fn element_scalar(&self, group: &G, element: &G::Element) -> G::Scalar;
    /// The ring-equation hash `h(msg, input)`, `scalar_len` bytes wide.
    fn chain(&self, group: &G, msg: &[u8], input: &[u8]) -> Vec<u8>;
}

/// SHA-256 based hashes with domain tags `H0`, `H1` and `ring`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardHashes;

impl<G: Group> RingHashes<G> for StandardHashes {
    fn identity_bits(&self, id: &str, n: usize) -> Vec<bool> {
        identity_bits(TAG_H0, id.as_bytes(), n)
    }

    fn element_scalar(&self, group: &G, element: &G::Element) -> G::Scalar {
        hash_to_scalar(group, TAG_H1, &group.encode(element))
    }

    /// `digest("ring" ‖ u64be(len(msg)) ‖ msg ‖ input)` truncated to the
    /// scalar width.
    fn chain(&self, group: &G, msg: &[u8], input: &[u8]) -> Vec<u8> {
        let mut data = Vec::with_capacity(8 + msg.len() + input.len());
        data.extend_from_slice(&(msg.len() as u64).to_be_bytes());
        data.extend_from_slice(msg);
        data.extend_from_slice(input);
        expand_digest(TAG_RING, &data, group.scalar_len())
    }
}

/// Public system parameters: the group and the hash functions.
#[derive(Clone)]
pub struct CrsParams<G: Group> {
    pub group: G,
    hashes: Arc<dyn RingHashes<G>>,
}

impl<G: Group> CrsParams<G> {
    pub fn new(group: G) -> Self {
        Self::with_hashes(group, Arc::new(StandardHashes))
    }

    pub fn with_hashes(group: G, hashes: Arc<dyn RingHashes<G>>) -> Self {
        CrsParams { group, hashes }
    }

    pub fn hashes(&self) -> &dyn RingHashes<G> {
        &*self.hashes
    }
}

impl<G: Group> fmt::Debug for CrsParams<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CrsParams").field("group", &self.group).finish_non_exhaustive()
    }
}

pub(crate) fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}
