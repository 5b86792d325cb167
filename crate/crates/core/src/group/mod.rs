//! Prime-order additive groups.
//!
//! Everything above this module is written against the [`Group`] trait so the
//! same code runs over the NIST curves and over [`Toy`], a small integer group
//! `Z_q` with generator `1` that makes brute-force checking possible.

mod curves;
mod hash;
mod toy;

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use curves::{P192, P256};
pub use hash::{expand_digest, hash_to_group, hash_to_scalar, identity_bits};
pub use toy::{Toy, ToyElement, ToyScalar};

/// Errors raised by group construction and hashing.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("toy group order {0} is not a prime >= 3")]
    NotPrime(u64),
    #[error("hash-to-group gave up after {0} candidates")]
    HashToGroupExhausted(u32),
    #[error("unknown curve identifier `{0}`")]
    UnknownCurve(String),
}

/// Identifies a group instantiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum GroupId {
    P192,
    P256,
    Toy(u64),
}

impl GroupId {
    /// The Mersenne prime 2^61 - 1: large enough that random collisions never
    /// show up in tests, small enough for `u64` arithmetic.
    pub const TOY61: GroupId = GroupId::Toy(TOY61_ORDER);
}

const TOY61_ORDER: u64 = (1 << 61) - 1;

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupId::P192 => f.write_str("p192"),
            GroupId::P256 => f.write_str("p256"),
            GroupId::Toy(q) if *q == TOY61_ORDER => f.write_str("toy"),
            GroupId::Toy(q) => write!(f, "toy:{q}"),
        }
    }
}

impl FromStr for GroupId {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p192" | "secp192r1" => Ok(GroupId::P192),
            "p256" | "secp256r1" => Ok(GroupId::P256),
            "toy" => Ok(GroupId::TOY61),
            other => other
                .strip_prefix("toy:")
                .and_then(|q| q.parse().ok())
                .map(GroupId::Toy)
                .ok_or_else(|| GroupError::UnknownCurve(s.to_string())),
        }
    }
}

impl From<GroupId> for String {
    fn from(id: GroupId) -> Self {
        id.to_string()
    }
}

impl TryFrom<String> for GroupId {
    type Error = GroupError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A cyclic group of prime order `q` written additively, together with its
/// scalar field `Z_q`.
///
/// Encodings are fixed width: scalars are `scalar_len()` big-endian bytes and
/// elements are `element_len()` bytes. All wire formats in this crate are
/// built from these two encodings.
pub trait Group: Clone + fmt::Debug + Send + Sync + 'static {
    type Scalar: Copy + Eq + fmt::Debug + Send + Sync + 'static;
    type Element: Copy + Eq + fmt::Debug + Send + Sync + 'static;

    fn id(&self) -> GroupId;
    /// The group order `q`.
    fn order(&self) -> BigUint;
    /// `ceil(bitlen(q) / 8)`.
    fn scalar_len(&self) -> usize;
    fn element_len(&self) -> usize;

    fn generator(&self) -> Self::Element;
    fn identity(&self) -> Self::Element;
    fn add(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    /// Raw scalar multiplication. Callers that need operation counts go
    /// through [`scalar_mul`] instead.
    fn mul(&self, k: &Self::Scalar, a: &Self::Element) -> Self::Element;

    fn scalar_zero(&self) -> Self::Scalar;
    fn scalar_from_u64(&self, v: u64) -> Self::Scalar;
    fn scalar_add(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_sub(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_mul(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn scalar_neg(&self, a: &Self::Scalar) -> Self::Scalar;
    fn scalar_invert(&self, a: &Self::Scalar) -> Option<Self::Scalar>;

    /// Interprets `bytes` as a big-endian integer of any length and reduces
    /// it modulo `q`.
    fn reduce_bytes(&self, bytes: &[u8]) -> Self::Scalar;
    fn scalar_to_bytes(&self, s: &Self::Scalar) -> Vec<u8>;
    /// Parses a canonical (`< q`, exact width) scalar encoding.
    fn scalar_from_bytes(&self, bytes: &[u8]) -> Option<Self::Scalar>;

    fn encode(&self, e: &Self::Element) -> Vec<u8>;
    fn decode(&self, bytes: &[u8]) -> Option<Self::Element>;

    /// Uniform sample from `[1, q)`.
    fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar;

    /// Deterministic map from a domain tag and data into the group, never
    /// returning the identity. See [`hash_to_group`].
    fn hash_to_element(&self, tag: &[u8], data: &[u8]) -> Result<Self::Element, GroupError>;

    fn is_zero(&self, s: &Self::Scalar) -> bool {
        *s == self.scalar_zero()
    }

    fn is_identity(&self, e: &Self::Element) -> bool {
        *e == self.identity()
    }
}

/// Per-context operation counter.
///
/// Counting is opt-in: only calls that are handed a meter are counted, and a
/// meter lives exactly as long as the measurement that created it.
#[derive(Debug, Default)]
pub struct OpMeter {
    scalar_muls: Cell<u64>,
    extractions: Cell<u64>,
}

impl OpMeter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of scalar multiplications performed through this meter.
    pub fn scalar_muls(&self) -> u64 {
        self.scalar_muls.get()
    }

    /// Number of identity public-key extractions (point subset sums).
    pub fn extractions(&self) -> u64 {
        self.extractions.get()
    }

    pub(crate) fn record_extraction(&self) {
        self.extractions.set(self.extractions.get() + 1);
    }

    pub fn reset(&self) {
        self.scalar_muls.set(0);
        self.extractions.set(0);
    }
}

/// Computes `k·A`, counting the multiplication in `meter`.
pub fn scalar_mul<G: Group>(
    group: &G,
    k: &G::Scalar,
    a: &G::Element,
    meter: &OpMeter,
) -> G::Element {
    meter.scalar_muls.set(meter.scalar_muls.get() + 1);
    group.mul(k, a)
}

pub(crate) fn fixed_width_be(value: &BigUint, width: usize) -> Vec<u8> {
    let raw = value.to_bytes_be();
    let mut out = vec![0u8; width.saturating_sub(raw.len())];
    out.extend_from_slice(&raw[raw.len().saturating_sub(width)..]);
    out
}
