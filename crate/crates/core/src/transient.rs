//! Short-lived message signing keys.
//!
//! Schnorr signatures over the same group as the ring scheme, with the nonce
//! derived deterministically from the secret key and the message.

use std::fmt;

use rand::RngCore;

use crate::codec::{DecodeError, Reader};
use crate::group::{hash_to_scalar, Group};

const TAG_NONCE: &[u8] = b"schnorr-nonce";
const TAG_CHALLENGE: &[u8] = b"schnorr";

#[derive(Clone)]
pub struct TransientKey<G: Group> {
    secret: G::Scalar,
    public: G::Element,
}

impl<G: Group> TransientKey<G> {
    pub fn generate<R: RngCore + ?Sized>(group: &G, rng: &mut R) -> Self {
        let secret = group.random_nonzero_scalar(rng);
        TransientKey { secret, public: group.mul(&secret, &group.generator()) }
    }

    pub fn public(&self) -> &G::Element {
        &self.public
    }

    pub fn sign(&self, group: &G, msg: &[u8]) -> TransientSignature<G> {
        let mut seed = group.scalar_to_bytes(&self.secret);
        seed.extend_from_slice(msg);
        let mut k = hash_to_scalar(group, TAG_NONCE, &seed);
        if group.is_zero(&k) {
            k = group.scalar_from_u64(1);
        }
        let commitment = group.mul(&k, &group.generator());
        let challenge = challenge(group, &commitment, &self.public, msg);
        let response = group.scalar_add(&k, &group.scalar_mul(&challenge, &self.secret));
        TransientSignature { challenge, response }
    }
}

impl<G: Group> fmt::Debug for TransientKey<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransientKey").field("public", &self.public).finish_non_exhaustive()
    }
}

/// `(c, s)` with `c = H(s·P - c·pk ‖ pk ‖ msg)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransientSignature<G: Group> {
    pub challenge: G::Scalar,
    pub response: G::Scalar,
}

impl<G: Group> TransientSignature<G> {
    pub fn encoded_len(group: &G) -> usize {
        2 * group.scalar_len()
    }

    pub fn write_to(&self, group: &G, out: &mut Vec<u8>) {
        out.extend_from_slice(&group.scalar_to_bytes(&self.challenge));
        out.extend_from_slice(&group.scalar_to_bytes(&self.response));
    }

    pub(crate) fn read_from(group: &G, reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(TransientSignature { challenge: reader.scalar(group)?, response: reader.scalar(group)? })
    }

    pub fn verify(&self, group: &G, public: &G::Element, msg: &[u8]) -> bool {
        let commitment = group.add(
            &group.mul(&self.response, &group.generator()),
            &group.mul(&group.scalar_neg(&self.challenge), public),
        );
        challenge(group, &commitment, public, msg) == self.challenge
    }
}

fn challenge<G: Group>(group: &G, commitment: &G::Element, public: &G::Element, msg: &[u8]) -> G::Scalar {
    let mut data = group.encode(commitment);
    data.extend_from_slice(&group.encode(public));
    data.extend_from_slice(msg);
    hash_to_scalar(group, TAG_CHALLENGE, &data)
}
