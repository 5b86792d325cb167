use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use avcs::group::{Group, GroupError, GroupId};
use num_bigint::BigUint;
use rand::RngCore;

/// A group that counts every scalar multiplication performed through it,
/// including those inside the HSM and the receive pipeline. Clones share the
/// counter.
#[derive(Debug, Clone)]
pub struct Metered<G: Group> {
    inner: G,
    muls: Arc<AtomicU64>,
}

impl<G: Group> Metered<G> {
    pub fn new(inner: G) -> Self {
        Metered { inner, muls: Arc::new(AtomicU64::new(0)) }
    }

    pub fn scalar_muls(&self) -> u64 {
        self.muls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.muls.store(0, Ordering::Relaxed);
    }
}

impl<G: Group> Group for Metered<G> {
    type Scalar = G::Scalar;
    type Element = G::Element;

    fn id(&self) -> GroupId {
        self.inner.id()
    }
    fn order(&self) -> BigUint {
        self.inner.order()
    }
    fn scalar_len(&self) -> usize {
        self.inner.scalar_len()
    }
    fn element_len(&self) -> usize {
        self.inner.element_len()
    }
    fn generator(&self) -> Self::Element {
        self.inner.generator()
    }
    fn identity(&self) -> Self::Element {
        self.inner.identity()
    }
    fn add(&self, a: &Self::Element, b: &Self::Element) -> Self::Element {
        self.inner.add(a, b)
    }
    fn mul(&self, k: &Self::Scalar, a: &Self::Element) -> Self::Element {
        self.muls.fetch_add(1, Ordering::Relaxed);
        self.inner.mul(k, a)
    }
    fn scalar_zero(&self) -> Self::Scalar {
        self.inner.scalar_zero()
    }
    fn scalar_from_u64(&self, v: u64) -> Self::Scalar {
        self.inner.scalar_from_u64(v)
    }
    fn scalar_add(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar {
        self.inner.scalar_add(a, b)
    }
    fn scalar_sub(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar {
        self.inner.scalar_sub(a, b)
    }
    fn scalar_mul(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar {
        self.inner.scalar_mul(a, b)
    }
    fn scalar_neg(&self, a: &Self::Scalar) -> Self::Scalar {
        self.inner.scalar_neg(a)
    }
    fn scalar_invert(&self, a: &Self::Scalar) -> Option<Self::Scalar> {
        self.inner.scalar_invert(a)
    }
    fn reduce_bytes(&self, bytes: &[u8]) -> Self::Scalar {
        self.inner.reduce_bytes(bytes)
    }
    fn scalar_to_bytes(&self, s: &Self::Scalar) -> Vec<u8> {
        self.inner.scalar_to_bytes(s)
    }
    fn scalar_from_bytes(&self, bytes: &[u8]) -> Option<Self::Scalar> {
        self.inner.scalar_from_bytes(bytes)
    }
    fn encode(&self, e: &Self::Element) -> Vec<u8> {
        self.inner.encode(e)
    }
    fn decode(&self, bytes: &[u8]) -> Option<Self::Element> {
        self.inner.decode(bytes)
    }
    fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar {
        self.inner.random_nonzero_scalar(rng)
    }
    fn hash_to_element(&self, tag: &[u8], data: &[u8]) -> Result<Self::Element, GroupError> {
        self.inner.hash_to_element(tag, data)
    }
}
