use num_bigint::BigUint;
use rand::{Rng, RngCore};

use super::{expand_digest, Group, GroupError, GroupId};

/// The additive group `Z_q` with generator `1`.
///
/// Discrete logarithms are trivial here, so this group is only useful for
/// checking algebra against hand computation and brute force.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Toy {
    q: u64,
    len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToyScalar(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToyElement(u64);

impl ToyScalar {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl ToyElement {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl Toy {
    pub fn new(q: u64) -> Result<Self, GroupError> {
        if q < 3 || !is_prime(q) {
            return Err(GroupError::NotPrime(q));
        }
        let bits = 64 - q.leading_zeros() as usize;
        Ok(Toy { q, len: bits.div_ceil(8) })
    }

    pub fn from_id(id: GroupId) -> Result<Self, GroupError> {
        match id {
            GroupId::Toy(q) => Self::new(q),
            other => Err(GroupError::UnknownCurve(other.to_string())),
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Scalar with value `v mod q`.
    pub fn scalar(&self, v: u64) -> ToyScalar {
        ToyScalar(v % self.q)
    }

    /// Element with value `v mod q`.
    pub fn element(&self, v: u64) -> ToyElement {
        ToyElement(v % self.q)
    }

    fn mulmod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    fn addmod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.q as u128) as u64
    }

    fn powmod(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mulmod(acc, base);
            }
            base = self.mulmod(base, base);
            exp >>= 1;
        }
        acc
    }

    fn encode_u64(&self, v: u64) -> Vec<u8> {
        v.to_be_bytes()[8 - self.len..].to_vec()
    }

    fn decode_u64(&self, bytes: &[u8]) -> Option<u64> {
        if bytes.len() != self.len {
            return None;
        }
        let v = bytes.iter().fold(0u64, |acc, b| (acc << 8) | *b as u64);
        (v < self.q).then_some(v)
    }
}

impl Group for Toy {
    type Scalar = ToyScalar;
    type Element = ToyElement;

    fn id(&self) -> GroupId {
        GroupId::Toy(self.q)
    }

    fn order(&self) -> BigUint {
        BigUint::from(self.q)
    }

    fn scalar_len(&self) -> usize {
        self.len
    }

    fn element_len(&self) -> usize {
        self.len
    }

    fn generator(&self) -> ToyElement {
        ToyElement(1)
    }

    fn identity(&self) -> ToyElement {
        ToyElement(0)
    }

    fn add(&self, a: &ToyElement, b: &ToyElement) -> ToyElement {
        ToyElement(self.addmod(a.0, b.0))
    }

    fn mul(&self, k: &ToyScalar, a: &ToyElement) -> ToyElement {
        ToyElement(self.mulmod(k.0, a.0))
    }

    fn scalar_zero(&self) -> ToyScalar {
        ToyScalar(0)
    }

    fn scalar_from_u64(&self, v: u64) -> ToyScalar {
        self.scalar(v)
    }

    fn scalar_add(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
        ToyScalar(self.addmod(a.0, b.0))
    }

    fn scalar_sub(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
        ToyScalar(self.addmod(a.0, self.q - b.0))
    }

    fn scalar_mul(&self, a: &ToyScalar, b: &ToyScalar) -> ToyScalar {
        ToyScalar(self.mulmod(a.0, b.0))
    }

    fn scalar_neg(&self, a: &ToyScalar) -> ToyScalar {
        ToyScalar((self.q - a.0) % self.q)
    }

    fn scalar_invert(&self, a: &ToyScalar) -> Option<ToyScalar> {
        // Fermat: a^(q-2) since q is prime.
        (a.0 != 0).then(|| ToyScalar(self.powmod(a.0, self.q - 2)))
    }

    fn reduce_bytes(&self, bytes: &[u8]) -> ToyScalar {
        let r = bytes
            .iter()
            .fold(0u128, |acc, b| ((acc << 8) | *b as u128) % self.q as u128);
        ToyScalar(r as u64)
    }

    fn scalar_to_bytes(&self, s: &ToyScalar) -> Vec<u8> {
        self.encode_u64(s.0)
    }

    fn scalar_from_bytes(&self, bytes: &[u8]) -> Option<ToyScalar> {
        self.decode_u64(bytes).map(ToyScalar)
    }

    fn encode(&self, e: &ToyElement) -> Vec<u8> {
        self.encode_u64(e.0)
    }

    fn decode(&self, bytes: &[u8]) -> Option<ToyElement> {
        self.decode_u64(bytes).map(ToyElement)
    }

    fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> ToyScalar {
        ToyScalar(rng.gen_range(1..self.q))
    }

    /// `(digest mod (q - 1)) + 1`, so the result is never the identity `0`.
    fn hash_to_element(&self, tag: &[u8], data: &[u8]) -> Result<ToyElement, GroupError> {
        let digest = expand_digest(tag, data, 2 * self.len);
        let m = (self.q - 1) as u128;
        let r = digest
            .iter()
            .fold(0u128, |acc, b| ((acc << 8) | *b as u128) % m);
        Ok(ToyElement(r as u64 + 1))
    }
}

/// Deterministic Miller-Rabin, exact for all `u64`.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy23() -> Toy {
        Toy::new(23).unwrap()
    }

    #[test]
    fn rejects_composite_orders() {
        assert_eq!(Toy::new(21), Err(GroupError::NotPrime(21)));
        assert!(Toy::new(2).is_err());
        assert!(Toy::new((1 << 61) - 1).is_ok());
        assert!(Toy::new(1_000_000_007).is_ok());
        assert!(Toy::new(1_000_000_007 * 3).is_err());
    }

    #[test]
    fn zero_scalar_gives_identity() {
        let g = toy23();
        assert_eq!(g.mul(&g.scalar(0), &g.element(5)), g.identity());
    }

    #[test]
    fn seven_times_three() {
        let g = toy23();
        assert_eq!(g.mul(&g.scalar(7), &g.element(3)).value(), 21);
    }

    #[test]
    fn scalar_mul_is_integer_multiplication_exhaustive() {
        let g = toy23();
        for k in 0..23 {
            for a in 0..23 {
                assert_eq!(g.mul(&g.scalar(k), &g.element(a)).value(), (k * a) % 23);
            }
        }
    }

    #[test]
    fn distributivity_exhaustive() {
        let g = toy23();
        for k1 in 0..23 {
            for k2 in 0..23 {
                for a in 0..23 {
                    let a = g.element(a);
                    let lhs = g.mul(&g.scalar_add(&g.scalar(k1), &g.scalar(k2)), &a);
                    let rhs = g.add(&g.mul(&g.scalar(k1), &a), &g.mul(&g.scalar(k2), &a));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn inverse_exhaustive() {
        let g = toy23();
        for a in 1..23 {
            let inv = g.scalar_invert(&g.scalar(a)).unwrap();
            assert_eq!((a * inv.value()) % 23, 1);
        }
    }

    #[test]
    fn width_tracks_bit_length() {
        assert_eq!(toy23().scalar_len(), 1);
        assert_eq!(Toy::new(257).unwrap().scalar_len(), 2);
        assert_eq!(Toy::new((1 << 61) - 1).unwrap().scalar_len(), 8);
    }
}
