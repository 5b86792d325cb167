use elliptic_curve::ff::{Field, PrimeField};
use elliptic_curve::group::{Group as _, GroupEncoding};
use elliptic_curve::point::DecompressPoint;
use elliptic_curve::subtle::Choice;
use num_bigint::BigUint;
use rand::RngCore;

use super::{expand_digest, fixed_width_be, Group, GroupError, GroupId};

/// Upper bound on try-and-increment candidates.
pub(crate) const MAX_HASH_TO_CURVE_TRIES: u32 = 256;

macro_rules! nist_curve {
    ($name:ident, $krate:ident, $id:expr, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
        pub struct $name;

        impl $name {
            pub fn new() -> Self {
                $name
            }

            fn field_len() -> usize {
                <$krate::FieldBytes>::default().len()
            }
        }

        impl Group for $name {
            type Scalar = $krate::Scalar;
            type Element = $krate::ProjectivePoint;

            fn id(&self) -> GroupId {
                $id
            }

            fn order(&self) -> BigUint {
                let hex = <$krate::Scalar as PrimeField>::MODULUS;
                BigUint::parse_bytes(hex.trim_start_matches("0x").as_bytes(), 16)
                    .expect("curve order constant is valid hex")
            }

            fn scalar_len(&self) -> usize {
                <$krate::FieldBytes>::default().len()
            }

            fn element_len(&self) -> usize {
                1 + Self::field_len()
            }

            fn generator(&self) -> Self::Element {
                $krate::ProjectivePoint::generator()
            }

            fn identity(&self) -> Self::Element {
                $krate::ProjectivePoint::identity()
            }

            fn add(&self, a: &Self::Element, b: &Self::Element) -> Self::Element {
                *a + *b
            }

            fn mul(&self, k: &Self::Scalar, a: &Self::Element) -> Self::Element {
                *a * *k
            }

            fn scalar_zero(&self) -> Self::Scalar {
                <$krate::Scalar as Field>::ZERO
            }

            fn scalar_from_u64(&self, v: u64) -> Self::Scalar {
                $krate::Scalar::from(v)
            }

            fn scalar_add(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar {
                *a + *b
            }

            fn scalar_sub(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar {
                *a - *b
            }

            fn scalar_mul(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar {
                *a * *b
            }

            fn scalar_neg(&self, a: &Self::Scalar) -> Self::Scalar {
                -*a
            }

            fn scalar_invert(&self, a: &Self::Scalar) -> Option<Self::Scalar> {
                Option::from(a.invert())
            }

            fn reduce_bytes(&self, bytes: &[u8]) -> Self::Scalar {
                let reduced = BigUint::from_bytes_be(bytes) % self.order();
                self.scalar_from_bytes(&fixed_width_be(&reduced, self.scalar_len()))
                    .expect("reduced value is canonical")
            }

            fn scalar_to_bytes(&self, s: &Self::Scalar) -> Vec<u8> {
                s.to_repr().to_vec()
            }

            fn scalar_from_bytes(&self, bytes: &[u8]) -> Option<Self::Scalar> {
                if bytes.len() != self.scalar_len() {
                    return None;
                }
                let mut repr = <$krate::FieldBytes>::default();
                repr.copy_from_slice(bytes);
                Option::from(<$krate::Scalar as PrimeField>::from_repr(repr))
            }

            fn encode(&self, e: &Self::Element) -> Vec<u8> {
                e.to_affine().to_bytes().to_vec()
            }

            fn decode(&self, bytes: &[u8]) -> Option<Self::Element> {
                if bytes.len() != self.element_len() {
                    return None;
                }
                let mut repr = <$krate::AffinePoint as GroupEncoding>::Repr::default();
                repr.copy_from_slice(bytes);
                Option::<$krate::AffinePoint>::from($krate::AffinePoint::from_bytes(&repr))
                    .map($krate::ProjectivePoint::from)
            }

            fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar {
                loop {
                    let s = <$krate::Scalar as Field>::random(&mut *rng);
                    if !bool::from(s.is_zero()) {
                        return s;
                    }
                }
            }

            /// Try-and-increment: candidate `x` and a sign bit come from
            /// `digest(tag, counter ‖ data)`; the first `x` on the curve wins.
            /// The cofactor is 1, so every curve point is in the subgroup.
            fn hash_to_element(
                &self,
                tag: &[u8],
                data: &[u8],
            ) -> Result<Self::Element, GroupError> {
                let flen = Self::field_len();
                let mut input = Vec::with_capacity(data.len() + 1);
                for counter in 0..MAX_HASH_TO_CURVE_TRIES {
                    input.clear();
                    input.push(counter as u8);
                    input.extend_from_slice(data);
                    let candidate = expand_digest(tag, &input, flen + 1);
                    let mut x = <$krate::FieldBytes>::default();
                    x.copy_from_slice(&candidate[..flen]);
                    let y_is_odd = Choice::from(candidate[flen] & 1);
                    let point: Option<$krate::AffinePoint> =
                        $krate::AffinePoint::decompress(&x, y_is_odd).into();
                    if let Some(p) = point {
                        return Ok(p.into());
                    }
                }
                Err(GroupError::HashToGroupExhausted(MAX_HASH_TO_CURVE_TRIES))
            }
        }
    };
}

nist_curve!(P192, p192, GroupId::P192, "NIST P-192 (secp192r1).");
nist_curve!(P256, p256, GroupId::P256, "NIST P-256 (secp256r1).");
