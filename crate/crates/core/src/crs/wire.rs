//! `u16 r ‖ u16 x ‖ w_x ‖ r × (u16 len ‖ id) ‖ r × (m ‖ U ‖ v)`, big-endian,
//! with `x` one-based.

use super::{parse_id, RingSignature, RingTuple};
use crate::codec::{DecodeError, Reader};
use crate::group::Group;

impl<G: Group> RingSignature<G> {
    pub fn encoded_len(&self, group: &G) -> usize {
        let r = self.ids.len();
        4 + group.scalar_len()
            + self.ids.iter().map(|id| 2 + id.len()).sum::<usize>()
            + r * (2 * group.scalar_len() + group.element_len())
    }

    pub fn write_to(&self, group: &G, out: &mut Vec<u8>) {
        let r = u16::try_from(self.ids.len()).expect("ring size fits u16");
        out.extend_from_slice(&r.to_be_bytes());
        out.extend_from_slice(&(self.start as u16 + 1).to_be_bytes());
        out.extend_from_slice(&self.glue);
        for id in &self.ids {
            let len = u16::try_from(id.len()).expect("id length fits u16");
            out.extend_from_slice(&len.to_be_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        for t in &self.tuples {
            out.extend_from_slice(&t.m);
            out.extend_from_slice(&group.encode(&t.u));
            out.extend_from_slice(&group.scalar_to_bytes(&t.v));
        }
    }

    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len(group));
        self.write_to(group, &mut out);
        out
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut reader = Reader::new(bytes);
        let sig = Self::read_from(group, &mut reader)?;
        reader.finish()?;
        Ok(sig)
    }

    pub(crate) fn read_from(group: &G, reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let r = reader.u16()? as usize;
        let x = reader.u16()? as usize;
        if r == 0 {
            return Err(DecodeError::Invalid("ring size is zero"));
        }
        if x == 0 || x > r {
            return Err(DecodeError::Invalid("start index outside 1..=r"));
        }
        let glue = reader.take(group.scalar_len())?.to_vec();
        let mut ids = Vec::with_capacity(r);
        for _ in 0..r {
            let len = reader.u16()? as usize;
            let raw = reader.take(len)?;
            let id = std::str::from_utf8(raw).map_err(|_| DecodeError::InvalidId)?;
            parse_id(id).map_err(|_| DecodeError::InvalidId)?;
            ids.push(id.to_string());
        }
        let mut tuples = Vec::with_capacity(r);
        for _ in 0..r {
            let m = reader.take(group.scalar_len())?.to_vec();
            let u = reader.element(group)?;
            let v = reader.scalar(group)?;
            tuples.push(RingTuple { m, u, v });
        }
        Ok(RingSignature { start: x - 1, glue, ids, tuples })
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::crs::{keygen, ring_sign, setup, CrsParams, Registry};
    use crate::group::{Toy, P192};

    fn sample_sig(r: usize, seed: u64) -> (Toy, RingSignature<Toy>) {
        let g = Toy::new((1 << 61) - 1).unwrap();
        let params = CrsParams::new(g);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mk = setup(&params, 256, "acme", &mut rng).unwrap();
        let mut reg = Registry::new(params);
        reg.register(mk.public_key()).unwrap();
        let ring: Vec<String> = (0..r).map(|i| format!("acme:PLATE-{i:04}")).collect();
        let key = keygen(&mk, &ring[0]).unwrap();
        (g, ring_sign(&reg, b"m", &ring, &key, 0, &mut rng).unwrap())
    }

    proptest! {
        #[test]
        fn round_trips(r in 1usize..8, seed in any::<u64>()) {
            let (g, sig) = sample_sig(r, seed);
            let bytes = sig.to_bytes(&g);
            prop_assert_eq!(bytes.len(), sig.encoded_len(&g));
            prop_assert_eq!(RingSignature::from_bytes(&g, &bytes).unwrap(), sig);
        }

        #[test]
        fn truncation_is_a_parse_error(r in 1usize..5, cut in 1usize..40, seed in any::<u64>()) {
            let (g, sig) = sample_sig(r, seed);
            let bytes = sig.to_bytes(&g);
            let cut = cut.min(bytes.len());
            prop_assert!(RingSignature::<Toy>::from_bytes(&g, &bytes[..bytes.len() - cut]).is_err());
        }
    }

    #[test]
    fn ten_member_p192_signature_is_about_a_kilobyte() {
        let g = P192::new();
        let params = CrsParams::new(g);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mk = setup(&params, 256, "acme", &mut rng).unwrap();
        let mut reg = Registry::new(params);
        reg.register(mk.public_key()).unwrap();
        // 10-character identities.
        let ring: Vec<String> = (0..10).map(|i| format!("acme:car{i:02}")).collect();
        assert!(ring.iter().all(|id| id.len() == 10));
        let key = keygen(&mk, &ring[3]).unwrap();
        let sig = ring_sign(&reg, b"m", &ring, &key, 3, &mut rng).unwrap();
        // 4 + 24 + 10·12 + 10·(24 + 25 + 24)
        assert_eq!(sig.to_bytes(&g).len(), 878);
    }

    #[test]
    fn header_errors() {
        let g = Toy::new(23).unwrap();
        assert_eq!(
            RingSignature::<Toy>::from_bytes(&g, &[0, 0, 0, 1]),
            Err(DecodeError::Invalid("ring size is zero"))
        );
        assert_eq!(
            RingSignature::<Toy>::from_bytes(&g, &[0, 1, 0, 2]),
            Err(DecodeError::Invalid("start index outside 1..=r"))
        );
        assert_eq!(
            RingSignature::<Toy>::from_bytes(&g, &[0, 1, 0, 1, 7, 0, 1, b'x']),
            Err(DecodeError::InvalidId)
        );
    }
}
