use rand::{Rng, RngCore};

use super::{xor, CrsError, CrsParams, IdentityKey, Registry};
use crate::group::{scalar_mul, Group, OpMeter};

/// One ElGamal tuple `⟨m, U, v⟩` with `m·P = H1(U)·E + v·U`.
///
/// `m` is carried as a full-width byte string and only reduced mod `q` when
/// it enters group arithmetic; the ring equation XORs the raw bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingTuple<G: Group> {
    pub m: Vec<u8>,
    pub u: G::Element,
    pub v: G::Scalar,
}

/// A ring signature: the published chain start `(x, w_x)`, the ring
/// identities, and one tuple per identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingSignature<G: Group> {
    /// Zero-based start index `x` (the wire format stores `x + 1`).
    pub start: usize,
    /// `w_x`, `scalar_len` bytes.
    pub glue: Vec<u8>,
    pub ids: Vec<String>,
    pub tuples: Vec<RingTuple<G>>,
}

impl<G: Group> RingSignature<G> {
    pub fn ring_size(&self) -> usize {
        self.ids.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("malformed signature: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Key(#[from] CrsError),
    #[error("tuple {0} fails the ElGamal equation")]
    InvalidTuple(usize),
    #[error("ring equation does not close")]
    RingNotClosed,
}

/// Produces an ElGamal-valid tuple for public key `E` without its private
/// key: `U = a·P + b·E`, `v = -H1(U)·b⁻¹`, `m = a·v`.
///
/// `a` and `b` are redrawn (as a pair) whenever `H1(U) = 0`.
pub fn forge_tuple<G: Group, R: RngCore + ?Sized>(
    params: &CrsParams<G>,
    e: &G::Element,
    rng: &mut R,
    meter: &OpMeter,
) -> Result<RingTuple<G>, CrsError> {
    let g = &params.group;
    if g.is_identity(e) {
        return Err(CrsError::DegenerateKey("<forgery target>".into()));
    }
    let p = g.generator();
    loop {
        let a = g.random_nonzero_scalar(rng);
        let b = g.random_nonzero_scalar(rng);
        let u = g.add(&scalar_mul(g, &a, &p, meter), &scalar_mul(g, &b, e, meter));
        let h = params.hashes().element_scalar(g, &u);
        if g.is_zero(&h) {
            continue;
        }
        let b_inv = g.scalar_invert(&b).expect("b is nonzero");
        let v = g.scalar_neg(&g.scalar_mul(&h, &b_inv));
        let m = g.scalar_mul(&a, &v);
        return Ok(RingTuple { m: g.scalar_to_bytes(&m), u, v });
    }
}

/// Checks `(m mod q)·P = H1(U)·E + v·U`.
pub fn verify_tuple<G: Group>(
    params: &CrsParams<G>,
    tuple: &RingTuple<G>,
    e: &G::Element,
    meter: &OpMeter,
) -> bool {
    let g = &params.group;
    let m = g.reduce_bytes(&tuple.m);
    let h = params.hashes().element_scalar(g, &tuple.u);
    let lhs = scalar_mul(g, &m, &g.generator(), meter);
    let rhs = g.add(&scalar_mul(g, &h, e, meter), &scalar_mul(g, &tuple.v, &tuple.u, meter));
    lhs == rhs
}

/// Signs `msg` on behalf of `ring`, where `ring[signer_pos]` is the signer.
///
/// Randomness is consumed in a fixed order: for each non-signer position in
/// ascending order the pair `(a, b)` (redrawn as in [`forge_tuple`]), then
/// `γ`, then the signer nonce `l`, then the published start index.
pub fn ring_sign<G: Group, R: RngCore + ?Sized>(
    registry: &Registry<G>,
    msg: &[u8],
    ring: &[String],
    signer: &IdentityKey<G>,
    signer_pos: usize,
    rng: &mut R,
) -> Result<RingSignature<G>, CrsError> {
    ring_sign_metered(registry, msg, ring, signer, signer_pos, rng, &OpMeter::new())
}

/// [`ring_sign`] with operation counting: `2r - 1` scalar multiplications
/// and `r` key extractions.
pub fn ring_sign_metered<G: Group, R: RngCore + ?Sized>(
    registry: &Registry<G>,
    msg: &[u8],
    ring: &[String],
    signer: &IdentityKey<G>,
    signer_pos: usize,
    rng: &mut R,
    meter: &OpMeter,
) -> Result<RingSignature<G>, CrsError> {
    let params = registry.params();
    let g = &params.group;
    let hashes = params.hashes();
    let r = ring.len();
    if r == 0 {
        return Err(CrsError::EmptyRing);
    }
    if ring.get(signer_pos).map(String::as_str) != Some(signer.id()) {
        return Err(CrsError::SignerMismatch(signer_pos));
    }
    let keys = ring
        .iter()
        .map(|id| registry.extract(id, meter))
        .collect::<Result<Vec<_>, _>>()?;

    let mut tuples: Vec<Option<RingTuple<G>>> = vec![None; r];
    for (i, key) in keys.iter().enumerate() {
        if i != signer_pos {
            tuples[i] = Some(forge_tuple(params, key, rng, meter)?);
        }
    }

    let gamma = g.scalar_to_bytes(&g.random_nonzero_scalar(rng));

    // Walk the chain from the position after the signer back round to it.
    let mut w = vec![Vec::new(); r];
    w[(signer_pos + 1) % r] = hashes.chain(g, msg, &gamma);
    for step in 1..r {
        let j = (signer_pos + step) % r;
        let m_j = &tuples[j].as_ref().expect("forged").m;
        w[(j + 1) % r] = hashes.chain(g, msg, &xor(&w[j], m_j));
    }
    let m_s = xor(&gamma, &w[signer_pos]);

    let l = g.random_nonzero_scalar(rng);
    let u_s = scalar_mul(g, &l, &g.generator(), meter);
    let h_s = hashes.element_scalar(g, &u_s);
    let l_inv = g.scalar_invert(&l).expect("l is nonzero");
    let v_s = g.scalar_mul(
        &g.scalar_sub(&g.reduce_bytes(&m_s), &g.scalar_mul(&signer.d, &h_s)),
        &l_inv,
    );
    tuples[signer_pos] = Some(RingTuple { m: m_s, u: u_s, v: v_s });

    let start = rng.gen_range(0..r);
    Ok(RingSignature {
        start,
        glue: w[start].clone(),
        ids: ring.to_vec(),
        tuples: tuples.into_iter().map(|t| t.expect("all positions filled")).collect(),
    })
}

/// Accepts iff every tuple satisfies the ElGamal equation under its member's
/// extracted key and the chain started at `(x, w_x)` returns to `w_x`.
pub fn ring_verify<G: Group>(
    registry: &Registry<G>,
    msg: &[u8],
    sig: &RingSignature<G>,
) -> Result<(), VerifyError> {
    ring_verify_metered(registry, msg, sig, &OpMeter::new())
}

/// [`ring_verify`] with operation counting: `3r` scalar multiplications and
/// `r` extractions for a valid signature.
pub fn ring_verify_metered<G: Group>(
    registry: &Registry<G>,
    msg: &[u8],
    sig: &RingSignature<G>,
    meter: &OpMeter,
) -> Result<(), VerifyError> {
    let params = registry.params();
    let g = &params.group;
    let r = sig.ids.len();
    if r == 0 {
        return Err(VerifyError::Malformed("empty ring"));
    }
    if sig.tuples.len() != r {
        return Err(VerifyError::Malformed("tuple count differs from ring size"));
    }
    if sig.start >= r {
        return Err(VerifyError::Malformed("start index out of range"));
    }
    let width = g.scalar_len();
    if sig.glue.len() != width || sig.tuples.iter().any(|t| t.m.len() != width) {
        return Err(VerifyError::Malformed("wrong byte-string width"));
    }

    let keys = sig
        .ids
        .iter()
        .map(|id| registry.extract(id, meter))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, (tuple, key)) in sig.tuples.iter().zip(&keys).enumerate() {
        if !verify_tuple(params, tuple, key, meter) {
            return Err(VerifyError::InvalidTuple(i));
        }
    }

    let mut w = sig.glue.clone();
    for step in 0..r {
        let i = (sig.start + step) % r;
        w = params.hashes().chain(g, msg, &xor(&w, &sig.tuples[i].m));
    }
    if w == sig.glue {
        Ok(())
    } else {
        Err(VerifyError::RingNotClosed)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::crs::{keygen, setup, RingHashes};
    use crate::group::{Toy, P192};

    struct StubH1(u64);

    impl RingHashes<Toy> for StubH1 {
        fn identity_bits(&self, _id: &str, n: usize) -> Vec<bool> {
            vec![true; n]
        }
        fn element_scalar(&self, g: &Toy, _e: &<Toy as Group>::Element) -> <Toy as Group>::Scalar {
            g.scalar(self.0)
        }
        fn chain(&self, _g: &Toy, _msg: &[u8], input: &[u8]) -> Vec<u8> {
            input.to_vec()
        }
    }

    #[test]
    fn toy_forgery_worked_example() {
        // q = 23, E = 10, a = 4, b = 6, H1(U) = 9:
        // U = 4 + 60 = 18, b⁻¹ = 4, v = -36 = 10, m = 40 = 17 (mod 23).
        let g = Toy::new(23).unwrap();
        let params = CrsParams::with_hashes(g, Arc::new(StubH1(9)));
        let e = g.element(10);
        let mut a_then_b = None;
        for seed in 0..10_000u64 {
            let mut probe = ChaCha20Rng::seed_from_u64(seed);
            let a: u64 = probe.gen_range(1..23);
            let b: u64 = probe.gen_range(1..23);
            if (a, b) == (4, 6) {
                a_then_b = Some(seed);
                break;
            }
        }
        let mut rng = ChaCha20Rng::seed_from_u64(a_then_b.expect("seed found"));
        let meter = OpMeter::new();
        let t = forge_tuple(&params, &e, &mut rng, &meter).unwrap();
        assert_eq!(t.u.value(), 18);
        assert_eq!(t.v.value(), 10);
        assert_eq!(t.m, vec![17]);
        assert_eq!(meter.scalar_muls(), 2);

        let meter = OpMeter::new();
        assert!(verify_tuple(&params, &t, &e, &meter));
        assert_eq!(meter.scalar_muls(), 3);
        // 17·1 = 9·10 + 10·18 = 270 = 17 (mod 23)
        assert_eq!((9 * 10 + 10 * 18) % 23, 17);
    }

    /// `H1(U) = 0` for one chosen `U`, 9 otherwise.
    struct VanishAt(u64);

    impl RingHashes<Toy> for VanishAt {
        fn identity_bits(&self, _id: &str, n: usize) -> Vec<bool> {
            vec![true; n]
        }
        fn element_scalar(&self, g: &Toy, e: &<Toy as Group>::Element) -> <Toy as Group>::Scalar {
            g.scalar(if e.value() == self.0 { 0 } else { 9 })
        }
        fn chain(&self, _g: &Toy, _msg: &[u8], input: &[u8]) -> Vec<u8> {
            input.to_vec()
        }
    }

    #[test]
    fn forgery_resamples_when_h1_vanishes() {
        let g = Toy::new(23).unwrap();
        let e = g.element(10);
        // First (a, b) drawn from this seed determines the U we make vanish.
        let mut probe = ChaCha20Rng::seed_from_u64(3);
        let a: u64 = probe.gen_range(1..23);
        let b: u64 = probe.gen_range(1..23);
        let first_u = (a + b * 10) % 23;

        let params = CrsParams::with_hashes(g, Arc::new(VanishAt(first_u)));
        let meter = OpMeter::new();
        let t = forge_tuple(&params, &e, &mut ChaCha20Rng::seed_from_u64(3), &meter).unwrap();
        assert_ne!(t.u.value(), first_u);
        assert!(meter.scalar_muls() >= 4);
        assert!(verify_tuple(&params, &t, &e, &OpMeter::new()));
    }

    #[test]
    fn forging_against_identity_is_rejected() {
        let g = Toy::new(23).unwrap();
        let params = CrsParams::new(g);
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(forge_tuple(&params, &g.identity(), &mut rng, &OpMeter::new()).is_err());
    }

    fn fixture<G: Group>(group: G, members: usize) -> (Registry<G>, Vec<IdentityKey<G>>) {
        let params = CrsParams::new(group);
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let mk = setup(&params, 256, "acme", &mut rng).unwrap();
        let mut reg = Registry::new(params);
        reg.register(mk.public_key()).unwrap();
        let keys = (0..)
            .filter_map(|i| keygen(&mk, &format!("acme:car-{i}")).ok())
            .take(members)
            .collect();
        (reg, keys)
    }

    #[test]
    fn forgeries_are_fresh_and_valid() {
        let (reg, keys) = fixture(P192::new(), 1);
        let e = reg.public_key(keys[0].id()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let meter = OpMeter::new();
        let t1 = forge_tuple(reg.params(), &e, &mut rng, &meter).unwrap();
        let t2 = forge_tuple(reg.params(), &e, &mut rng, &meter).unwrap();
        assert_ne!(t1, t2);
        assert!(verify_tuple(reg.params(), &t1, &e, &meter));
        let mut flipped = t1.clone();
        flipped.m[3] ^= 1;
        assert!(!verify_tuple(reg.params(), &flipped, &e, &meter));
    }

    #[test]
    fn every_member_can_sign() {
        let (reg, keys) = fixture(P192::new(), 4);
        let ring: Vec<String> = keys.iter().map(|k| k.id().to_string()).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for (s, key) in keys.iter().enumerate() {
            let sig = ring_sign(&reg, b"hello", &ring, key, s, &mut rng).unwrap();
            ring_verify(&reg, b"hello", &sig).unwrap();
            assert_eq!(
                ring_verify(&reg, b"hellO", &sig),
                Err(VerifyError::RingNotClosed)
            );
        }
    }

    #[test]
    fn singleton_ring() {
        let (reg, keys) = fixture(P192::new(), 1);
        let ring = vec![keys[0].id().to_string()];
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let sig = ring_sign(&reg, b"m", &ring, &keys[0], 0, &mut rng).unwrap();
        assert_eq!(sig.tuples.len(), 1);
        assert_eq!(sig.start, 0);
        ring_verify(&reg, b"m", &sig).unwrap();
    }

    #[test]
    fn sign_rejects_bad_inputs() {
        let (reg, keys) = fixture(Toy::new((1 << 61) - 1).unwrap(), 2);
        let ring: Vec<String> = keys.iter().map(|k| k.id().to_string()).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        assert_eq!(
            ring_sign(&reg, b"m", &[], &keys[0], 0, &mut rng),
            Err(CrsError::EmptyRing)
        );
        assert_eq!(
            ring_sign(&reg, b"m", &ring, &keys[0], 1, &mut rng),
            Err(CrsError::SignerMismatch(1))
        );
        let bad_ring = vec![ring[0].clone(), "nobody:1".to_string()];
        assert_eq!(
            ring_sign(&reg, b"m", &bad_ring, &keys[0], 0, &mut rng),
            Err(CrsError::UnknownManufactory("nobody".into()))
        );
    }

    #[test]
    fn perturbed_glue_isolates_ring_equation() {
        let (reg, keys) = fixture(P192::new(), 3);
        let ring: Vec<String> = keys.iter().map(|k| k.id().to_string()).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let mut sig = ring_sign(&reg, b"m", &ring, &keys[1], 1, &mut rng).unwrap();
        sig.glue[0] ^= 0x80;
        assert_eq!(ring_verify(&reg, b"m", &sig), Err(VerifyError::RingNotClosed));
    }

    #[test]
    fn chain_closes_from_any_start() {
        let (reg, keys) = fixture(P192::new(), 5);
        let ring: Vec<String> = keys.iter().map(|k| k.id().to_string()).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let sig = ring_sign(&reg, b"m", &ring, &keys[2], 2, &mut rng).unwrap();
        let g = reg.group();
        let hashes = reg.params().hashes();
        // Recompute w_j for every j by walking from the published start.
        let mut w = vec![Vec::new(); 5];
        w[sig.start] = sig.glue.clone();
        for step in 0..4 {
            let i = (sig.start + step) % 5;
            w[(i + 1) % 5] = hashes.chain(g, b"m", &xor(&w[i], &sig.tuples[i].m));
        }
        for (j, glue) in w.iter().enumerate() {
            let mut moved = sig.clone();
            moved.start = j;
            moved.glue = glue.clone();
            ring_verify(&reg, b"m", &moved).unwrap();
        }
    }

    #[test]
    fn operation_counts() {
        let (reg, keys) = fixture(P192::new(), 6);
        let ring: Vec<String> = keys.iter().map(|k| k.id().to_string()).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for r in 1..=6u64 {
            let ring = &ring[..r as usize];
            let meter = OpMeter::new();
            let sig =
                ring_sign_metered(&reg, b"m", ring, &keys[0], 0, &mut rng, &meter).unwrap();
            assert_eq!(meter.scalar_muls(), 2 * r - 1);
            assert_eq!(meter.extractions(), r);
            let meter = OpMeter::new();
            ring_verify_metered(&reg, b"m", &sig, &meter).unwrap();
            assert_eq!(meter.scalar_muls(), 3 * r);
            assert_eq!(meter.extractions(), r);
        }
    }

    #[test]
    fn malformed_structures_are_not_crypto_failures() {
        let (reg, keys) = fixture(P192::new(), 2);
        let ring: Vec<String> = keys.iter().map(|k| k.id().to_string()).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let sig = ring_sign(&reg, b"m", &ring, &keys[0], 0, &mut rng).unwrap();
        let mut short = sig.clone();
        short.tuples.pop();
        assert!(matches!(ring_verify(&reg, b"m", &short), Err(VerifyError::Malformed(_))));
        let mut oob = sig.clone();
        oob.start = 2;
        assert!(matches!(ring_verify(&reg, b"m", &oob), Err(VerifyError::Malformed(_))));
        let mut swapped = sig.clone();
        swapped.ids.swap(0, 1);
        assert!(matches!(
            ring_verify(&reg, b"m", &swapped),
            Err(VerifyError::InvalidTuple(_))
        ));
    }
}
