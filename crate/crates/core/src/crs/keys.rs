use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::RwLock;

use rand::RngCore;

use super::{CrsError, CrsParams, MASTER_KEY_LEN};
use crate::group::{Group, OpMeter};

/// Splits `manufactory:identity`. Both halves must be non-empty, the whole
/// string must fit a `u16` length prefix and contain no control characters
/// or whitespace.
pub fn parse_id(id: &str) -> Result<(&str, &str), CrsError> {
    let malformed = || CrsError::MalformedId(id.to_string());
    if id.len() > u16::MAX as usize || id.chars().any(|c| c.is_control() || c.is_whitespace()) {
        return Err(malformed());
    }
    match id.split_once(':') {
        Some((m, local)) if !m.is_empty() && !local.is_empty() => Ok((m, local)),
        _ => Err(malformed()),
    }
}

/// A manufactory's master key: secret vector `X` and public vector `Y`.
#[derive(Clone)]
pub struct MasterKeyPair<G: Group> {
    params: CrsParams<G>,
    manufactory_id: String,
    secret: Vec<G::Scalar>,
    public: Vec<G::Element>,
}

/// The public half of a [`MasterKeyPair`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManufactoryKey<G: Group> {
    pub manufactory_id: String,
    pub public: Vec<G::Element>,
}

/// Draws `n` secrets uniformly from `[1, q)` and publishes `Y_i = x_i·P`.
///
/// `n` is 256 in production (the width of `H0`); shorter vectors are
/// accepted so that tests can stub `H0` with a handful of bits.
pub fn setup<G: Group, R: RngCore + ?Sized>(
    params: &CrsParams<G>,
    n: usize,
    manufactory_id: &str,
    rng: &mut R,
) -> Result<MasterKeyPair<G>, CrsError> {
    if n == 0 || n > MASTER_KEY_LEN {
        return Err(CrsError::VectorLength(n));
    }
    let secret = (0..n).map(|_| params.group.random_nonzero_scalar(rng)).collect();
    MasterKeyPair::from_secret(params.clone(), manufactory_id, secret)
}

impl<G: Group> MasterKeyPair<G> {
    pub fn from_secret(
        params: CrsParams<G>,
        manufactory_id: &str,
        secret: Vec<G::Scalar>,
    ) -> Result<Self, CrsError> {
        if manufactory_id.is_empty() || parse_id(&format!("{manufactory_id}:x")).is_err() {
            return Err(CrsError::MalformedId(manufactory_id.to_string()));
        }
        if manufactory_id.contains(':') {
            return Err(CrsError::MalformedId(manufactory_id.to_string()));
        }
        if secret.is_empty() || secret.len() > MASTER_KEY_LEN {
            return Err(CrsError::VectorLength(secret.len()));
        }
        let g = &params.group;
        if let Some(i) = secret.iter().position(|x| g.is_zero(x)) {
            return Err(CrsError::ZeroSecret(i));
        }
        let p = g.generator();
        let public = secret.iter().map(|x| g.mul(x, &p)).collect();
        Ok(MasterKeyPair {
            params,
            manufactory_id: manufactory_id.to_string(),
            secret,
            public,
        })
    }

    pub fn manufactory_id(&self) -> &str {
        &self.manufactory_id
    }

    pub fn params(&self) -> &CrsParams<G> {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.secret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.secret.is_empty()
    }

    pub fn secret(&self) -> &[G::Scalar] {
        &self.secret
    }

    pub fn public(&self) -> &[G::Element] {
        &self.public
    }

    pub fn public_key(&self) -> ManufactoryKey<G> {
        ManufactoryKey {
            manufactory_id: self.manufactory_id.clone(),
            public: self.public.clone(),
        }
    }
}

impl<G: Group> fmt::Debug for MasterKeyPair<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MasterKeyPair")
            .field("manufactory_id", &self.manufactory_id)
            .field("n", &self.secret.len())
            .finish_non_exhaustive()
    }
}

/// An identity and its private key `d`.
#[derive(Clone, PartialEq, Eq)]
pub struct IdentityKey<G: Group> {
    pub(crate) id: String,
    pub(crate) d: G::Scalar,
}

impl<G: Group> IdentityKey<G> {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn secret_scalar(&self) -> &G::Scalar {
        &self.d
    }
}

impl<G: Group> fmt::Debug for IdentityKey<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IdentityKey").field("id", &self.id).finish_non_exhaustive()
    }
}

/// Derives `d_id = Σ h_i·x_i mod q`.
///
/// Fails with [`CrsError::DegenerateKey`] when `d_id = 0`, which also means
/// the extracted public key would be the identity element.
pub fn keygen<G: Group>(mk: &MasterKeyPair<G>, id: &str) -> Result<IdentityKey<G>, CrsError> {
    let (manufactory, _) = parse_id(id)?;
    if manufactory != mk.manufactory_id {
        return Err(CrsError::ManufactoryMismatch {
            id: id.to_string(),
            manufactory: mk.manufactory_id.clone(),
        });
    }
    let g = &mk.params.group;
    let bits = mk.params.hashes().identity_bits(id, mk.secret.len());
    let d = bits
        .iter()
        .zip(&mk.secret)
        .filter(|(bit, _)| **bit)
        .fold(g.scalar_zero(), |acc, (_, x)| g.scalar_add(&acc, x));
    if g.is_zero(&d) {
        return Err(CrsError::DegenerateKey(id.to_string()));
    }
    Ok(IdentityKey { id: id.to_string(), d })
}

/// Public master vectors of every manufactory, plus a cache of extracted
/// identity public keys.
pub struct Registry<G: Group> {
    params: CrsParams<G>,
    manufactories: BTreeMap<String, Vec<G::Element>>,
    cache: RwLock<HashMap<String, G::Element>>,
}

impl<G: Group> Registry<G> {
    pub fn new(params: CrsParams<G>) -> Self {
        Registry {
            params,
            manufactories: BTreeMap::new(),
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn register(&mut self, key: ManufactoryKey<G>) -> Result<(), CrsError> {
        if key.public.is_empty() || key.public.len() > MASTER_KEY_LEN {
            return Err(CrsError::VectorLength(key.public.len()));
        }
        if self.manufactories.contains_key(&key.manufactory_id) {
            return Err(CrsError::DuplicateManufactory(key.manufactory_id));
        }
        self.manufactories.insert(key.manufactory_id, key.public);
        Ok(())
    }

    pub fn params(&self) -> &CrsParams<G> {
        &self.params
    }

    pub fn group(&self) -> &G {
        &self.params.group
    }

    pub fn manufactory(&self, manufactory_id: &str) -> Option<&[G::Element]> {
        self.manufactories.get(manufactory_id).map(Vec::as_slice)
    }

    pub fn manufactories(&self) -> impl Iterator<Item = &str> {
        self.manufactories.keys().map(String::as_str)
    }

    /// `E_id = Σ h_j·Y_j`: point additions only, cached per identity.
    pub fn extract(&self, id: &str, meter: &OpMeter) -> Result<G::Element, CrsError> {
        meter.record_extraction();
        if let Some(e) = self.cache.read().unwrap().get(id) {
            return Ok(*e);
        }
        let (manufactory, _) = parse_id(id)?;
        let public = self
            .manufactories
            .get(manufactory)
            .ok_or_else(|| CrsError::UnknownManufactory(manufactory.to_string()))?;
        let g = &self.params.group;
        let bits = self.params.hashes().identity_bits(id, public.len());
        let e = bits
            .iter()
            .zip(public)
            .filter(|(bit, _)| **bit)
            .fold(g.identity(), |acc, (_, y)| g.add(&acc, y));
        if g.is_identity(&e) {
            return Err(CrsError::DegenerateKey(id.to_string()));
        }
        self.cache.write().unwrap().insert(id.to_string(), e);
        Ok(e)
    }

    /// [`Registry::extract`] without a meter.
    pub fn public_key(&self, id: &str) -> Result<G::Element, CrsError> {
        self.extract(id, &OpMeter::new())
    }
}

impl<G: Group> fmt::Debug for Registry<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("group", &self.params.group)
            .field("manufactories", &self.manufactories.keys().collect::<Vec<_>>())
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::crs::RingHashes;
    use crate::group::{Toy, P192};

    /// `H0` fixed to a given bit pattern for every identity.
    struct FixedBits(Vec<bool>);

    impl RingHashes<Toy> for FixedBits {
        fn identity_bits(&self, _id: &str, n: usize) -> Vec<bool> {
            self.0[..n].to_vec()
        }
        fn element_scalar(&self, g: &Toy, e: &<Toy as Group>::Element) -> <Toy as Group>::Scalar {
            g.scalar(e.value())
        }
        fn chain(&self, _g: &Toy, _msg: &[u8], input: &[u8]) -> Vec<u8> {
            input.to_vec()
        }
    }

    fn toy_master(bits: &[bool]) -> MasterKeyPair<Toy> {
        let g = Toy::new(23).unwrap();
        let params = CrsParams::with_hashes(g, Arc::new(FixedBits(bits.to_vec())));
        let secret = [3, 5, 7, 11].iter().map(|v| g.scalar(*v)).collect();
        MasterKeyPair::from_secret(params, "m", secret).unwrap()
    }

    #[test]
    fn parse_id_shapes() {
        assert_eq!(parse_id("acme:ABC123").unwrap(), ("acme", "ABC123"));
        assert_eq!(parse_id("acme:a:b").unwrap(), ("acme", "a:b"));
        for bad in ["", "acme", ":x", "acme:", "ac me:x", "acme:x\n"] {
            assert!(parse_id(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn toy_public_vector_equals_secret() {
        let mk = toy_master(&[true, false, true, false]);
        let values: Vec<u64> = mk.public().iter().map(|e| e.value()).collect();
        assert_eq!(values, [3, 5, 7, 11]);
    }

    #[test]
    fn toy_keygen_and_extract_with_stubbed_bits() {
        let mk = toy_master(&[true, false, true, false]);
        let key = keygen(&mk, "m:car").unwrap();
        assert_eq!(key.secret_scalar().value(), 10);

        let mut reg = Registry::new(mk.params().clone());
        reg.register(mk.public_key()).unwrap();
        assert_eq!(reg.public_key("m:car").unwrap().value(), 10);
    }

    #[test]
    fn all_zero_bits_are_degenerate() {
        let mk = toy_master(&[false; 4]);
        assert_eq!(keygen(&mk, "m:car"), Err(CrsError::DegenerateKey("m:car".into())));
        let mut reg = Registry::new(mk.params().clone());
        reg.register(mk.public_key()).unwrap();
        assert_eq!(
            reg.public_key("m:car"),
            Err(CrsError::DegenerateKey("m:car".into()))
        );
    }

    #[test]
    fn keygen_deterministic_and_checks_manufactory() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mk = setup(&CrsParams::new(P192::new()), 256, "acme", &mut rng).unwrap();
        assert_eq!(keygen(&mk, "acme:X1").unwrap(), keygen(&mk, "acme:X1").unwrap());
        assert!(matches!(
            keygen(&mk, "other:X1"),
            Err(CrsError::ManufactoryMismatch { .. })
        ));
    }

    #[test]
    fn setup_relation_and_freshness() {
        let params = CrsParams::new(P192::new());
        let g = params.group;
        let a = setup(&params, 256, "acme", &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let b = setup(&params, 256, "acme", &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        for (x, y) in a.secret().iter().zip(a.public()) {
            assert_eq!(g.mul(x, &g.generator()), *y);
        }
        assert_ne!(a.secret(), b.secret());
        assert!(matches!(
            setup(&params, 0, "acme", &mut ChaCha20Rng::seed_from_u64(1)),
            Err(CrsError::VectorLength(0))
        ));
        assert!(setup(&params, 257, "acme", &mut ChaCha20Rng::seed_from_u64(1)).is_err());
        assert!(setup(&params, 4, "ac:me", &mut ChaCha20Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn extract_matches_keygen_for_random_ids() {
        let params = CrsParams::new(P192::new());
        let g = params.group;
        let mk = setup(&params, 256, "acme", &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        let mut reg = Registry::new(params);
        reg.register(mk.public_key()).unwrap();
        for i in 0..100 {
            let id = format!("acme:plate-{i:04}");
            let d = keygen(&mk, &id).unwrap();
            assert_eq!(reg.public_key(&id).unwrap(), g.mul(d.secret_scalar(), &g.generator()));
        }
    }

    #[test]
    fn registry_errors_and_extraction_count() {
        let params = CrsParams::new(P192::new());
        let mk = setup(&params, 256, "acme", &mut ChaCha20Rng::seed_from_u64(4)).unwrap();
        let mut reg = Registry::new(params);
        reg.register(mk.public_key()).unwrap();
        assert_eq!(
            reg.register(mk.public_key()),
            Err(CrsError::DuplicateManufactory("acme".into()))
        );
        assert_eq!(
            reg.public_key("other:1"),
            Err(CrsError::UnknownManufactory("other".into()))
        );
        let meter = OpMeter::new();
        reg.extract("acme:1", &meter).unwrap();
        reg.extract("acme:1", &meter).unwrap();
        assert_eq!(meter.extractions(), 2);
        assert_eq!(meter.scalar_muls(), 0);
    }
}
