//! Emulated in-vehicle secure hardware module.
//!
//! The module holds the vehicle's master secret `f`, its identity key and a
//! trusted clock, and is the only place pseudonym certificates and
//! application-message signatures are produced. No operation returns `f`;
//! it only ever leaves the module as the bindings `R = f·h0(C)` and
//! `T = f·h1(window)`.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::codec::{DecodeError, Reader};
use crate::crs::{
    keygen, ring_sign, ring_verify, CrsError, IdentityKey, MasterKeyPair, Registry,
    RingSignature, VerifyError,
};
use crate::group::{hash_to_group, hash_to_scalar, Group, GroupError};
use crate::transient::{TransientKey, TransientSignature};

pub(crate) const TAG_CONTENT: &[u8] = b"h0";
pub(crate) const TAG_WINDOW: &[u8] = b"h1";
pub(crate) const TAG_CERT: &[u8] = b"h2";

/// Scheme identifier stored in the first byte of `C`.
pub const SCHEME_SCHNORR: u8 = 0x01;

/// Minimum pseudonym generation interval used when none is configured.
pub const DEFAULT_MIN_SPAN_TIME: u64 = 60;

/// A time source in whole seconds.
pub trait Clock: Send + Sync {
    fn now(&self) -> u64;
}

/// A clock driven by the caller (tests, the simulator's event loop).
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start: u64) -> Self {
        ManualClock(AtomicU64::new(start))
    }

    pub fn set(&self, t: u64) {
        self.0.store(t, Ordering::SeqCst);
    }

    pub fn advance(&self, dt: u64) {
        self.0.fetch_add(dt, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// Wall-clock seconds since the Unix epoch.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }
}

/// Capability presented by the supervisor to run Reveal.
#[derive(Clone, PartialEq, Eq)]
pub struct SupervisorToken([u8; 32]);

/// What a module stores to recognise the supervisor's token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupervisorAuthority([u8; 32]);

impl SupervisorToken {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut t = [0u8; 32];
        rng.fill_bytes(&mut t);
        SupervisorToken(t)
    }

    pub fn authority(&self) -> SupervisorAuthority {
        SupervisorAuthority(Sha256::digest(self.0).into())
    }
}

impl fmt::Debug for SupervisorToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SupervisorToken(..)")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HsmError {
    #[error("module already joined")]
    AlreadyJoined,
    #[error("module has not joined")]
    NotJoined,
    #[error("manufactory `{0}` is not in the module's registry")]
    UnregisteredManufactory(String),
    #[error("own identity missing from ring")]
    OwnIdMissing,
    #[error("ring lists `{0}` more than once")]
    DuplicateRingId(String),
    #[error("certificate validity must be positive")]
    InvalidValidity,
    #[error("no transient key; generate a pseudonym first")]
    NoTransientKey,
    #[error("supervisor authentication failed")]
    Unauthorized,
    #[error(transparent)]
    Crs(#[from] CrsError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Parsed certificate content `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertContent<G: Group> {
    pub scheme: u8,
    pub public_key: G::Element,
    pub issued_at: u64,
    pub expires_at: u64,
}

impl<G: Group> CertContent<G> {
    /// `scheme ‖ pk ‖ u64 issued_at ‖ u64 expires_at`.
    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut out = vec![self.scheme];
        out.extend_from_slice(&group.encode(&self.public_key));
        out.extend_from_slice(&self.issued_at.to_be_bytes());
        out.extend_from_slice(&self.expires_at.to_be_bytes());
        out
    }

    pub fn parse(group: &G, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut reader = Reader::new(bytes);
        let scheme = reader.u8()?;
        if scheme != SCHEME_SCHNORR {
            return Err(DecodeError::Invalid("unknown transient scheme"));
        }
        let public_key = reader.element(group)?;
        let issued_at = reader.u64()?;
        let expires_at = reader.u64()?;
        reader.finish()?;
        if expires_at <= issued_at {
            return Err(DecodeError::Invalid("expiration not after issue time"));
        }
        Ok(CertContent { scheme, public_key, issued_at, expires_at })
    }
}

/// `σ = ⟨C, R, T, S⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudonymCertificate<G: Group> {
    /// `C`: transient public key and validity window.
    pub content: Vec<u8>,
    /// `R = f·h0(C)`.
    pub content_binding: G::Element,
    /// `T = f·h1(⌊now / min_span_time⌋)`.
    pub window_tag: G::Element,
    /// `S`: ring signature over `h2(C ‖ R ‖ T)`.
    pub signature: RingSignature<G>,
}

impl<G: Group> PseudonymCertificate<G> {
    /// The byte message that `S` signs: `h2(C ‖ R ‖ T)`, fixed width.
    pub fn signed_message(&self, group: &G) -> Vec<u8> {
        signed_message(group, &self.content, &self.content_binding, &self.window_tag)
    }

    pub fn content_fields(&self, group: &G) -> Result<CertContent<G>, DecodeError> {
        CertContent::parse(group, &self.content)
    }

    pub fn verify_signature(&self, registry: &Registry<G>) -> Result<(), VerifyError> {
        ring_verify(registry, &self.signed_message(registry.group()), &self.signature)
    }

    /// Whether `R = f·h0(C)` for the given master secret.
    pub fn bound_to(&self, group: &G, f: &G::Scalar) -> Result<bool, GroupError> {
        let j = hash_to_group(group, TAG_CONTENT, &self.content)?;
        Ok(group.mul(f, &j) == self.content_binding)
    }

    /// `u16 len(C) ‖ C ‖ R ‖ T ‖ S`.
    pub fn write_to(&self, group: &G, out: &mut Vec<u8>) {
        let len = u16::try_from(self.content.len()).expect("content fits u16");
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&self.content);
        out.extend_from_slice(&group.encode(&self.content_binding));
        out.extend_from_slice(&group.encode(&self.window_tag));
        self.signature.write_to(group, out);
    }

    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(group, &mut out);
        out
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut reader = Reader::new(bytes);
        let cert = Self::read_from(group, &mut reader)?;
        reader.finish()?;
        Ok(cert)
    }

    pub(crate) fn read_from(group: &G, reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let len = reader.u16()? as usize;
        let content = reader.take(len)?.to_vec();
        let content_binding = reader.element(group)?;
        let window_tag = reader.element(group)?;
        let signature = RingSignature::read_from(group, reader)?;
        Ok(PseudonymCertificate { content, content_binding, window_tag, signature })
    }
}

/// `msg = ⟨M, N⟩` with `N` a transient-key signature over `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApplicationMessage<G: Group> {
    pub payload: Vec<u8>,
    pub signature: TransientSignature<G>,
}

impl<G: Group> ApplicationMessage<G> {
    pub fn verify(&self, group: &G, public_key: &G::Element) -> bool {
        self.signature.verify(group, public_key, &self.payload)
    }
}

pub(crate) fn signed_message<G: Group>(
    group: &G,
    content: &[u8],
    r: &G::Element,
    t: &G::Element,
) -> Vec<u8> {
    let mut data = content.to_vec();
    data.extend_from_slice(&group.encode(r));
    data.extend_from_slice(&group.encode(t));
    group.scalar_to_bytes(&hash_to_scalar(group, TAG_CERT, &data))
}

struct Provisioned<G: Group> {
    f: G::Scalar,
    key: IdentityKey<G>,
}

/// The emulated secure element of one vehicle.
///
/// Operations take `&mut self`, so a module processes one request at a
/// time.
pub struct HardwareModule<G: Group> {
    registry: Arc<Registry<G>>,
    clock: Arc<dyn Clock>,
    supervisor: SupervisorAuthority,
    min_span_time: u64,
    provisioned: Option<Provisioned<G>>,
    transient: Option<TransientKey<G>>,
    last_time: u64,
}

impl<G: Group> HardwareModule<G> {
    /// A blank module. `min_span_time` is in seconds and must be positive.
    pub fn new(
        registry: Arc<Registry<G>>,
        clock: Arc<dyn Clock>,
        supervisor: SupervisorAuthority,
        min_span_time: u64,
    ) -> Self {
        assert!(min_span_time > 0, "min_span_time must be positive");
        HardwareModule {
            registry,
            clock,
            supervisor,
            min_span_time,
            provisioned: None,
            transient: None,
            last_time: 0,
        }
    }

    /// Join: draws a fresh master secret `f` and installs `d_id`.
    pub fn join<R: RngCore + ?Sized>(
        &mut self,
        mk: &MasterKeyPair<G>,
        id: &str,
        rng: &mut R,
    ) -> Result<(), HsmError> {
        let f = self.registry.group().random_nonzero_scalar(rng);
        self.join_with_master_secret(mk, id, f)
    }

    /// Join with a caller-chosen `f`. Models a module whose secret is known
    /// outside the hardware, e.g. a compromised device.
    pub fn join_with_master_secret(
        &mut self,
        mk: &MasterKeyPair<G>,
        id: &str,
        f: G::Scalar,
    ) -> Result<(), HsmError> {
        if self.provisioned.is_some() {
            return Err(HsmError::AlreadyJoined);
        }
        let manufactory = mk.manufactory_id();
        if self.registry.manufactory(manufactory) != Some(mk.public()) {
            return Err(HsmError::UnregisteredManufactory(manufactory.to_string()));
        }
        if self.registry.group().is_zero(&f) {
            return Err(HsmError::Crs(CrsError::ZeroSecret(0)));
        }
        let key = keygen(mk, id)?;
        self.provisioned = Some(Provisioned { f, key });
        Ok(())
    }

    pub fn identity(&self) -> Option<&str> {
        self.provisioned.as_ref().map(|p| p.key.id())
    }

    pub fn registry(&self) -> &Arc<Registry<G>> {
        &self.registry
    }

    pub fn group(&self) -> &G {
        self.registry.group()
    }

    pub fn min_span_time(&self) -> u64 {
        self.min_span_time
    }

    pub fn current_public_key(&self) -> Option<&G::Element> {
        self.transient.as_ref().map(TransientKey::public)
    }

    /// Trusted time: never runs backwards even if the source does.
    pub fn now(&mut self) -> u64 {
        self.last_time = self.last_time.max(self.clock.now());
        self.last_time
    }

    fn provisioned(&self) -> Result<&Provisioned<G>, HsmError> {
        self.provisioned.as_ref().ok_or(HsmError::NotJoined)
    }

    /// genPseudonym: fresh transient key pair, `C`, `R`, `T`, and a ring
    /// signature by this module's identity over `ring`.
    pub fn gen_pseudonym<R: RngCore + ?Sized>(
        &mut self,
        ring: &[String],
        validity: u64,
        rng: &mut R,
    ) -> Result<PseudonymCertificate<G>, HsmError> {
        let own = self.provisioned()?.key.id().to_string();
        if validity == 0 {
            return Err(HsmError::InvalidValidity);
        }
        for (i, id) in ring.iter().enumerate() {
            if ring[..i].contains(id) {
                return Err(HsmError::DuplicateRingId(id.clone()));
            }
        }
        let signer_pos = ring.iter().position(|id| *id == own).ok_or(HsmError::OwnIdMissing)?;

        let group = self.registry.group().clone();
        let transient = TransientKey::generate(&group, rng);
        let now = self.now();
        let content = CertContent::<G> {
            scheme: SCHEME_SCHNORR,
            public_key: *transient.public(),
            issued_at: now,
            expires_at: now.saturating_add(validity),
        }
        .to_bytes(&group);
        let cert = self.certify(content, ring, signer_pos, rng)?;
        self.transient = Some(transient);
        Ok(cert)
    }

    fn certify<R: RngCore + ?Sized>(
        &mut self,
        content: Vec<u8>,
        ring: &[String],
        signer_pos: usize,
        rng: &mut R,
    ) -> Result<PseudonymCertificate<G>, HsmError> {
        let window = self.now() / self.min_span_time;
        let p = self.provisioned()?;
        let group = self.registry.group();
        let j = hash_to_group(group, TAG_CONTENT, &content)?;
        let k = hash_to_group(group, TAG_WINDOW, &window.to_be_bytes())?;
        let content_binding = group.mul(&p.f, &j);
        let window_tag = group.mul(&p.f, &k);
        let msg = signed_message(group, &content, &content_binding, &window_tag);
        let signature = ring_sign(&self.registry, &msg, ring, &p.key, signer_pos, rng)?;
        Ok(PseudonymCertificate { content, content_binding, window_tag, signature })
    }

    /// genMessage: signs `payload` with the current transient key.
    pub fn gen_message(&self, payload: &[u8]) -> Result<ApplicationMessage<G>, HsmError> {
        let key = self.transient.as_ref().ok_or(HsmError::NoTransientKey)?;
        Ok(ApplicationMessage {
            payload: payload.to_vec(),
            signature: key.sign(self.registry.group(), payload),
        })
    }

    /// Reveal: recomputes `R' = f·h0(C)` over supervisor-supplied content.
    /// `T'` and `S'` are fresh, over a singleton ring of this module's own
    /// identity.
    pub fn reveal_respond<R: RngCore + ?Sized>(
        &mut self,
        token: Option<&SupervisorToken>,
        content: &[u8],
        rng: &mut R,
    ) -> Result<PseudonymCertificate<G>, HsmError> {
        match token {
            Some(t) if t.authority() == self.supervisor => {}
            _ => return Err(HsmError::Unauthorized),
        }
        let own = vec![self.provisioned()?.key.id().to_string()];
        self.certify(content.to_vec(), &own, 0, rng)
    }
}

impl<G: Group> fmt::Debug for HardwareModule<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HardwareModule")
            .field("identity", &self.identity())
            .field("min_span_time", &self.min_span_time)
            .finish_non_exhaustive()
    }
}
