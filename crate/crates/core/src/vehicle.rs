//! On-road node logic: the send schedule, the receive pipeline and the
//! identity buffer used to build rings.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::{Rng, RngCore};

use crate::crs::parse_id;
use crate::frame::{fingerprint, Fingerprint, Frame};
use crate::group::{hash_to_group, Group};
use crate::hsm::{HardwareModule, HsmError, PseudonymCertificate, TAG_CONTENT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VehicleConfig {
    /// A certificate is re-sent before every `k`-th message.
    pub k: usize,
    /// Requested ring size `r`; the ring shrinks when the id buffer is short.
    pub ring_size: usize,
    /// Capacity of the identity buffer.
    pub id_capacity: usize,
    /// Certificate validity, seconds.
    pub validity: u64,
    /// Tolerance applied to both ends of a certificate's validity window.
    pub clock_skew: u64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        VehicleConfig { k: 10, ring_size: 10, id_capacity: 64, validity: 300, clock_skew: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectReason {
    Sybil,
    Expired,
    Revoked,
    BadSignature,
    NoCert,
    Malformed,
}

impl RejectReason {
    pub const ALL: [RejectReason; 6] = [
        RejectReason::Sybil,
        RejectReason::Expired,
        RejectReason::Revoked,
        RejectReason::BadSignature,
        RejectReason::NoCert,
        RejectReason::Malformed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Sybil => "sybil",
            RejectReason::Expired => "expired",
            RejectReason::Revoked => "revoked",
            RejectReason::BadSignature => "bad-signature",
            RejectReason::NoCert => "no-cert",
            RejectReason::Malformed => "malformed",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// A new certificate entered the pseudonym buffer.
    Certificate(Fingerprint),
    /// A message verified against a buffered certificate.
    Message { certificate: Fingerprint, payload: Vec<u8> },
    /// Byte-identical to a buffered certificate.
    Duplicate,
    Rejected(RejectReason),
}

impl Outcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Outcome::Certificate(_) | Outcome::Message { .. })
    }

    pub fn reason(&self) -> Option<RejectReason> {
        match self {
            Outcome::Rejected(r) => Some(*r),
            _ => None,
        }
    }

    /// `accept`, `duplicate` or `reject`.
    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::Certificate(_) | Outcome::Message { .. } => "accept",
            Outcome::Duplicate => "duplicate",
            Outcome::Rejected(_) => "reject",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevealResult {
    Match,
    NoMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VehicleError {
    #[error("no pseudonym certificate; refresh first")]
    NoPseudonym,
    #[error("reveal response is over different certificate content")]
    ContentMismatch,
    #[error("invalid vehicle config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Hsm(#[from] HsmError),
}

struct BufferedCert<G: Group> {
    content: Vec<u8>,
    content_binding: G::Element,
    public_key: G::Element,
    issued_at: u64,
    expires_at: u64,
    window_tag: Vec<u8>,
}

struct Current {
    frame: Vec<u8>,
    fingerprint: Fingerprint,
    /// Messages sent since the stream started.
    sent: usize,
    last_was_cert: bool,
}

/// The state of one vehicle. Single owner; frames are processed one at a
/// time.
pub struct Vehicle<G: Group> {
    hsm: HardwareModule<G>,
    own_id: String,
    config: VehicleConfig,
    pseudonyms: IndexMap<Fingerprint, BufferedCert<G>>,
    /// Window-tag encoding to the buffered certificate carrying it.
    by_window_tag: HashMap<Vec<u8>, Fingerprint>,
    id_buf: VecDeque<String>,
    rogue: Vec<G::Scalar>,
    current: Option<Current>,
}

impl<G: Group> Vehicle<G> {
    /// Wraps a joined module.
    pub fn new(hsm: HardwareModule<G>, config: VehicleConfig) -> Result<Self, VehicleError> {
        if config.k == 0 {
            return Err(VehicleError::Config("k must be at least 1"));
        }
        if config.ring_size == 0 {
            return Err(VehicleError::Config("ring_size must be at least 1"));
        }
        if config.validity == 0 {
            return Err(VehicleError::Config("validity must be positive"));
        }
        let own_id = hsm.identity().ok_or(HsmError::NotJoined)?.to_string();
        Ok(Vehicle {
            hsm,
            own_id,
            config,
            pseudonyms: IndexMap::new(),
            by_window_tag: HashMap::new(),
            id_buf: VecDeque::new(),
            rogue: Vec::new(),
            current: None,
        })
    }

    pub fn id(&self) -> &str {
        &self.own_id
    }

    pub fn config(&self) -> &VehicleConfig {
        &self.config
    }

    pub fn hsm(&self) -> &HardwareModule<G> {
        &self.hsm
    }

    pub fn hsm_mut(&mut self) -> &mut HardwareModule<G> {
        &mut self.hsm
    }

    pub fn id_buffer(&self) -> impl ExactSizeIterator<Item = &str> {
        self.id_buf.iter().map(String::as_str)
    }

    pub fn buffered_certificates(&self) -> usize {
        self.pseudonyms.len()
    }

    pub fn current_certificate_frame(&self) -> Option<&[u8]> {
        self.current.as_ref().map(|c| c.frame.as_slice())
    }

    /// Adds an id to the buffer, evicting the oldest entry when full.
    /// Returns whether the id was new and valid.
    pub fn remember_id(&mut self, id: &str) -> bool {
        if id == self.own_id || parse_id(id).is_err() || self.id_buf.iter().any(|x| x == id) {
            return false;
        }
        if self.config.id_capacity == 0 {
            return false;
        }
        if self.id_buf.len() == self.config.id_capacity {
            self.id_buf.pop_front();
        }
        self.id_buf.push_back(id.to_string());
        true
    }

    /// Own id at a uniform position among `min(r - 1, |id_buf|)` distinct
    /// buffer ids sampled without replacement.
    pub fn choose_ring<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<String> {
        let others = (self.config.ring_size - 1).min(self.id_buf.len());
        let mut ring: Vec<String> = sample(rng, self.id_buf.len(), others)
            .into_iter()
            .map(|i| self.id_buf[i].clone())
            .collect();
        let pos = rng.gen_range(0..=ring.len());
        ring.insert(pos, self.own_id.clone());
        ring
    }

    /// Issues a new pseudonym over a freshly chosen ring and starts a new
    /// send stream with it.
    pub fn refresh_pseudonym<R: RngCore + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> Result<PseudonymCertificate<G>, VehicleError> {
        let ring = self.choose_ring(rng);
        let cert = self.hsm.gen_pseudonym(&ring, self.config.validity, rng)?;
        let frame = Frame::Certificate(cert.clone()).to_bytes(self.hsm.group());
        self.current = Some(Current {
            fingerprint: fingerprint(&frame),
            frame,
            sent: 0,
            last_was_cert: false,
        });
        Ok(cert)
    }

    /// Restarts the send schedule without changing the pseudonym.
    pub fn begin_stream(&mut self) {
        if let Some(cur) = &mut self.current {
            cur.sent = 0;
            cur.last_was_cert = false;
        }
    }

    /// Frames for the next message of the current stream: the certificate
    /// at stream start and before every `k`-th message, never twice in a
    /// row, then the signed message.
    pub fn send(&mut self, payload: &[u8]) -> Result<Vec<Vec<u8>>, VehicleError> {
        let message = self.hsm.gen_message(payload)?;
        let k = self.config.k;
        let cur = self.current.as_mut().ok_or(VehicleError::NoPseudonym)?;
        let i = cur.sent + 1;
        let mut frames = Vec::with_capacity(2);
        if (cur.sent == 0 || i % k == 0) && !cur.last_was_cert {
            frames.push(cur.frame.clone());
        }
        let frame = Frame::Message { certificate: cur.fingerprint, message };
        frames.push(frame.to_bytes(self.hsm.group()));
        cur.sent = i;
        cur.last_was_cert = false;
        Ok(frames)
    }

    /// `send` over a whole batch as one fresh stream.
    pub fn send_stream(&mut self, payloads: &[Vec<u8>]) -> Result<Vec<Vec<u8>>, VehicleError> {
        if self.current.is_none() {
            return Err(VehicleError::NoPseudonym);
        }
        self.begin_stream();
        let mut out = Vec::new();
        for p in payloads {
            out.extend(self.send(p)?);
        }
        Ok(out)
    }

    /// Adds `f` to the rogue list and drops buffered certificates it
    /// produced. Idempotent.
    pub fn revoke(&mut self, f: G::Scalar) {
        if self.rogue.contains(&f) {
            return;
        }
        self.rogue.push(f);
        let group = self.hsm.group().clone();
        let stale: Vec<Fingerprint> = self
            .pseudonyms
            .iter()
            .filter(|(_, c)| c.revoked_by(&group, &f))
            .map(|(fp, _)| *fp)
            .collect();
        for fp in stale {
            self.evict(&fp);
        }
    }

    pub fn rogue_list_len(&self) -> usize {
        self.rogue.len()
    }

    fn evict(&mut self, fp: &Fingerprint) {
        if let Some(cert) = self.pseudonyms.shift_remove(fp) {
            self.by_window_tag.remove(&cert.window_tag);
        }
    }

    fn prune(&mut self, now: u64) {
        let horizon = self.config.clock_skew + self.hsm.min_span_time();
        let stale: Vec<Fingerprint> = self
            .pseudonyms
            .iter()
            .filter(|(_, c)| now > c.expires_at.saturating_add(horizon))
            .map(|(fp, _)| *fp)
            .collect();
        for fp in stale {
            self.evict(&fp);
        }
    }

    /// The receive pipeline. Never fails: hostile input yields a typed
    /// rejection.
    pub fn receive(&mut self, bytes: &[u8]) -> Outcome {
        let now = self.hsm.now();
        self.prune(now);
        let group = self.hsm.group().clone();
        match Frame::from_bytes(&group, bytes) {
            Err(_) => Outcome::Rejected(RejectReason::Malformed),
            Ok(Frame::Certificate(cert)) => self.receive_certificate(&group, cert, fingerprint(bytes), now),
            Ok(Frame::Message { certificate, message }) => {
                let Some(buffered) = self.pseudonyms.get(&certificate) else {
                    return Outcome::Rejected(RejectReason::NoCert);
                };
                if !self.within_validity(buffered.issued_at, buffered.expires_at, now) {
                    return Outcome::Rejected(RejectReason::Expired);
                }
                if !message.verify(&group, &buffered.public_key) {
                    return Outcome::Rejected(RejectReason::BadSignature);
                }
                Outcome::Message { certificate, payload: message.payload }
            }
        }
    }

    fn within_validity(&self, issued_at: u64, expires_at: u64, now: u64) -> bool {
        let skew = self.config.clock_skew;
        now <= expires_at.saturating_add(skew) && issued_at <= now.saturating_add(skew)
    }

    fn receive_certificate(
        &mut self,
        group: &G,
        cert: PseudonymCertificate<G>,
        fp: Fingerprint,
        now: u64,
    ) -> Outcome {
        if self.pseudonyms.contains_key(&fp) {
            return Outcome::Duplicate;
        }
        let window_tag = group.encode(&cert.window_tag);
        if self.by_window_tag.contains_key(&window_tag) {
            return Outcome::Rejected(RejectReason::Sybil);
        }
        let Ok(content) = cert.content_fields(group) else {
            return Outcome::Rejected(RejectReason::Malformed);
        };
        if !self.within_validity(content.issued_at, content.expires_at, now) {
            return Outcome::Rejected(RejectReason::Expired);
        }
        if !self.rogue.is_empty() {
            let Ok(j) = hash_to_group(group, TAG_CONTENT, &cert.content) else {
                return Outcome::Rejected(RejectReason::Malformed);
            };
            if self.rogue.iter().any(|f| group.mul(f, &j) == cert.content_binding) {
                return Outcome::Rejected(RejectReason::Revoked);
            }
        }
        if cert.verify_signature(self.hsm.registry()).is_err() {
            return Outcome::Rejected(RejectReason::BadSignature);
        }

        self.by_window_tag.insert(window_tag.clone(), fp);
        self.pseudonyms.insert(
            fp,
            BufferedCert {
                content: cert.content.clone(),
                content_binding: cert.content_binding,
                public_key: content.public_key,
                issued_at: content.issued_at,
                expires_at: content.expires_at,
                window_tag,
            },
        );
        for id in &cert.signature.ids {
            self.remember_id(id);
        }
        Outcome::Certificate(fp)
    }
}

impl<G: Group> BufferedCert<G> {
    fn revoked_by(&self, group: &G, f: &G::Scalar) -> bool {
        hash_to_group(group, TAG_CONTENT, &self.content)
            .map(|j| group.mul(f, &j) == self.content_binding)
            .unwrap_or(false)
    }
}

impl<G: Group> fmt::Debug for Vehicle<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Vehicle")
            .field("id", &self.own_id)
            .field("config", &self.config)
            .field("pseudonyms", &self.pseudonyms.len())
            .field("id_buf", &self.id_buf.len())
            .field("rogue", &self.rogue.len())
            .finish()
    }
}

/// Supervisor-side comparison of a certificate with a module's reveal
/// response: match iff the content bindings agree.
pub fn reveal_check<G: Group>(
    original: &PseudonymCertificate<G>,
    response: &PseudonymCertificate<G>,
) -> Result<RevealResult, VehicleError> {
    if original.content != response.content {
        return Err(VehicleError::ContentMismatch);
    }
    Ok(if original.content_binding == response.content_binding {
        RevealResult::Match
    } else {
        RevealResult::NoMatch
    })
}
