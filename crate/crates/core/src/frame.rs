//! Broadcast frames.
//!
//! ```text
//! 0x01 ‖ certificate
//! 0x02 ‖ fingerprint(8) ‖ u32 len ‖ payload ‖ signature
//! ```
//!
//! A message frame names its certificate by fingerprint: the first eight
//! bytes of SHA-256 over the certificate's full frame encoding.

use sha2::{Digest, Sha256};

use crate::codec::{DecodeError, Reader};
use crate::group::Group;
use crate::hsm::{ApplicationMessage, PseudonymCertificate};
use crate::transient::TransientSignature;

pub const TAG_CERTIFICATE: u8 = 0x01;
pub const TAG_MESSAGE: u8 = 0x02;

pub type Fingerprint = [u8; 8];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("empty frame")]
    Empty,
    #[error("unknown frame tag {0:#04x}")]
    UnknownTag(u8),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame<G: Group> {
    Certificate(PseudonymCertificate<G>),
    Message { certificate: Fingerprint, message: ApplicationMessage<G> },
}

impl<G: Group> Frame<G> {
    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Frame::Certificate(cert) => {
                out.push(TAG_CERTIFICATE);
                cert.write_to(group, &mut out);
            }
            Frame::Message { certificate, message } => {
                out.push(TAG_MESSAGE);
                out.extend_from_slice(certificate);
                let len = u32::try_from(message.payload.len()).expect("payload fits u32");
                out.extend_from_slice(&len.to_be_bytes());
                out.extend_from_slice(&message.payload);
                message.signature.write_to(group, &mut out);
            }
        }
        out
    }

    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, FrameError> {
        let (&tag, body) = bytes.split_first().ok_or(FrameError::Empty)?;
        let mut reader = Reader::new(body);
        let frame = match tag {
            TAG_CERTIFICATE => Frame::Certificate(PseudonymCertificate::read_from(group, &mut reader)?),
            TAG_MESSAGE => {
                let certificate: Fingerprint = reader.take(8)?.try_into().expect("8 bytes");
                let len = reader.u32()? as usize;
                let payload = reader.take(len)?.to_vec();
                let signature = TransientSignature::read_from(group, &mut reader)?;
                Frame::Message { certificate, message: ApplicationMessage { payload, signature } }
            }
            other => return Err(FrameError::UnknownTag(other)),
        };
        reader.finish()?;
        Ok(frame)
    }
}

/// Fingerprint of a certificate frame given its encoded bytes.
pub fn fingerprint(cert_frame: &[u8]) -> Fingerprint {
    Sha256::digest(cert_frame)[..8].try_into().expect("8 bytes")
}

/// Fingerprint of a certificate, encoding it as a frame first.
pub fn certificate_fingerprint<G: Group>(group: &G, cert: &PseudonymCertificate<G>) -> Fingerprint {
    let mut out = vec![TAG_CERTIFICATE];
    cert.write_to(group, &mut out);
    fingerprint(&out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::crs::{setup, CrsParams, Registry};
    use crate::group::{GroupId, Toy};
    use crate::hsm::{HardwareModule, ManualClock, SupervisorToken};

    fn frames() -> (Toy, PseudonymCertificate<Toy>, HardwareModule<Toy>) {
        let g = Toy::from_id(GroupId::TOY61).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let params = CrsParams::new(g);
        let mk = setup(&params, 256, "acme", &mut rng).unwrap();
        let mut registry = Registry::new(params);
        registry.register(mk.public_key()).unwrap();
        let mut m = HardwareModule::new(
            Arc::new(registry),
            Arc::new(ManualClock::new(100)),
            SupervisorToken::generate(&mut rng).authority(),
            60,
        );
        m.join(&mk, "acme:A", &mut rng).unwrap();
        let ring = vec!["acme:B".to_string(), "acme:A".to_string()];
        let cert = m.gen_pseudonym(&ring, 30, &mut rng).unwrap();
        (g, cert, m)
    }

    #[test]
    fn certificate_round_trip() {
        let (g, cert, _) = frames();
        let frame = Frame::Certificate(cert.clone());
        let bytes = frame.to_bytes(&g);
        assert_eq!(bytes[0], TAG_CERTIFICATE);
        assert_eq!(Frame::from_bytes(&g, &bytes).unwrap(), frame);
        assert_eq!(fingerprint(&bytes), certificate_fingerprint(&g, &cert));
    }

    #[test]
    fn header_errors() {
        let (g, _, _) = frames();
        assert_eq!(Frame::<Toy>::from_bytes(&g, &[]), Err(FrameError::Empty));
        assert_eq!(Frame::<Toy>::from_bytes(&g, &[7, 0]), Err(FrameError::UnknownTag(7)));
        assert!(matches!(
            Frame::<Toy>::from_bytes(&g, &[TAG_MESSAGE, 1, 2]),
            Err(FrameError::Decode(DecodeError::Truncated))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn message_round_trip(payload in proptest::collection::vec(any::<u8>(), 0..300)) {
            let (g, cert, m) = frames();
            let frame = Frame::Message {
                certificate: certificate_fingerprint(&g, &cert),
                message: m.gen_message(&payload).unwrap(),
            };
            let bytes = frame.to_bytes(&g);
            prop_assert_eq!(Frame::from_bytes(&g, &bytes).unwrap(), frame);
            for cut in 0..bytes.len() {
                prop_assert!(Frame::<Toy>::from_bytes(&g, &bytes[..cut]).is_err());
            }
            let mut extended = bytes.clone();
            extended.push(0);
            prop_assert!(Frame::<Toy>::from_bytes(&g, &extended).is_err());
        }
    }
}
