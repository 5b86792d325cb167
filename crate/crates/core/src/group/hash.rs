//! Domain-separated hashing built on SHA-256.

use sha2::{Digest, Sha256};

use super::{Group, GroupError};

/// Expands `(tag, data)` to `len` bytes.
///
/// Block `i` is `SHA-256(len(tag) ‖ tag ‖ u32be(i) ‖ data)`; blocks are
/// concatenated and truncated. Tags longer than 255 bytes are not supported.
pub fn expand_digest(tag: &[u8], data: &[u8], len: usize) -> Vec<u8> {
    assert!(tag.len() <= u8::MAX as usize, "domain tag too long");
    let mut out = Vec::with_capacity(len.next_multiple_of(32));
    let mut block = 0u32;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update([tag.len() as u8]);
        h.update(tag);
        h.update(block.to_be_bytes());
        h.update(data);
        out.extend_from_slice(&h.finalize());
        block += 1;
    }
    out.truncate(len);
    out
}

/// Hashes into `Z_q` by wide reduction: `2 × scalar_len` digest bytes are
/// reduced modulo `q`.
pub fn hash_to_scalar<G: Group>(group: &G, tag: &[u8], data: &[u8]) -> G::Scalar {
    group.reduce_bytes(&expand_digest(tag, data, 2 * group.scalar_len()))
}

/// Hashes into the group. Never returns the identity.
pub fn hash_to_group<G: Group>(
    group: &G,
    tag: &[u8],
    data: &[u8],
) -> Result<G::Element, GroupError> {
    group.hash_to_element(tag, data)
}

/// The first `n` bits (most significant bit of byte 0 first) of a 256-bit
/// digest of `data` under `tag`.
pub fn identity_bits(tag: &[u8], data: &[u8], n: usize) -> Vec<bool> {
    assert!(n <= 256, "identity digest has 256 bits");
    let digest = expand_digest(tag, data, 32);
    (0..n)
        .map(|i| (digest[i / 8] >> (7 - i % 8)) & 1 == 1)
        .collect()
}
