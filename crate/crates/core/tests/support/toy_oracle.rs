//! Straight-line reimplementation of ring signing over `Z_23` with stubbed
//! hashes, written against plain `u64` arithmetic. Shares nothing with the
//! library except the stub definitions and the RNG stream.

#![allow(dead_code)]

use std::sync::Arc;

use avcs::crs::{CrsParams, RingHashes};
use avcs::group::{Group, Toy};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub const Q: u64 = 23;
pub const N: usize = 4;

/// `H0(id)`: low four bits of the byte sum, least significant first.
pub fn stub_bits(id: &str) -> Vec<bool> {
    let sum: u32 = id.bytes().map(u32::from).sum();
    (0..N).map(|i| (sum >> i) & 1 == 1).collect()
}

/// `H1(U) = 7U + 3 mod q` (vanishes at U = 6, exercising the redraw path).
pub fn stub_h1(u: u64) -> u64 {
    (7 * u + 3) % Q
}

/// One-byte ring hash.
pub fn stub_chain(msg: &[u8], input: u8) -> u8 {
    let sum: u32 = msg.iter().map(|b| u32::from(*b)).sum();
    ((sum * 31 + u32::from(input) * 17 + 5) % 256) as u8
}

pub struct Stubs;

impl RingHashes<Toy> for Stubs {
    fn identity_bits(&self, id: &str, n: usize) -> Vec<bool> {
        stub_bits(id)[..n].to_vec()
    }

    fn element_scalar(&self, g: &Toy, e: &<Toy as Group>::Element) -> <Toy as Group>::Scalar {
        g.scalar(stub_h1(e.value()))
    }

    fn chain(&self, _g: &Toy, msg: &[u8], input: &[u8]) -> Vec<u8> {
        vec![stub_chain(msg, input[0])]
    }
}

pub fn stub_params() -> CrsParams<Toy> {
    CrsParams::with_hashes(Toy::new(Q).unwrap(), Arc::new(Stubs))
}

fn inv(a: u64) -> u64 {
    (1..Q).find(|b| a * b % Q == 1).expect("invertible")
}

/// `d = Σ h_i·x_i mod q`; `E = d·1` in this group.
pub fn key(master: &[u64], id: &str) -> u64 {
    stub_bits(id)
        .iter()
        .zip(master)
        .filter(|(b, _)| **b)
        .map(|(_, x)| x)
        .sum::<u64>()
        % Q
}

pub struct Transcript {
    pub start: usize,
    pub glue: u8,
    pub tuples: Vec<(u8, u64, u64)>,
}

/// Ring Sign, step by step: forgeries, γ, the chain, the signer's tuple,
/// and the published start.
pub fn sign(
    master: &[u64],
    msg: &[u8],
    ring: &[String],
    s: usize,
    rng: &mut ChaCha20Rng,
) -> Transcript {
    let r = ring.len();
    let e: Vec<u64> = ring.iter().map(|id| key(master, id)).collect();
    let d = e[s];

    let mut tuples = vec![(0u8, 0u64, 0u64); r];
    for i in 0..r {
        if i == s {
            continue;
        }
        loop {
            let a: u64 = rng.gen_range(1..Q);
            let b: u64 = rng.gen_range(1..Q);
            let u = (a + b * e[i]) % Q;
            let h = stub_h1(u);
            if h == 0 {
                continue;
            }
            let v = (Q - h * inv(b) % Q) % Q;
            let m = a * v % Q;
            tuples[i] = (m as u8, u, v);
            break;
        }
    }

    let gamma: u64 = rng.gen_range(1..Q);
    let gamma = gamma as u8;
    let mut w = vec![0u8; r];
    w[(s + 1) % r] = stub_chain(msg, gamma);
    for step in 1..r {
        let j = (s + step) % r;
        w[(j + 1) % r] = stub_chain(msg, w[j] ^ tuples[j].0);
    }
    let m_s = gamma ^ w[s];

    let l: u64 = rng.gen_range(1..Q);
    let u_s = l;
    let v_s = ((u64::from(m_s) % Q + Q - d * stub_h1(u_s) % Q) % Q) * inv(l) % Q;
    tuples[s] = (m_s, u_s, v_s);

    let start = rng.gen_range(0..r);
    Transcript { start, glue: w[start], tuples }
}

/// Wire encoding of a transcript (one-byte scalars and elements).
pub fn encode(t: &Transcript, ring: &[String]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(ring.len() as u16).to_be_bytes());
    out.extend_from_slice(&(t.start as u16 + 1).to_be_bytes());
    out.push(t.glue);
    for id in ring {
        out.extend_from_slice(&(id.len() as u16).to_be_bytes());
        out.extend_from_slice(id.as_bytes());
    }
    for (m, u, v) in &t.tuples {
        out.extend_from_slice(&[*m, *u as u8, *v as u8]);
    }
    out
}
