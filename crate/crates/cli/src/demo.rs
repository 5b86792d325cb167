//! End-to-end walkthrough: issue a pseudonym, send a short stream, receive
//! it, then have the supervisor reveal the sender.

use std::fmt::Write as _;

use anyhow::{bail, ensure, Result};
use avcs::deployment::Deployment;
use avcs::group::Group;
use avcs::vehicle::{reveal_check, Outcome, RevealResult, VehicleConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const START: u64 = 1_700_000_000;
const MESSAGES: usize = 3;

/// Runs the walkthrough and returns its transcript. The last line is
/// `reveal: match` on success.
pub fn transcript<G: Group>(group: G, ring_size: usize, seed: u64) -> Result<String> {
    ensure!((1..=32).contains(&ring_size), "ring size must be in 1..=32");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = String::new();
    let deployment = Deployment::new(group.clone(), &["acme", "zenith"], 60, START, &mut rng)?;
    writeln!(out, "setup: curve {}, manufactories acme and zenith, t = {START}", group.id())?;

    let config = VehicleConfig { k: 2, ring_size, ..VehicleConfig::default() };
    let mut sender = deployment.vehicle("acme:V0001", config, &mut rng)?;
    let mut receiver = deployment.vehicle("zenith:V0002", config, &mut rng)?;
    writeln!(out, "join: sender {} and receiver {}", sender.id(), receiver.id())?;

    for i in 0..ring_size.saturating_sub(1) {
        let mfr = if i % 2 == 0 { "zenith" } else { "acme" };
        sender.remember_id(&format!("{mfr}:P{i:04}"));
    }
    let cert = sender.refresh_pseudonym(&mut rng)?;
    let content = cert.content_fields(&group)?;
    writeln!(
        out,
        "pseudonym: ring [{}], valid {}..{}",
        cert.signature.ids.join(", "),
        content.issued_at,
        content.expires_at
    )?;

    let payloads: Vec<Vec<u8>> = (1..=MESSAGES).map(|i| format!("status {i}").into_bytes()).collect();
    let frames = sender.send_stream(&payloads)?;
    writeln!(out, "send: {} frames for {MESSAGES} messages with k = {}", frames.len(), config.k)?;

    for frame in &frames {
        let outcome = receiver.receive(frame);
        let line = match &outcome {
            Outcome::Certificate(fp) => format!("accept certificate {} ({} bytes)", hex::encode(fp), frame.len()),
            Outcome::Message { payload, .. } => {
                format!("accept message {:?} ({} bytes)", String::from_utf8_lossy(payload), frame.len())
            }
            Outcome::Duplicate => format!("duplicate certificate ignored ({} bytes)", frame.len()),
            Outcome::Rejected(reason) => format!("reject {}", reason.as_str()),
        };
        writeln!(out, "receive: {line}")?;
        if let Outcome::Rejected(_) = outcome {
            bail!("receiver rejected an honest frame: {line}");
        }
    }

    let token = deployment.supervisor();
    let content_bytes = cert.content.clone();
    let mut other = deployment.module("zenith:P0000", &mut rng)?;
    let miss = reveal_check(&cert, &other.reveal_respond(Some(token), &content_bytes, &mut rng)?)?;
    writeln!(out, "reveal: query zenith:P0000 -> {}", verdict(miss))?;
    let response = sender.hsm_mut().reveal_respond(Some(token), &content_bytes, &mut rng)?;
    let hit = reveal_check(&cert, &response)?;
    ensure!(miss == RevealResult::NoMatch && hit == RevealResult::Match, "reveal failed");
    writeln!(out, "reveal: query {} -> {}", sender.id(), verdict(hit))?;
    writeln!(out, "reveal: match")?;
    Ok(out)
}

fn verdict(r: RevealResult) -> &'static str {
    match r {
        RevealResult::Match => "match",
        RevealResult::NoMatch => "no match",
    }
}
