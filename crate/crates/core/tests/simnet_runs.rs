use std::collections::BTreeMap;
use std::path::PathBuf;

use avcs::simnet::{run, Adversary, Scenario};
use serde_json::Value;

fn scenario(text: &str) -> Scenario {
    Scenario::from_toml(text).unwrap()
}

fn bundled(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    scenario(&std::fs::read_to_string(path).unwrap())
}

fn events(log: &str) -> Vec<Value> {
    log.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn clean_run_accepts_everything() {
    let out = run(&bundled("clean.toml")).unwrap();
    let r = &out.report;
    assert_eq!(r.honest.messages_sent, 20);
    assert_eq!(r.honest.messages_accepted, 20);
    assert_eq!(r.rejections.values().sum::<u64>(), 0);
    assert_eq!(r.medium.dropped, 0);
}

#[test]
fn counters_sum_to_deliveries() {
    let out = run(&bundled("attacks.toml")).unwrap();
    let r = &out.report;
    let total: u64 = r.receivers.iter().map(|v| v.total()).sum();
    assert_eq!(total, r.medium.delivered);
    assert_eq!(out.events.lines().count() as u64, r.medium.delivered);
    assert_eq!(r.medium.delivered + r.medium.dropped, {
        let n = r.vehicles as u64;
        // Every transmission is offered to every honest vehicle but its sender.
        let from_honest = r.honest.messages_sent + r.honest.certificates_sent;
        let from_adversaries: u64 = r.adversaries.iter().map(|a| a.frames_sent).sum();
        from_honest * (n - 1) + from_adversaries * n
    });
}

#[test]
fn sybil_rejected_by_every_receiver_of_the_first() {
    let s = bundled("sybil.toml");
    let Adversary::Sybil { count, .. } = s.adversaries[0] else { panic!() };
    let out = run(&s).unwrap();
    let mut accepted: BTreeMap<String, u64> = BTreeMap::new();
    let mut sybil: BTreeMap<String, u64> = BTreeMap::new();
    for e in events(&out.events) {
        if e["src"] != "sybil-0" || e["frame"] != "cert" {
            continue;
        }
        let dst = e["dst"].as_str().unwrap().to_string();
        match (e["outcome"].as_str().unwrap(), e["reason"].as_str()) {
            ("accept", _) => *accepted.entry(dst).or_default() += 1,
            ("reject", Some("sybil")) => *sybil.entry(dst).or_default() += 1,
            other => panic!("unexpected {other:?}"),
        }
    }
    assert_eq!(accepted.len(), s.vehicles);
    for (dst, n) in &accepted {
        assert_eq!(*n, 1);
        assert_eq!(sybil[dst], count as u64 - 1);
    }
    let latency = out.report.adversaries[0].sybil_detection_latency_ms.unwrap();
    assert!(latency <= 1_000 + 50, "{latency}");
}

#[test]
fn recovery_under_loss() {
    let out = run(&bundled("lossy.toml")).unwrap();
    let r = &out.report;
    assert!(r.rejections["no-cert"] > 0);
    assert!(r.honest.acceptance_ratio >= 0.45, "{}", r.honest.acceptance_ratio);

    // After a no-cert rejection, the same link later accepts messages again.
    let log = events(&out.events);
    let first_no_cert = log.iter().position(|e| e["reason"] == "no-cert").unwrap();
    let (src, dst) = (&log[first_no_cert]["src"], &log[first_no_cert]["dst"]);
    assert!(log[first_no_cert..]
        .iter()
        .any(|e| &e["src"] == src && &e["dst"] == dst && e["frame"] == "msg" && e["outcome"] == "accept"));
}

#[test]
fn attacks_gain_nothing() {
    let out = run(&bundled("attacks.toml")).unwrap();
    for adv in &out.report.adversaries {
        let rejected: u64 = adv.rejections.values().sum();
        match adv.kind.as_str() {
            "forger" | "masquerade" | "replay" => {
                assert_eq!(adv.frames_accepted, 0, "{}", adv.label);
                assert!(rejected > 0, "{}", adv.label);
            }
            "compromised" => {
                assert!(adv.frames_accepted > 0);
                assert!(adv.rejections["revoked"] > 0);
            }
            other => panic!("{other}"),
        }
    }
    let by_kind = |k: &str| out.report.adversaries.iter().find(|a| a.kind == k).unwrap();
    assert!(by_kind("forger").rejections["bad-signature"] > 0);
    let masq = by_kind("masquerade");
    assert!(masq.rejections["bad-signature"] > 0);
    let replay = by_kind("replay");
    assert!(replay.rejections.keys().all(|k| k == "expired" || k == "no-cert"), "{:?}", replay.rejections);
    assert_eq!(out.report.revocations_ms, [45_000]);
}

#[test]
fn deterministic_logs() {
    let s = bundled("attacks.toml");
    let a = run(&s).unwrap();
    let b = run(&s).unwrap();
    assert_eq!(a.events, b.events);
    assert_eq!(a.report, b.report);
    let mut other = s.clone();
    other.seed += 1;
    assert_ne!(run(&other).unwrap().events, a.events);
}

#[test]
fn toy_group_runs() {
    let s = scenario(
        "seed = 3\ncurve = \"toy\"\nvehicles = 3\nduration = 20\n\
         [[adversary]]\nkind = \"forger\"\nstart = 1\ncount = 3\n",
    );
    let out = run(&s).unwrap();
    assert_eq!(out.report.curve, "toy");
    assert_eq!(out.report.adversaries[0].frames_accepted, 0);
    assert_eq!(out.report.adversaries[0].rejections["bad-signature"], 3 * 3);
}

#[test]
fn outputs_written() {
    let out = run(&bundled("clean.toml")).unwrap();
    let dir = std::env::temp_dir().join(format!("avcs-simnet-{}", std::process::id()));
    out.write_to(&dir).unwrap();
    let csv = std::fs::read_to_string(dir.join("counters.csv")).unwrap();
    assert!(csv.starts_with("vehicle,accepted_certificates,accepted_messages,"));
    assert_eq!(csv.lines().count(), 3);
    let report: toml::Value = std::fs::read_to_string(dir.join("report.toml")).unwrap().parse().unwrap();
    assert_eq!(report["honest"]["messages_accepted"].as_integer(), Some(20));
    std::fs::remove_dir_all(dir).unwrap();
}
