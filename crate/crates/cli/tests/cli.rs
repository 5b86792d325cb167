use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use avcs::group::{GroupId, P256};
use avcs_cli::bench::CSV_HEADER;
use avcs_cli::keyfiles;

fn avcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avcs")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn bench_csv_header_is_pinned() {
    assert_eq!(
        CSV_HEADER,
        "curve,ring_size,op,trials,mean_ms,median_ms,p95_ms,scalar_mul_count,extraction_count,serialized_size"
    );
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = avcs(&["bench", "--curve", "p192", "--rmax", "5", "--trials", "2", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5 * 6);
    let cell = |op: &str, r: &str, col: usize| {
        rows.iter().find(|row| row[2] == op && row[1] == r).unwrap()[col].to_string()
    };
    assert_eq!(cell("ring_sign", "5", 7), "9");
    assert_eq!(cell("ring_verify", "5", 7), "15");
    assert_eq!(cell("ring_sign", "5", 8), "5");
    assert_eq!(cell("gen_message", "5", 8), "");
    assert!(String::from_utf8_lossy(&out.stderr).contains("R² ="));
}

#[test]
fn avgcost_examples() {
    let reference = [
        "avgcost", "--n", "100", "--k", "10", "--tgm", "2.1", "--tgp", "52.6", "--tsm", "0.5", "--tsp", "9.7",
        "--tvm", "6.7", "--tvp", "67.4",
    ];
    assert_eq!(stdout(&avcs(&reference)).trim(), "11.4700");
    let collapsed = [
        "avgcost", "--n", "1", "--k", "1", "--tgm", "1", "--tgp", "2", "--tsm", "3", "--tsp", "4", "--tvm", "5",
        "--tvp", "6",
    ];
    assert_eq!(stdout(&avcs(&collapsed)).trim(), "21.0000");
    let zero = [
        "avgcost", "--n", "7", "--k", "3", "--tgm", "0", "--tgp", "0", "--tsm", "0", "--tsp", "0", "--tvm", "0",
        "--tvp", "0",
    ];
    assert_eq!(stdout(&avcs(&zero)).trim(), "0.0000");
}

#[test]
fn measured_avgcost_is_amortized() {
    let input = avcs_cli::measure_avgcost(GroupId::TOY61, 10, 100, 10, 3, 1).unwrap();
    let tau = avcs_cli::cmd_avgcost(&input).unwrap();
    assert!(tau > 0.0 && tau < input.pseudonym_cost());
}

#[test]
fn demo_transcript() {
    let out = avcs(&["demo", "--ring", "3", "--curve", "p192"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("pseudonym: ring [") && l.matches(", ").count() == 3));
    assert!(text.contains("reveal: query zenith:P0000 -> no match"));
    assert_eq!(text.lines().last(), Some("reveal: match"));
    let toy = avcs_cli::cmd_demo(GroupId::TOY61, 1, 9).unwrap();
    assert!(toy.ends_with("reveal: match\n"));
}

#[test]
fn keygen_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = avcs(&["keygen", "--curve", "p256", "--out", dir.path().to_str().unwrap(), "--seed", "5"]);
    assert!(out.status.success());
    let (params, master) = keyfiles::read(dir.path()).unwrap();
    assert_eq!(params.curve, GroupId::P256);
    assert_eq!(params.manufactory, "acme");
    let mk = keyfiles::from_files(P256::new(), &params, &master).unwrap();
    assert_eq!(keyfiles::to_files(&mk), (params, master));
}

#[test]
fn sim_on_sybil_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = avcs(&["sim", "--scenario", scenario("sybil.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("rejected sybil:"));
    let report: toml::Value = std::fs::read_to_string(dir.path().join("report.toml")).unwrap().parse().unwrap();
    assert!(report["rejections"]["sybil"].as_integer().unwrap() > 0);
    for f in ["events.ndjson", "counters.csv"] {
        assert!(dir.path().join(f).is_file());
    }
}

#[test]
fn exit_codes() {
    assert_eq!(avcs(&[]).status.code(), Some(2));
    assert_eq!(avcs(&["bench", "--rmax", "33"]).status.code(), Some(2));
    assert_eq!(avcs(&["bench", "--curve", "p999"]).status.code(), Some(2));
    assert_eq!(avcs(&["avgcost", "--n", "0", "--k", "1", "--measure"]).status.code(), Some(2));
    assert_eq!(avcs(&["demo", "--ring", "0"]).status.code(), Some(2));
    assert_eq!(avcs(&["sim", "--scenario", "/nonexistent.toml", "--out", "/tmp"]).status.code(), Some(2));
    assert_eq!(avcs(&["--help"]).status.code(), Some(0));

    // An unwritable destination is a runtime failure.
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"").unwrap();
    let out = dir.path().join("file/sub");
    let code = avcs(&["keygen", "--curve", "toy", "--seed", "1", "--out", out.to_str().unwrap()]).status.code();
    assert_eq!(code, Some(3));
}
