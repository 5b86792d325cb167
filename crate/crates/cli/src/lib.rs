//! Commands behind the `avcs` binary: benchmarks, the average-cost
//! calculator, key generation, a demo transcript and the scenario runner.

pub mod avgcost;
pub mod bench;
pub mod demo;
pub mod keyfiles;
pub mod metered;

use std::fs;
use std::io::Write;
use std::path::Path;

use avcs::group::{GroupId, Toy, P192, P256};
use avcs::simnet::{self, RunOutput, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::avgcost::AvgCostInput;
use crate::bench::{linearity, Bench, BenchOp, BenchRecord, LinearFit};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

/// Binds `$g` to the group named by `$id` and evaluates `$body` for it.
macro_rules! with_group {
    ($id:expr, |$g:ident| $body:expr) => {
        match $id {
            GroupId::P192 => {
                let $g = P192::new();
                $body
            }
            GroupId::P256 => {
                let $g = P256::new();
                $body
            }
            GroupId::Toy(q) => {
                let $g = Toy::new(q).map_err(|e| usage(e.to_string()))?;
                $body
            }
        }
    };
}

#[derive(Debug, Clone)]
pub struct BenchSummary {
    pub records: Vec<BenchRecord>,
    pub sign_fit: Option<LinearFit>,
    pub verify_fit: Option<LinearFit>,
}

pub fn cmd_bench(curve: GroupId, r_max: usize, trials: usize, seed: u64) -> CliResult<BenchSummary> {
    if !(1..=bench::MAX_RING_SIZE).contains(&r_max) {
        return Err(usage(format!("--rmax must be in 1..={}", bench::MAX_RING_SIZE)));
    }
    if trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let records = with_group!(curve, |g| Bench::new(g, trials, seed)?.run(r_max)?);
    Ok(BenchSummary {
        sign_fit: linearity(&records, BenchOp::RingSign),
        verify_fit: linearity(&records, BenchOp::RingVerify),
        records,
    })
}

pub fn write_bench_csv(summary: &BenchSummary, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| runtime(anyhow::anyhow!("{}: {e}", path.display())))?;
            bench::write_csv(&summary.records, file)?;
        }
        None => bench::write_csv(&summary.records, std::io::stdout().lock())?,
    }
    Ok(())
}

pub fn cmd_avgcost(input: &AvgCostInput) -> CliResult<f64> {
    input.validate().map_err(usage)?;
    Ok(input.tau())
}

/// Measures the average-cost inputs on `curve` at ring size `r`.
pub fn measure_avgcost(curve: GroupId, r: usize, n: u64, k: u64, trials: usize, seed: u64) -> CliResult<AvgCostInput> {
    if !(1..=bench::MAX_RING_SIZE).contains(&r) {
        return Err(usage(format!("--ring must be in 1..={}", bench::MAX_RING_SIZE)));
    }
    if n == 0 || k == 0 || trials == 0 {
        return Err(usage("n, k and trials must be at least 1"));
    }
    Ok(with_group!(curve, |g| Bench::new(g, trials, seed)?.avgcost_input(r, n, k)?))
}

pub fn cmd_demo(curve: GroupId, ring_size: usize, seed: u64) -> CliResult<String> {
    if !(1..=bench::MAX_RING_SIZE).contains(&ring_size) {
        return Err(usage(format!("--ring must be in 1..={}", bench::MAX_RING_SIZE)));
    }
    Ok(with_group!(curve, |g| demo::transcript(g, ring_size, seed)?))
}

/// Generates a manufactory key and writes both key files to `out`.
/// Returns the path of the public parameter file.
pub fn cmd_keygen(curve: GroupId, manufactory: &str, seed: Option<u64>, out: &Path) -> CliResult<std::path::PathBuf> {
    let mut rng = match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    };
    with_group!(curve, |g| keygen_on(g, manufactory, &mut rng, out))?;
    Ok(out.join(keyfiles::PARAMS_FILE))
}

fn keygen_on<G: avcs::group::Group>(group: G, manufactory: &str, rng: &mut ChaCha20Rng, out: &Path) -> CliResult<()> {
    let mk = keyfiles::generate(group.clone(), manufactory, rng).map_err(|e| usage(e.to_string()))?;
    let (params, master) = keyfiles::to_files(&mk);
    keyfiles::write(out, &params, &master)?;
    let (p, m) = keyfiles::read(out)?;
    keyfiles::from_files(group, &p, &m)?;
    Ok(())
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Scenario::from_toml(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn cmd_sim(scenario: &Path, out: &Path) -> CliResult<RunOutput> {
    let scenario = load_scenario(scenario)?;
    let output = simnet::run(&scenario).map_err(|e| usage(e.to_string()))?;
    output.write_to(out).map_err(|e| runtime(anyhow::anyhow!("{}: {e}", out.display())))?;
    Ok(output)
}

/// One-line-per-fact summary of a run for the terminal.
pub fn write_run_summary<W: Write>(out: &RunOutput, mut w: W) -> std::io::Result<()> {
    let r = &out.report;
    writeln!(w, "curve {}, {} vehicles, {} ms, seed {}", r.curve, r.vehicles, r.duration_ms, r.seed)?;
    writeln!(
        w,
        "honest: {} messages sent, {} accepted ({:.3})",
        r.honest.messages_sent, r.honest.messages_accepted, r.honest.acceptance_ratio
    )?;
    for (reason, n) in &r.rejections {
        if *n > 0 {
            writeln!(w, "rejected {reason}: {n}")?;
        }
    }
    for a in &r.adversaries {
        writeln!(w, "{}: {} frames sent, {} accepted", a.label, a.frames_sent, a.frames_accepted)?;
    }
    Ok(())
}

/// The benchmarks chapter of the book, compiled as doctests.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/benchmarks.md")]
mod book_benchmarks {}
