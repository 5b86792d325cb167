use std::path::PathBuf;
use std::process::ExitCode;

use avcs::group::GroupId;
use avcs_cli::avgcost::AvgCostInput;
use avcs_cli::{CliError, CliResult, EXIT_USAGE};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "avcs", version, about = "Anonymous vehicular certificates: benchmarks, demo and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time every operation for ring sizes 1..=rmax and write CSV.
    Bench {
        #[arg(long, default_value = "p192")]
        curve: GroupId,
        #[arg(long, default_value_t = 10)]
        rmax: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Amortized per-message cost of a pseudonym stream.
    Avgcost(AvgCostArgs),
    /// Run a scenario file and write events, report and counters.
    Sim {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print an annotated sign, send, receive and reveal transcript.
    Demo {
        #[arg(long, default_value_t = 3)]
        ring: usize,
        #[arg(long, default_value = "p192")]
        curve: GroupId,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Generate a manufactory master key.
    Keygen {
        #[arg(long)]
        curve: GroupId,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "acme")]
        manufactory: String,
        /// Deterministic key for testing; system entropy when omitted.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct AvgCostArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    k: u64,
    #[arg(long, required_unless_present = "measure")]
    tgm: Option<f64>,
    #[arg(long, required_unless_present = "measure")]
    tgp: Option<f64>,
    #[arg(long, required_unless_present = "measure")]
    tsm: Option<f64>,
    #[arg(long, required_unless_present = "measure")]
    tsp: Option<f64>,
    #[arg(long, required_unless_present = "measure")]
    tvm: Option<f64>,
    #[arg(long, required_unless_present = "measure")]
    tvp: Option<f64>,
    /// Measure the times on this machine instead of taking them as flags.
    #[arg(long, conflicts_with_all = ["tgm", "tgp", "tsm", "tsp", "tvm", "tvp"])]
    measure: bool,
    #[arg(long, default_value = "p192", requires = "measure")]
    curve: GroupId,
    #[arg(long, default_value_t = 10, requires = "measure")]
    ring: usize,
    #[arg(long, default_value_t = 20, requires = "measure")]
    trials: usize,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Bench { curve, rmax, trials, seed, out } => {
            let summary = avcs_cli::cmd_bench(curve, rmax, trials, seed)?;
            avcs_cli::write_bench_csv(&summary, out.as_deref())?;
            for (op, fit) in [("ring_sign", summary.sign_fit), ("ring_verify", summary.verify_fit)] {
                if let Some(fit) = fit {
                    eprintln!(
                        "{op}: median ms = {:.4}·r + {:.4}, R² = {:.4}",
                        fit.slope, fit.intercept, fit.r_squared
                    );
                }
            }
        }
        Command::Avgcost(a) => {
            let input = if a.measure {
                avcs_cli::measure_avgcost(a.curve, a.ring, a.n, a.k, a.trials, 1)?
            } else {
                AvgCostInput {
                    n: a.n,
                    k: a.k,
                    t_gm: a.tgm.unwrap_or_default(),
                    t_gp: a.tgp.unwrap_or_default(),
                    t_sm: a.tsm.unwrap_or_default(),
                    t_sp: a.tsp.unwrap_or_default(),
                    t_vm: a.tvm.unwrap_or_default(),
                    t_vp: a.tvp.unwrap_or_default(),
                }
            };
            let tau = avcs_cli::cmd_avgcost(&input)?;
            if a.measure {
                eprintln!(
                    "measured ms: tgm {:.4} tgp {:.4} tsm {:.4} tsp {:.4} tvm {:.4} tvp {:.4}",
                    input.t_gm, input.t_gp, input.t_sm, input.t_sp, input.t_vm, input.t_vp
                );
            }
            println!("{tau:.4}");
        }
        Command::Sim { scenario, out } => {
            let output = avcs_cli::cmd_sim(&scenario, &out)?;
            avcs_cli::write_run_summary(&output, std::io::stdout().lock())
                .map_err(|e| CliError::Runtime(e.into()))?;
        }
        Command::Demo { ring, curve, seed } => print!("{}", avcs_cli::cmd_demo(curve, ring, seed)?),
        Command::Keygen { curve, out, manufactory, seed } => {
            let path = avcs_cli::cmd_keygen(curve, &manufactory, seed, &out)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
