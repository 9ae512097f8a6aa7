use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use robust_eq::config::PerturbKind;
use robust_eq::{execute, Command, Overrides};

#[derive(Parser)]
#[command(name = "robust-eq", version, about = "Robustness certificates and learning-dynamics experiments for continuous games")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Classify the reference point; exit 0 robust, 1 other stationary, 2 not stationary.
    Certify(Common),
    /// Run one seeded trajectory and write trajectory.csv and summary.json.
    Simulate(Common),
    /// Monte Carlo convergence estimate over many seeds; exit 3 if a threshold is missed.
    Sweep(Common),
    /// Build a collapse perturbation and report distances and certificates.
    Perturb(Common),
    /// Run once and fit the convergence rate.
    Rate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, env = "ROBUST_EQ_THREADS")]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum)]
    kind: Option<PerturbKind>,
    /// Override a config field, e.g. `--set run.horizon=1000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, c) = match cli.command {
        Sub::Certify(c) => (Command::Certify, c),
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::Sweep(c) => (Command::Sweep, c),
        Sub::Perturb(c) => (Command::Perturb, c),
        Sub::Rate(c) => (Command::Rate, c),
    };
    let jobs = c
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let ov = Overrides {
        seed: c.seed,
        seeds: c.seeds,
        out: c.out,
        eps: c.eps,
        kind: c.kind,
        set: c.set,
    };
    match execute(cmd, &c.config, &ov, jobs) {
        Ok(o) => {
            // A closed pipe (e.g. `| head`) is not an error of the run.
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&o.report).expect("json"));
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
