use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tseng_bench::{cmd_certify, cmd_solve, cmd_sweep, cmd_validate, BenchError, CertifyKind, ExperimentConfig, Overrides, Report};

#[derive(Parser)]
#[command(name = "tseng-bench", version, about = "Run inertial Tseng splitting experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = tseng_bench::OUT_DIR_ENV, default_value = "tseng-out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, short)]
    quiet: bool,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, BenchError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        cfg.apply(Overrides {
            seed: self.seed,
            max_iters: self.max_iters,
            tol: self.tol,
        });
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and write its trace.
    Solve(RunArgs),
    /// Run every point of the config's sweep grid.
    Sweep(RunArgs),
    /// Check the schedule (and optional linear-rate) conditions.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Certify a convergence rate from a trace CSV.
    Certify {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum)]
        kind: CertifyKind,
        /// Theoretical contraction factor for the linear certificate.
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, short)]
        quiet: bool,
    },
}

fn run(command: Command) -> (Result<Report, BenchError>, bool) {
    match command {
        Command::Solve(a) => (a.load().and_then(|cfg| cmd_solve(&cfg, &a.out)), a.quiet),
        Command::Sweep(a) => (a.load().and_then(|cfg| cmd_sweep(&cfg, &a.out)).map(|(r, _)| r), a.quiet),
        Command::Validate { config, quiet } => (ExperimentConfig::load(&config).and_then(|cfg| cmd_validate(&cfg)), quiet),
        Command::Certify { trace, kind, q, quiet } => (cmd_certify(&trace, kind, q).map(|(r, _)| r), quiet),
    }
}

fn main() -> ExitCode {
    let (result, quiet) = run(Cli::parse().command);
    let code = match result {
        Ok(report) => {
            if !quiet {
                print!("{}", report.text);
            }
            report.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
