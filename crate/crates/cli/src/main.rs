use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moapg_cli::{execute, load_config, Command, Hooks, Overrides};

#[derive(Parser)]
#[command(
    name = "moapg",
    version,
    about = "Accelerated proximal gradient experiments for multiobjective problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one solve and write trace.csv and summary.json.
    Solve(Common),
    /// Multi-start Pareto front: front.csv (and front.svg).
    Front(Common),
    /// Certify the convergence rate: rate.csv and certificate.json.
    Rate(Common),
    /// Compare methods against a merit threshold: compare.csv.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    emit_svg: bool,
    /// Scale the radius estimate before certification (negative control).
    #[arg(long, hide = true, default_value_t = 1.0)]
    deflate_r: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Front(c) => (Command::Front, c),
        Cmd::Rate(c) => (Command::Rate, c),
        Cmd::Compare(c) => (Command::Compare, c),
    };
    let overrides = Overrides {
        out: common.out,
        seed: common.seed,
        emit_svg: common.emit_svg,
    };
    let hooks = Hooks {
        r_scale: common.deflate_r,
    };
    let result = load_config(&common.config, &overrides).and_then(|exp| execute(cmd, exp, hooks));
    match result {
        Ok(report) => {
            eprintln!("{}", report.message);
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
