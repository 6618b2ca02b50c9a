use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use horofano::io::{load_problem, run, Command, RunOptions};

/// Canonical-metric invariants of Fano horospherical manifolds.
#[derive(Debug, Parser)]
#[command(name = "horofano", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Problem JSON.
    #[arg(long)]
    input: PathBuf,
    /// Report JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace CSV of the xi* sweep; the xi = 0 sweep goes to a `_xi0` sibling.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Soliton tolerance on |F(xi)| / V.
    #[arg(long)]
    tol: Option<f64>,
    /// Grid points of the continuity solver.
    #[arg(long)]
    grid: Option<usize>,
    /// Half-width of the continuity box.
    #[arg(long = "box")]
    half_width: Option<f64>,
    /// First t of the continuity path.
    #[arg(long)]
    t0: Option<f64>,
    /// Continue when Q fails the reflectivity conditions.
    #[arg(long)]
    allow_nonreflective: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        tol: cli.tol,
        grid: cli.grid,
        half_width: cli.half_width,
        t0: cli.t0,
        trace: cli.trace.clone(),
    };
    let result = load_problem(&cli.input, cli.allow_nonreflective).and_then(|lp| run(cli.command, &lp, &opts));
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("horofano: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, report.to_json()) {
                eprintln!("horofano: cannot write {}: {e}", path.display());
                return ExitCode::from(horofano::io::EXIT_SOLVER as u8);
            }
            print!("{}", report.summary());
        }
        None => {
            print!("{}", report.to_json());
            eprint!("{}", report.summary());
        }
    }
    ExitCode::SUCCESS
}
