//! `robreg`: worst-case losses, equivalence checks and robust solvers from
//! the command line.
//!
//! Exit status: 0 when every check passed, 2 for bad arguments or problem
//! files, 3 when a numerical check failed or a solver stopped early (the
//! report is still written in that case).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

mod commands;
mod problem;
mod report;
mod tables;

use report::{Failure, Settings};

#[derive(Parser, Debug)]
#[command(name = "robreg", version, about = "Robust regression: worst cases, equivalent regularizers and solvers")]
struct Cli {
    /// Seed for every randomized step (default: the problem file's seed, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Threads for independent trials; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Tolerance for equality checks.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Write a JSON report to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a loss and uncertainty set and test the verdict on random instances.
    CheckEquiv(commands::CheckEquivArgs),
    /// Nominal, regularized or robust linear regression.
    Solve(commands::FileArgs),
    /// Least quantile regression, nominal or robust.
    Lqs(commands::FileArgs),
    /// Matrix completion, PCA or robust PCA.
    Matrix(commands::FileArgs),
    /// Equivalence table with every cell checked numerically, as Markdown.
    Table {
        which: tables::TableKind,
        /// Random instances per cell.
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// `max ‖u‖_a / ‖u‖_b` over nonzero u in R^m.
    Delta(commands::DeltaArgs),
    /// Dual exponent, dual norm and a dual-norm maximizer.
    Dual(commands::DualArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckEquiv(_) => "check-equiv",
            Command::Solve(_) => "solve",
            Command::Lqs(_) => "lqs",
            Command::Matrix(_) => "matrix",
            Command::Table { .. } => "table",
            Command::Delta(_) => "delta",
            Command::Dual(_) => "dual",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(2);
    }
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        eprintln!("error: --tol must be positive and finite");
        return ExitCode::from(2);
    }
    let settings = Settings {
        seed: cli.seed,
        workers: cli.workers,
        tol: cli.tol,
    };
    let started = Instant::now();
    let outcome = match &cli.command {
        Command::CheckEquiv(a) => commands::check_equiv(a, &settings),
        Command::Solve(a) => commands::solve(a, &settings),
        Command::Lqs(a) => commands::lqs(a, &settings),
        Command::Matrix(a) => commands::matrix(a, &settings),
        Command::Table { which, trials } => tables::table(*which, *trials, &settings),
        Command::Delta(a) => commands::delta_cmd(a, &settings),
        Command::Dual(a) => commands::dual_cmd(a, &settings),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            return ExitCode::from(3);
        }
    };
    print!("{}", outcome.text);
    if let Some(path) = &cli.json {
        let elapsed = cli.timing.then(|| started.elapsed().as_secs_f64() * 1e3);
        let doc = report::build(cli.command.name(), &settings, &outcome, elapsed);
        if let Err(e) = report::write_json(path, &doc) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    } else if cli.timing {
        println!("elapsed {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
