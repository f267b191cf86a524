use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use solvstruct::pipeline::{run_check, run_reduce, run_verify, Options};
use solvstruct::problem::Problem;
use solvstruct::structure::{count_by_sum, count_determining_equations};
use solvstruct::{Error, Exec};

#[derive(Parser)]
#[command(name = "solvstruct", version, about = "Integrate scalar ODEs by quadratures with solvable structures")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Seed for the random-point zero test and constant matching.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Drift and residual tolerance of the numeric oracle.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Lower limit of unevaluated integrals.
    #[arg(long = "base-point", global = true)]
    base_point: Option<f64>,
    /// Run the data-parallel paths sequentially.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Symmetry, covering and structure checks against the file's fixtures.
    Check { file: PathBuf },
    /// Full quadrature cascade.
    Reduce { file: PathBuf },
    /// Numeric oracle: trajectories, drift, solution residuals.
    Verify { file: PathBuf },
    /// Number of determining equations for order k.
    Count { k: u32 },
}

#[derive(Serialize)]
struct CountReport {
    k: u32,
    closed_form: u64,
    sum: u64,
    agree: bool,
}

fn emit<T: Serialize>(format: Format, report: &T, text: String) {
    match format {
        Format::Text => print!("{}", text),
        Format::Json => println!("{}", serde_json::to_string_pretty(report).expect("reports serialize")),
    }
}

fn code(pass: bool) -> ExitCode {
    ExitCode::from(if pass { 0 } else { 1 })
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let opts = Options {
        seed: cli.seed,
        tol: cli.tol,
        base_point: cli.base_point,
        exec: if cli.sequential { Exec::Sequential } else { Exec::default() },
    };
    match &cli.cmd {
        Cmd::Check { file } => {
            let p = Problem::load(file)?;
            let (r, _) = run_check(&p, &opts)?;
            emit(cli.format, &r, r.render());
            Ok(code(r.pass))
        }
        Cmd::Reduce { file } => {
            let p = Problem::load(file)?;
            let r = run_reduce(&p, &opts)?;
            emit(cli.format, &r, r.render());
            Ok(code(r.pass))
        }
        Cmd::Verify { file } => {
            let p = Problem::load(file)?;
            let r = run_verify(&p, &opts)?;
            emit(cli.format, &r, r.render());
            Ok(code(r.pass))
        }
        Cmd::Count { k } => {
            if *k == 0 || *k > 40 {
                return Err(Error::Input(format!("k = {} out of range 1..=40", k)));
            }
            let r = CountReport { k: *k, closed_form: count_determining_equations(*k), sum: count_by_sum(*k), agree: false };
            let r = CountReport { agree: r.closed_form == r.sum, ..r };
            let text = format!("k = {}: {} determining equations (sum {}{})\n", r.k, r.closed_form, r.sum, if r.agree { "" } else { ", MISMATCH" });
            emit(cli.format, &r, text);
            Ok(code(r.agree))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(c) => c,
        Err(e @ (Error::Input(_) | Error::Parse { .. })) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}
