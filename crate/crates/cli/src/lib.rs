//! Command-line harness for `scatterkit`.
//!
//! [`run`] parses argv, sets up the worker pool and dispatches to a
//! subcommand. Exit codes: 0 success, 1 I/O trouble or a failed acceptance
//! criterion, 2 bad flags or inputs, 3 numeric failure.

use std::ffi::OsString;
use std::fmt;

use clap::{CommandFactory, FromArgMatches};

pub mod accept;
pub mod args;
mod commands;
pub mod experiments;
pub mod output;
pub mod params;

use args::{Cli, Command};

/// A flag or input-file problem (exit code 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<scatterkit::Error>() {
        Some(e) if e.is_numeric() => 3,
        Some(_) => 2,
        None => 1,
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let root = Cli::command();
    let cmd = root.find_subcommand(name).expect("matched subcommand exists");
    let ctx = commands::Ctx {
        repro: output::reproduction_line(cmd, sub),
        out: cli.out.as_deref(),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.threads);
            return 1;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Eval(a) => commands::eval(a, &ctx),
        Command::SampleHist(a) => commands::sample_hist(a, &ctx),
        Command::PdfCurve(a) => commands::pdf_curve(a, &ctx),
        Command::Furnace(a) => commands::furnace(a, &ctx),
        Command::EquivCheck(a) => commands::equiv_check(a, &ctx),
        Command::BenchSegterm(a) => commands::bench_segterm(a, &ctx),
        Command::Beta(a) => commands::beta(a, &ctx),
        Command::Smask(a) => commands::smask(a, &ctx),
        Command::FitPhase(a) => commands::fit_phase(a, &ctx),
        Command::WetEval(a) => commands::wet_eval(a, &ctx),
        Command::WetOracle(a) => commands::wet_oracle(a, &ctx),
        Command::Accept(a) => commands::accept_cmd(a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
