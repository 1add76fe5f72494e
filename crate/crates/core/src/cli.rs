//! Command-line interface.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::report::{self, SearchGroupChoice};

#[derive(Debug, Parser)]
#[command(name = "mathon", version, about = "Reconstruct and verify the 21-line perp-system of PG(5,3)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Worker threads for inner enumerations.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,

    /// Suppress the report on stdout; the exit code still carries the verdict.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Include per-stage wall-clock timings (makes output non-deterministic).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchGroupArg {
    Cyclic,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every stage and geometry check.
    Pipeline {
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..24))]
        seed_index: u8,
    },
    /// Run the checks of a single lemma (1, 4, 5, 6 or 15).
    Verify {
        #[arg(value_parser = parse_lemma)]
        lemma: u32,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..24))]
        seed_index: u8,
    },
    /// Search for hyperbolic and elliptic quadratic forms making the 21 lines a perp-system.
    PolaritySearch {
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..24))]
        seed_index: u8,
        /// Random symmetric matrices tried after the invariant-form pass.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long, default_value_t = 1)]
        search_seed: u64,
        /// Groups whose invariant forms are tried first.
        #[arg(long, value_enum, default_value_t = SearchGroupArg::Cyclic)]
        search_group: SearchGroupArg,
    },
}

fn parse_lemma(s: &str) -> Result<u32, String> {
    let n: u32 = s.parse().map_err(|_| format!("not a lemma number: {s}"))?;
    if report::LEMMAS.contains(&n) {
        Ok(n)
    } else {
        Err(format!("unknown lemma {n}; expected one of 1, 4, 5, 6, 15"))
    }
}

fn emit<T: Serialize>(cli: &Cli, value: &T, text: String) -> std::io::Result<()> {
    let body = match cli.format {
        Format::Json => report::to_json(value),
        Format::Text => text,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, body),
        None if cli.quiet => Ok(()),
        None => std::io::stdout().lock().write_all(body.as_bytes()),
    }
}

/// Execute a parsed command line and map the outcome to an exit code:
/// 0 when every check passes, 1 on a failed check or stage error.
pub fn run(cli: &Cli) -> ExitCode {
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs as usize)
        .build_global()
    {
        eprintln!("warning: {e}");
    }
    let outcome = match &cli.command {
        Command::Pipeline { seed_index } => report::run_pipeline(*seed_index as usize, cli.timings)
            .map(|r| (r.passed, emit(cli, &r, r.to_text()))),
        Command::Verify { lemma, seed_index } => report::verify_lemma(*lemma, *seed_index as usize)
            .map(|r| (r.passed, emit(cli, &r, r.to_text()))),
        Command::PolaritySearch {
            seed_index,
            budget,
            search_seed,
            search_group,
        } => {
            let group = match search_group {
                SearchGroupArg::Cyclic => SearchGroupChoice::Cyclic,
                SearchGroupArg::Full => SearchGroupChoice::Full,
            };
            report::run_polarity_search(*seed_index as usize, *budget, *search_seed, group).map(|r| {
                if let Some(e) = &r.error {
                    eprintln!("error: {e}");
                }
                (r.passed, emit(cli, &r, r.to_text()))
            })
        }
    };
    match outcome {
        Ok((passed, Ok(()))) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Ok((_, Err(e))) => {
            eprintln!("error: cannot write report: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
