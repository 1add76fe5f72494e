use clap::Parser;
use mathon_core::cli::{run, Cli};

fn main() -> std::process::ExitCode {
    run(&Cli::parse())
}
