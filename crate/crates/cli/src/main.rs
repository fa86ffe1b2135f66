//! `deedscan`: batch covenant detection and PLSS georeferencing for deed
//! corpora.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::SynthArgs;
use crate::config::{RunArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "deedscan", version, about)]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flag restrictive covenant language; writes detections.jsonl
    Detect,
    /// Extract survey descriptions and resolve them to PLSS boundaries
    Georef,
    /// Score internal and/or external predictions against gold
    Eval,
    /// Read numeral phrases, one per line, and print their values
    Numerals {
        /// Input file; standard input when omitted
        input: Option<PathBuf>,
    },
    /// Detect, georeference and (with gold) evaluate in one run
    Pipeline,
    /// Write a synthetic fixture dataset and matching config into --out
    Synth {
        #[arg(long, default_value_t = 100)]
        docs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Pad each deed with filler to at least this many characters
        #[arg(long, default_value_t = 0)]
        min_chars: usize,
        /// Fraction of deeds carrying a covenant
        #[arg(long, default_value_t = 0.4)]
        covenant_rate: f64,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::resolve(&cli.run)?;
    match cli.command {
        Command::Detect => commands::detect(&cfg),
        Command::Georef => commands::georef(&cfg),
        Command::Eval => commands::eval(&cfg),
        Command::Pipeline => commands::pipeline(&cfg),
        Command::Numerals { input } => commands::numerals(input.as_deref()),
        Command::Synth {
            docs,
            seed,
            min_chars,
            covenant_rate,
        } => commands::synth(
            &cfg.out,
            &SynthArgs {
                docs,
                seed,
                min_chars,
                covenant_rate,
            },
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
