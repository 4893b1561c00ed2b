//! `qrc1`: decide, prove, build countermodels for and arithmetically
//! interpret sequents of the strictly positive quantified reflection
//! calculus.
//!
//! Exit codes: 0 success (derivable, found, audit passed); 1 negative answer
//! (refuted, no countermodel because derivable, not adequate); 2 inconclusive
//! (resource cap hit, proof search budget exhausted); 64 usage or parse
//! error; 65 malformed input file; 70 audit failure or internal error; 74
//! file I/O error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Format, Overrides, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "qrc1",
    version,
    about = "Strictly positive quantified provability logic workbench"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct GlobalArgs {
    /// TOML config file; defaults to $QRC1_CONFIG, then ./qrc1.toml
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Proof search depth budget
    #[arg(long, global = true)]
    depth_budget: Option<usize>,

    /// Maximum number of models the enumeration strategy may visit
    #[arg(long, global = true)]
    model_cap: Option<u64>,

    /// Worker threads for `corpus --decide`
    #[arg(long = "workers", global = true)]
    worker_count: Option<usize>,

    /// Output format
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Seed for random corpus generation
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Signature JSON; formulas are then parsed strictly against it
    #[arg(long, global = true, value_name = "PATH")]
    pub sig: Option<PathBuf>,

    /// Treat NAME as a constant (repeatable)
    #[arg(long = "const", global = true, value_name = "NAME")]
    pub constants: Vec<String>,

    /// Write the main artifact to PATH instead of stdout
    #[arg(long, short, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide `LHS |- RHS`: derivable (with a certificate if one is found) or a countermodel
    Decide {
        lhs: String,
        rhs: String,
        #[arg(long, value_enum, default_value = "canonical")]
        strategy: StrategyArg,
    },
    /// Search for a derivation certificate of `LHS |- RHS`
    Prove { lhs: String, rhs: String },
    /// Build the term countermodel for `LHS |- RHS` and audit its truth lemma
    Countermodel { lhs: String, rhs: String },
    /// Print an arithmetical interpretation of a formula
    Realize {
        formula: Option<String>,
        #[arg(long, value_enum, default_value = "star")]
        style: Style,
        /// Model JSON whose worlds the Solovay-style interpretation refers to
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        /// Print the provability statement for `FORMULA |- RHS` instead
        #[arg(long, value_name = "RHS")]
        entails: Option<String>,
        /// Compare shadow evaluation with Kripke truth on a (counter)model JSON
        #[arg(long, value_name = "PATH")]
        shadow_audit: Option<PathBuf>,
    },
    /// Check a model JSON for adequacy, or re-run the truth lemma on `countermodel --format json` output
    Audit { file: PathBuf },
    /// Print seeded random sequents
    Corpus {
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Also decide each sequent, in parallel
        #[arg(long)]
        decide: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Canonical,
    Enumerate,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Style {
    Star,
    Solovay,
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let g = &cli.global;
    let flags = Overrides {
        depth_budget: g.depth_budget,
        model_cap: g.model_cap,
        worker_count: g.worker_count,
        format: g.format,
        seed: g.seed,
    };
    let cfg = RunConfig::resolve(g.config.as_deref(), &|k| std::env::var(k).ok(), &flags)?;
    match cli.command {
        Command::Decide { lhs, rhs, strategy } => commands::decide(g, &cfg, &lhs, &rhs, strategy),
        Command::Prove { lhs, rhs } => commands::prove(g, &cfg, &lhs, &rhs),
        Command::Countermodel { lhs, rhs } => commands::countermodel(g, &cfg, &lhs, &rhs),
        Command::Realize {
            formula,
            style,
            model,
            entails,
            shadow_audit,
        } => commands::realize(
            g,
            formula.as_deref(),
            style,
            model.as_deref(),
            entails.as_deref(),
            shadow_audit.as_deref(),
        ),
        Command::Audit { file } => commands::audit(g, &cfg, &file),
        Command::Corpus { count, decide } => commands::corpus(g, &cfg, count, decide),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
