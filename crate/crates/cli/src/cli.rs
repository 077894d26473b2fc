//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, CheckArgs, CliError, InnerArg, ModeArg, ScopeArg};
use crate::report::Format;
use crate::scenario::{parse_scenario, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Consistent-histories calculations on a scenario file.
#[derive(Debug, Parser)]
#[command(name = "histories", version)]
pub struct Cli {
    /// Scenario JSON file.
    #[arg(long, global = true, value_name = "FILE")]
    pub scenario: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub output: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the scenario and summarise its slots.
    Validate {
        /// Print the canonical scenario JSON instead of a summary.
        #[arg(long)]
        emit: bool,
    },
    /// Probabilities of named histories, or of every fine-grained history.
    Probs {
        #[arg(long = "history", value_name = "NAME")]
        histories: Vec<String>,
    },
    /// The decoherence functional over all fine-grained histories.
    Dfunc,
    /// Predictive probabilities given a history ending at the present.
    Condition {
        #[arg(long, allow_hyphen_values = true)]
        given: String,
        #[arg(long, allow_hyphen_values = true)]
        future: Option<String>,
    },
    /// Retrodictive probabilities of pasts given the present outcome.
    Retrodict {
        #[arg(long, allow_hyphen_values = true)]
        present: String,
        #[arg(long, allow_hyphen_values = true)]
        past: Option<String>,
        /// Normalise over all fine-grained pasts.
        #[arg(long)]
        normalized: bool,
    },
    /// Coarse-grain one slot and compare against summed fine probabilities.
    CoarseGrain {
        /// Relative slot index (`-1`) or `@time`.
        #[arg(long, allow_hyphen_values = true)]
        slot: String,
        /// Label names; `,` inside a block, `;` between blocks.
        #[arg(long)]
        blocks: String,
    },
    /// Run a consistency check. Exits 1 when it fails.
    Check {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of random states for `robust`.
        #[arg(long)]
        states: Option<usize>,
        /// Coarse-graining scope for `additivity`.
        #[arg(long, value_enum)]
        scope: Option<ScopeArg>,
        /// Check repeated per state for `robust`.
        #[arg(long, value_enum)]
        inner: Option<InnerArg>,
    },
    /// Sequential-measurement simulation of a history.
    Oracle {
        #[command(subcommand)]
        action: OracleAction,
    },
    /// Run a query stored in the scenario.
    Query { name: String },
}

#[derive(Debug, Subcommand)]
pub enum OracleAction {
    /// Oracle probability next to the engine's.
    Prob {
        #[arg(long, allow_hyphen_values = true)]
        history: String,
    },
    /// Step-by-step measurement record.
    Trace {
        #[arg(long, allow_hyphen_values = true)]
        history: String,
    },
}

/// Captured result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invocation {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn load(path: &PathBuf) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text).map_err(CliError::Scenario)
}

fn dispatch(cli: &Cli) -> Result<(String, bool), CliError> {
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Usage("--scenario FILE is required".into()))?;
    let s = load(path)?;
    if let Command::Validate { emit: true } = cli.command {
        let mut text = s.to_json();
        text.push('\n');
        return Ok((text, false));
    }
    let out = match &cli.command {
        Command::Validate { .. } => commands::validate(&s),
        Command::Probs { histories } => commands::probs(&s, histories),
        Command::Dfunc => commands::dfunc(&s),
        Command::Condition { given, future } => commands::condition(&s, given, future.as_deref()),
        Command::Retrodict {
            present,
            past,
            normalized,
        } => commands::retrodict(&s, present, past.as_deref(), *normalized),
        Command::CoarseGrain { slot, blocks } => commands::coarse_grain(&s, slot, blocks),
        Command::Check {
            mode,
            tol,
            seed,
            states,
            scope,
            inner,
        } => commands::check(
            &s,
            &CheckArgs {
                mode: *mode,
                tol: *tol,
                seed: *seed,
                states: *states,
                scope: *scope,
                inner: *inner,
            },
        ),
        Command::Oracle {
            action: OracleAction::Prob { history },
        } => commands::oracle(&s, history, false),
        Command::Oracle {
            action: OracleAction::Trace { history },
        } => commands::oracle(&s, history, true),
        Command::Query { name } => commands::query(&s, name),
    }?;
    Ok((out.report.render(cli.output), out.check_failed))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> Invocation
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Invocation {
                    stdout: String::new(),
                    stderr: text,
                    code,
                }
            } else {
                Invocation {
                    stdout: text,
                    stderr: String::new(),
                    code,
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok((stdout, failed)) => Invocation {
            stdout,
            stderr: String::new(),
            code: if failed { EXIT_CHECK_FAILED } else { EXIT_OK },
        },
        Err(e) => Invocation {
            stdout: String::new(),
            stderr: format!("{e}\n"),
            code: EXIT_USAGE,
        },
    }
}
