//! `revkit`: validate models, search for eligible revisions, reproduce the
//! coverage table, benchmark, and degrade or report from cached verdicts.

mod commands;
mod manifest;
mod settings;

use std::fmt;
use std::path::PathBuf;
use std::ffi::OsString;

use clap::{Parser, Subcommand, ValueEnum};

use settings::{DegradeFlags, Flags};

#[derive(Debug, Parser)]
#[command(name = "revkit", version, about = "Module-consistent revisions of interaction specifications")]
struct Cli {
    /// More log output (repeat for debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Check every revision
    Exhaustive,
    /// Check a shuffled slice, predict the rest, verify
    Oacal,
    /// Check revisions in abstraction-coverage order, stop at the first
    Oasis,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse model, requirement and lint files (.mlts, .lts, .req, .lints)
    Validate {
        /// Files to parse
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Print the weakened model of a chain (.mlts) or machine (.lts)
    Weaken {
        /// Chain (.mlts) or machine (.lts)
        model: PathBuf,
        /// Revision to weaken, as 1-based module order [default: identity]
        #[arg(long, value_name = "PERM")]
        revision: Option<String>,
    },
    /// Check requirements against one revision and print counterexamples
    Check {
        /// Chain model (.mlts)
        model: PathBuf,
        /// Requirements (.req)
        requirements: PathBuf,
        /// Revision to check, as 1-based module order [default: identity]
        #[arg(long, value_name = "PERM")]
        revision: Option<String>,
        /// Check functional requirements on the weakened model too [default: off]
        #[arg(long)]
        functional_on_weakened: bool,
    },
    /// List revisions, one per line
    Enumerate {
        /// Number of modules
        #[arg(long, short = 'n')]
        modules: usize,
        /// Revision set: full or common [default: full]
        #[arg(long, value_name = "full|common", default_value = "full", hide_default_value = true)]
        coverage: revkit::pipeline::Coverage,
    },
    /// Search for revisions satisfying every requirement
    Search {
        /// Chain model (.mlts)
        model: PathBuf,
        /// Requirements (.req)
        requirements: PathBuf,
        /// Search strategy [default: oacal]
        #[arg(long, value_enum, default_value_t = Mode::Oacal, hide_default_value = true)]
        mode: Mode,
        /// Stop at the first satisfying revision (oacal only) [default: off]
        #[arg(long)]
        early_exit: bool,
        #[command(flatten)]
        flags: Flags,
    },
    /// Reproduce the coverage table
    Table1 {
        /// Module counts as `a..b`, inclusive [default: 4..9]
        #[arg(long, value_name = "A..B")]
        n_range: Option<String>,
        /// Compare against the reference table; exit 3 on mismatch [default: off]
        #[arg(long = "assert-paper")]
        assert_reference: bool,
        /// Output directory [default: out]
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Omit wall-clock fields from outputs [default: off]
        #[arg(long)]
        no_timing: bool,
    },
    /// Time OASIS-order and accelerated search on generated requirements
    Bench {
        /// Chain model (.mlts)
        model: PathBuf,
        /// Generated requirements [default: 20]
        #[arg(long, default_value_t = 20, hide_default_value = true)]
        requirements: usize,
        #[command(flatten)]
        flags: Flags,
    },
    /// Waive requirements against a payoff threshold using cached verdicts
    Degrade {
        /// Verdict table written by `search`
        verdicts: PathBuf,
        /// Requirements the table was computed for (.req)
        requirements: PathBuf,
        /// Model for on-demand verification of predicted verdicts
        #[arg(long)]
        model: Option<PathBuf>,
        /// Rely on unverified predictions [default: off]
        #[arg(long)]
        allow_predicted: bool,
        #[command(flatten)]
        degrade: DegradeFlags,
        #[command(flatten)]
        flags: Flags,
    },
    /// Document selected revisions with payoffs, lints and specifications
    Report {
        /// Verdict table written by `search`
        verdicts: PathBuf,
        /// Requirements the table was computed for (.req)
        requirements: PathBuf,
        /// Chain model the table was computed for (.mlts)
        model: PathBuf,
        /// Ordering lints to flag
        #[arg(long, value_name = "FILE")]
        lints: Option<PathBuf>,
        /// Rely on unverified predictions [default: off]
        #[arg(long)]
        allow_predicted: bool,
        #[command(flatten)]
        degrade: DegradeFlags,
        #[command(flatten)]
        flags: Flags,
    },
}

/// An error with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn nothing_found(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn mismatch(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<revkit::Error> for Failure {
    fn from(e: revkit::Error) -> Self {
        Failure::input(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { paths } => commands::validate(&paths),
        Command::Weaken { model, revision } => commands::weaken(&model, revision.as_deref()),
        Command::Check {
            model,
            requirements,
            revision,
            functional_on_weakened,
        } => commands::check(&model, &requirements, revision.as_deref(), functional_on_weakened),
        Command::Enumerate { modules, coverage } => commands::enumerate(modules, coverage),
        Command::Search {
            model,
            requirements,
            mode,
            early_exit,
            flags,
        } => commands::search(&model, &requirements, mode, early_exit, &flags),
        Command::Table1 {
            n_range,
            assert_reference,
            out,
            no_timing,
        } => commands::table1(n_range.as_deref(), assert_reference, out, no_timing),
        Command::Bench {
            model,
            requirements,
            flags,
        } => commands::bench(&model, requirements, &flags),
        Command::Degrade {
            verdicts,
            requirements,
            model,
            allow_predicted,
            degrade,
            flags,
        } => commands::degrade(&verdicts, &requirements, model.as_deref(), allow_predicted, &degrade, &flags),
        Command::Report {
            verdicts,
            requirements,
            model,
            lints,
            allow_predicted,
            degrade,
            flags,
        } => commands::report(
            &verdicts,
            &requirements,
            &model,
            lints.as_deref(),
            allow_predicted,
            &degrade,
            &flags,
        ),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Usage errors exit 1; help and version exit 0.
pub fn main_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
