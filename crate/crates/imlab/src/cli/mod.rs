//! Command-line surface of the `imlab` binary.
//!
//! Subcommands: `run` (execute a config), `bounds` (re-check theorems on a
//! stored trace), `compare` (aggregate CSVs), `gen-env` (write an MDP
//! JSON), `eval` (exact cost of a stored policy on a stored MDP).
//!
//! Exit codes: 0 success and all requested bounds hold, 1 a bound check
//! failed, 2 invalid configuration or input.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::algorithms::RunTrace;
use crate::error::{Error, Result};
use crate::mdp::{exact_cost, validate_mdp, TabularMdp};
use crate::policy::Policy;

mod compare;
mod config;
mod csvfmt;
mod runner;

pub use compare::{compare_report, AlgoSummary, CompareReport, ParsedRow};
pub use config::{ExperimentConfig, SEED_ENV_VAR};
pub use csvfmt::{fmt_sig12, CsvRow, CSV_HEADER};
pub use runner::{recheck_bounds, run_experiment, RunOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BOUND_VIOLATION: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "imlab", version, about = "Imitation-learning laboratory on tabular MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment config: one algorithm over a seed grid, with
    /// optional theorem bound checks.
    Run {
        /// Path to the TOML config.
        config: PathBuf,
        /// Artifact root for CSV, traces, and bound reports.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Parallel grid cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Trailing `--key=value` config overrides (flags win over file).
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Re-check theorem bounds on a stored run trace.
    Bounds {
        #[arg(long)]
        trace: PathBuf,
        /// MDP JSON; defaults to the trace's embedded environment.
        #[arg(long)]
        mdp: Option<PathBuf>,
        /// Theorem ids; defaults to the algorithm's own theorem.
        #[arg(long = "theorem")]
        theorems: Vec<u8>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Aggregate result CSVs into summaries and plot data.
    Compare {
        csv: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Build the configured environment and write its MDP JSON.
    GenEnv {
        config: PathBuf,
        #[arg(long, default_value = "mdp.json")]
        out: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Exact cost of a stored policy on a stored MDP.
    Eval {
        #[arg(long)]
        mdp: PathBuf,
        #[arg(long)]
        policy: PathBuf,
    },
}

/// Parses `args` and runs the requested command, returning the process
/// exit code.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; everything else is a
            // usage error.
            let code = if e.use_stderr() { EXIT_CONFIG_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG_ERROR
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, out_dir, jobs, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let outcome = run_experiment(&cfg, &out_dir, jobs)?;
            println!("wrote {}", outcome.csv_path.display());
            for path in &outcome.trace_paths {
                println!("wrote {}", path.display());
            }
            if outcome.all_bounds_hold {
                Ok(EXIT_OK)
            } else {
                for path in &outcome.failing_reports {
                    eprintln!("bound violated: {}", path.display());
                }
                Ok(EXIT_BOUND_VIOLATION)
            }
        }
        Command::Bounds { trace, mdp, theorems, out_dir } => {
            let text = std::fs::read_to_string(&trace)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", trace.display())))?;
            let trace = RunTrace::from_json(&text)?;
            let mdp_loaded = match mdp {
                Some(path) => Some(load_mdp(&path)?),
                None => None,
            };
            let (reports, failing) =
                recheck_bounds(&trace, mdp_loaded.as_ref(), &theorems, &out_dir)?;
            for r in &reports {
                println!(
                    "theorem {}: lhs={} rhs={} slack={} holds={}",
                    r.theorem,
                    fmt_sig12(r.lhs),
                    fmt_sig12(r.rhs),
                    fmt_sig12(r.slack),
                    r.holds
                );
            }
            if failing.is_empty() {
                Ok(EXIT_OK)
            } else {
                for path in &failing {
                    eprintln!("bound violated: {}", path.display());
                }
                Ok(EXIT_BOUND_VIOLATION)
            }
        }
        Command::Compare { csv, out_dir } => {
            let report = compare_report(&csv, &out_dir)?;
            for path in &report.plot_files {
                println!("wrote {}", path.display());
            }
            Ok(EXIT_OK)
        }
        Command::GenEnv { config, out, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let mdp = cfg.env.build()?;
            std::fs::write(&out, mdp.to_json()?)?;
            println!("wrote {}", out.display());
            Ok(EXIT_OK)
        }
        Command::Eval { mdp, policy } => {
            let mdp = load_mdp(&mdp)?;
            let text = std::fs::read_to_string(&policy)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", policy.display())))?;
            let policy: Policy = serde_json::from_str(&text)?;
            mdp.check_policy(&policy)?;
            let j = exact_cost(&mdp, &policy)?;
            println!("{}", fmt_sig12(j));
            Ok(EXIT_OK)
        }
    }
}

fn load_mdp(path: &std::path::Path) -> Result<TabularMdp> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mdp = TabularMdp::from_json(&text)?;
    let violations = validate_mdp(&mdp);
    if !violations.is_empty() {
        return Err(Error::Config(format!(
            "{}: invalid mdp: {}",
            path.display(),
            violations[0]
        )));
    }
    Ok(mdp)
}
