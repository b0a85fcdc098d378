//! Executes an experiment grid and writes all artifacts.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::algorithms::{run_algorithm, RunTrace};
use crate::analysis::{bound_theorem, BoundReport};
use crate::error::{Error, Result};
use crate::expert::{corrupt_expert, optimal_policy, ExpertOracle};
use crate::learners::{ErrorInjectedLearner, TabularLearner};
use crate::mdp::exact_cost;

use super::config::ExperimentConfig;
use super::csvfmt::{CsvRow, CSV_HEADER};

pub struct RunOutcome {
    pub csv_path: PathBuf,
    pub all_bounds_hold: bool,
    pub failing_reports: Vec<PathBuf>,
    pub trace_paths: Vec<PathBuf>,
}

struct CellResult {
    rows: Vec<CsvRow>,
    trace_path: PathBuf,
    failing: Vec<PathBuf>,
}

/// Runs `(algorithm x seed)` cells (in parallel up to `jobs`), buffers CSV
/// rows, and writes them in configuration order so the CSV is byte-stable
/// for a fixed config. Exit-code mapping happens in the caller: a false
/// `all_bounds_hold` means exit 1.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, jobs: usize) -> Result<RunOutcome> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let algo = config.algo_id()?;
    let mdp = config.env.build()?;
    let env_label = config.env.label();

    let run_cell = |seed: &u64| -> Result<CellResult> {
        let seed = *seed;
        let expert = if config.expert.corruption > 0.0 {
            corrupt_expert(&optimal_policy(&mdp), config.expert.corruption, seed)?
        } else {
            ExpertOracle::optimal(&mdp)
        };
        let learner = ErrorInjectedLearner::new(
            TabularLearner {
                smoothing: config.learner.smoothing,
                default_action: config.learner.default_action,
                uniform_fallback: config.learner.uniform_fallback,
            },
            config.learner.flip_rate,
        )?;
        let hp = config.hyperparameters(seed);
        let (_, mut trace) = run_algorithm(algo, &mdp, &expert, &learner, &hp)?;
        trace.env_label = env_label.clone();
        trace.env = Some(config.env.clone());

        let j_expert = exact_cost(&mdp, expert.policy())?;
        let mut rows = Vec::with_capacity(trace.iterations.len() + config.bound_checks.len());
        for rec in &trace.iterations {
            rows.push(CsvRow {
                algo: algo.name().to_string(),
                env: env_label.clone(),
                horizon: mdp.horizon,
                seed,
                iter: rec.iteration,
                j_exact: rec.exact_j,
                j_expert,
                eps: rec.eps,
                bound_id: None,
                bound_rhs: None,
                slack: None,
                expert_queries: rec.expert_queries,
                dataset_size: rec.dataset_size,
                wall_ms: rec.wall_ms,
            });
        }

        let mut failing = Vec::new();
        let last = trace.iterations.last().expect("at least one iteration");
        for &tid in &config.bound_checks {
            let report: BoundReport = bound_theorem(tid, &mdp, &trace)?;
            let path = out_dir.join(format!(
                "bound_{}_{}_seed{}_thm{}.json",
                algo.name(),
                env_label,
                seed,
                tid
            ));
            std::fs::write(&path, report.to_json()?)?;
            if !report.holds {
                failing.push(path.clone());
            }
            rows.push(CsvRow {
                algo: algo.name().to_string(),
                env: env_label.clone(),
                horizon: mdp.horizon,
                seed,
                iter: last.iteration,
                j_exact: report.lhs,
                j_expert,
                eps: last.eps,
                bound_id: Some(tid),
                bound_rhs: Some(report.rhs),
                slack: Some(report.slack),
                expert_queries: last.expert_queries,
                dataset_size: last.dataset_size,
                wall_ms: last.wall_ms,
            });
        }

        let trace_path =
            out_dir.join(format!("trace_{}_{}_seed{}.json", algo.name(), env_label, seed));
        std::fs::write(&trace_path, trace.to_json()?)?;
        Ok(CellResult { rows, trace_path, failing })
    };

    let results: Vec<Result<CellResult>> = if jobs <= 1 {
        config.seeds.iter().map(run_cell).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| config.seeds.par_iter().map(run_cell).collect())
    };

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut failing_reports = Vec::new();
    let mut trace_paths = Vec::new();
    for result in results {
        let cell = result?;
        for row in &cell.rows {
            csv.push_str(&row.to_line());
            csv.push('\n');
        }
        failing_reports.extend(cell.failing);
        trace_paths.push(cell.trace_path);
    }

    let csv_path = out_dir.join(&config.outputs.csv);
    std::fs::write(&csv_path, csv)?;
    Ok(RunOutcome {
        csv_path,
        all_bounds_hold: failing_reports.is_empty(),
        failing_reports,
        trace_paths,
    })
}

/// Re-checks theorem bounds on a stored trace. Uses the trace's embedded
/// environment unless an MDP is supplied.
pub fn recheck_bounds(
    trace: &RunTrace,
    mdp_override: Option<&crate::mdp::TabularMdp>,
    theorems: &[u8],
    out_dir: &Path,
) -> Result<(Vec<BoundReport>, Vec<PathBuf>)> {
    let built;
    let mdp = match mdp_override {
        Some(m) => m,
        None => {
            let spec = trace.env.as_ref().ok_or_else(|| {
                Error::InvalidArgument(
                    "trace has no embedded environment; pass --mdp".into(),
                )
            })?;
            built = spec.build()?;
            &built
        }
    };
    let tids: Vec<u8> = if theorems.is_empty() {
        vec![trace.algo.theorem().ok_or_else(|| {
            Error::InvalidArgument(format!("no theorem applies to {}", trace.algo.name()))
        })?]
    } else {
        theorems.to_vec()
    };
    std::fs::create_dir_all(out_dir)?;
    let mut reports = Vec::new();
    let mut failing = Vec::new();
    for tid in tids {
        let report = bound_theorem(tid, mdp, trace)?;
        let path = out_dir.join(format!(
            "bound_{}_{}_thm{}.json",
            trace.algo.name(),
            trace.env_label,
            tid
        ));
        std::fs::write(&path, report.to_json()?)?;
        if !report.holds {
            failing.push(path);
        }
        reports.push(report);
    }
    Ok((reports, failing))
}
