//! Aggregates results CSVs into per-algorithm summaries and plot data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::csvfmt::{fmt_sig12, CSV_HEADER};

#[derive(Clone, Debug)]
pub struct ParsedRow {
    pub algo: String,
    pub env: String,
    pub horizon: usize,
    pub seed: u64,
    pub iter: usize,
    pub j_exact: f64,
    pub j_expert: f64,
    pub eps: f64,
    pub is_bound_row: bool,
    pub expert_queries: u64,
    pub dataset_size: usize,
}

#[derive(Clone, Debug)]
pub struct AlgoSummary {
    pub algo: String,
    pub runs: usize,
    pub mean_j: f64,
    pub std_j: f64,
    pub mean_regret: f64,
    pub mean_expert_queries: f64,
}

pub struct CompareReport {
    pub summaries: Vec<AlgoSummary>,
    pub plot_files: Vec<PathBuf>,
}

/// Reads result CSVs (all must share the exact schema), prints per-algo
/// aggregates of the final-iteration exact costs, and writes two plot-data
/// files per algorithm in a two-column whitespace-separated format:
/// regret-vs-iteration and regret-vs-horizon.
pub fn compare_report(csv_paths: &[PathBuf], out_dir: &Path) -> Result<CompareReport> {
    if csv_paths.is_empty() {
        return Err(Error::Config("compare needs at least one CSV".into()));
    }
    let mut rows = Vec::new();
    for path in csv_paths {
        rows.extend(parse_csv(path)?);
    }
    std::fs::create_dir_all(out_dir)?;

    // Final (largest) iteration row per (algo, env, T, seed), bound rows
    // excluded.
    let mut finals: BTreeMap<(String, String, usize, u64), ParsedRow> = BTreeMap::new();
    for row in rows.iter().filter(|r| !r.is_bound_row) {
        let key = (row.algo.clone(), row.env.clone(), row.horizon, row.seed);
        match finals.get(&key) {
            Some(existing) if existing.iter >= row.iter => {}
            _ => {
                finals.insert(key, row.clone());
            }
        }
    }

    let mut summaries = Vec::new();
    let mut by_algo: BTreeMap<String, Vec<&ParsedRow>> = BTreeMap::new();
    for row in finals.values() {
        by_algo.entry(row.algo.clone()).or_default().push(row);
    }
    for (algo, rows) in &by_algo {
        let n = rows.len() as f64;
        let mean_j = rows.iter().map(|r| r.j_exact).sum::<f64>() / n;
        let var = if rows.len() > 1 {
            rows.iter().map(|r| (r.j_exact - mean_j).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        summaries.push(AlgoSummary {
            algo: algo.clone(),
            runs: rows.len(),
            mean_j,
            std_j: var.sqrt(),
            mean_regret: rows.iter().map(|r| r.j_exact - r.j_expert).sum::<f64>() / n,
            mean_expert_queries: rows.iter().map(|r| r.expert_queries as f64).sum::<f64>() / n,
        });
    }

    let mut plot_files = Vec::new();
    for algo in by_algo.keys() {
        // Mean regret per iteration across all non-bound rows.
        let mut per_iter: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for row in rows.iter().filter(|r| !r.is_bound_row && &r.algo == algo) {
            let e = per_iter.entry(row.iter).or_insert((0.0, 0));
            e.0 += row.j_exact - row.j_expert;
            e.1 += 1;
        }
        let mut text = String::new();
        for (iter, (sum, n)) in &per_iter {
            text.push_str(&format!("{} {}\n", iter, fmt_sig12(sum / *n as f64)));
        }
        let path = out_dir.join(format!("regret_vs_iteration_{algo}.dat"));
        std::fs::write(&path, text)?;
        plot_files.push(path);

        // Mean final regret per horizon.
        let mut per_t: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for row in finals.values().filter(|r| &r.algo == algo) {
            let e = per_t.entry(row.horizon).or_insert((0.0, 0));
            e.0 += row.j_exact - row.j_expert;
            e.1 += 1;
        }
        let mut text = String::new();
        for (t, (sum, n)) in &per_t {
            text.push_str(&format!("{} {}\n", t, fmt_sig12(sum / *n as f64)));
        }
        let path = out_dir.join(format!("regret_vs_T_{algo}.dat"));
        std::fs::write(&path, text)?;
        plot_files.push(path);
    }

    println!(
        "{:<18} {:>5} {:>16} {:>14} {:>14} {:>14}",
        "algo", "runs", "mean_J", "std_J", "mean_regret", "mean_queries"
    );
    for s in &summaries {
        println!(
            "{:<18} {:>5} {:>16.6} {:>14.6} {:>14.6} {:>14.1}",
            s.algo, s.runs, s.mean_j, s.std_j, s.mean_regret, s.mean_expert_queries
        );
    }

    Ok(CompareReport { summaries, plot_files })
}

fn parse_csv(path: &Path) -> Result<Vec<ParsedRow>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty file", path.display())))?;
    if header != CSV_HEADER {
        return Err(Error::Config(format!(
            "{}: schema mismatch (expected '{CSV_HEADER}')",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 14 {
            return Err(Error::Config(format!(
                "{}: line {} has {} fields, expected 14",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        let parse_err = |what: &str| {
            Error::Config(format!("{}: line {}: bad {what}", path.display(), lineno + 2))
        };
        rows.push(ParsedRow {
            algo: fields[0].to_string(),
            env: fields[1].to_string(),
            horizon: fields[2].parse().map_err(|_| parse_err("T"))?,
            seed: fields[3].parse().map_err(|_| parse_err("seed"))?,
            iter: fields[4].parse().map_err(|_| parse_err("iter"))?,
            j_exact: fields[5].parse().map_err(|_| parse_err("J_exact"))?,
            j_expert: fields[6].parse().map_err(|_| parse_err("J_expert"))?,
            eps: fields[7].parse().map_err(|_| parse_err("eps"))?,
            is_bound_row: !fields[8].is_empty(),
            expert_queries: fields[11].parse().map_err(|_| parse_err("expert_queries"))?,
            dataset_size: fields[12].parse().map_err(|_| parse_err("dataset_size"))?,
        });
    }
    Ok(rows)
}
