//! CSV and JSON artifacts of an experiment.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::experiment::{Experiment, ExperimentResult, GameSet};
use crate::error::{Error, Result};

pub const CURVES_CSV: &str = "curves.csv";
pub const COUNTS_CSV: &str = "counts.csv";
pub const PARTITIONS_CSV: &str = "partitions.csv";
pub const BOXPLOT_CSV: &str = "boxplot.csv";
pub const SUMMARY_JSON: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub curves: PathBuf,
    pub counts: PathBuf,
    pub partitions: PathBuf,
    pub boxplot: PathBuf,
    pub summary: PathBuf,
}

impl OutputFiles {
    pub fn in_dir(dir: &Path) -> Self {
        OutputFiles {
            curves: dir.join(CURVES_CSV),
            counts: dir.join(COUNTS_CSV),
            partitions: dir.join(PARTITIONS_CSV),
            boxplot: dir.join(BOXPLOT_CSV),
            summary: dir.join(SUMMARY_JSON),
        }
    }
}

#[derive(Serialize)]
struct CurveRow<'a> {
    algorithm: &'a str,
    matrix_id: &'a str,
    episode: u64,
    mean_raw_reward: f64,
    mean_norm_reward: f64,
    stderr: f64,
    pct_optimal: f64,
}

#[derive(Serialize)]
struct CountRow<'a> {
    algorithm: &'a str,
    state: usize,
    action: usize,
    count: u64,
}

#[derive(Serialize)]
struct PartitionRow<'a> {
    algorithm: &'a str,
    signature: &'a str,
    count: u64,
}

#[derive(Serialize)]
struct BoxplotRow<'a> {
    algorithm: &'a str,
    matrix_id: &'a str,
    pct_optimal: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let to_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    for row in rows {
        w.serialize(row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the five experiment artifacts into `dir`, creating it if needed.
/// States and actions are numbered from 1 in `counts.csv`.
pub fn write_outputs(dir: &Path, exp: &Experiment, result: &ExperimentResult) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = OutputFiles::in_dir(dir);
    let pooled_id = match exp.games {
        GameSet::Climbing => "climbing",
        GameSet::Random { .. } => "all",
    };
    let named: Vec<(&str, _)> = result
        .summaries
        .iter()
        .map(|(spec, s)| (spec.algorithm.name(), s))
        .collect();

    write_csv(
        &files.curves,
        named.iter().flat_map(|(alg, s)| {
            s.curve.iter().map(move |c| CurveRow {
                algorithm: alg,
                matrix_id: pooled_id,
                episode: c.episode,
                mean_raw_reward: c.mean_raw_reward,
                mean_norm_reward: c.mean_norm_reward,
                stderr: c.stderr,
                pct_optimal: c.pct_optimal,
            })
        }),
    )?;
    write_csv(
        &files.counts,
        named.iter().flat_map(|(alg, s)| {
            s.counts.iter().enumerate().flat_map(move |(state, row)| {
                row.iter().enumerate().map(move |(action, count)| CountRow {
                    algorithm: alg,
                    state: state + 1,
                    action: action + 1,
                    count: *count,
                })
            })
        }),
    )?;
    write_csv(
        &files.partitions,
        named.iter().flat_map(|(alg, s)| {
            s.partitions.iter().map(move |(sig, count)| PartitionRow {
                algorithm: alg,
                signature: sig,
                count: *count,
            })
        }),
    )?;
    write_csv(
        &files.boxplot,
        named.iter().flat_map(|(alg, s)| {
            s.matrices.iter().map(move |m| BoxplotRow {
                algorithm: alg,
                matrix_id: &result.matrix_ids[m.matrix_index],
                pct_optimal: m.pct_optimal(),
            })
        }),
    )?;

    let algorithms: Vec<_> = result
        .summaries
        .iter()
        .map(|(spec, s)| {
            json!({
                "algorithm": spec.algorithm.name(),
                "successful_runs": s.successful_runs,
                "optimal_runs": s.optimal_runs,
                "failed_runs": s.failures.len(),
                "pct_optimal": s.pct_optimal(),
                "final_mean_norm_reward": s.final_mean_norm_reward,
                "mean_episodes_to_optimal": s.mean_episodes_to_optimal,
                "per_matrix_quartiles": s.boxplot,
                "failures": s.failures,
            })
        })
        .collect();
    let matrix_seed = match exp.games {
        GameSet::Climbing => None,
        GameSet::Random { seed, .. } => Some(seed),
    };
    let summary = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": exp,
        "seeds": { "master": exp.seed, "matrices": matrix_seed },
        "totals": {
            "matrices": result.matrix_ids.len(),
            "runs_per_matrix": exp.runs,
            "episodes": exp.episodes,
            "failed_runs": result.summaries.iter().map(|(_, s)| s.failures.len()).sum::<usize>(),
        },
        "algorithms": algorithms,
    });
    let text =
        serde_json::to_string_pretty(&summary).map_err(|e| Error::io(&files.summary, std::io::Error::other(e)))?;
    fs::write(&files.summary, text + "\n").map_err(|e| Error::io(&files.summary, e))?;
    Ok(files)
}
