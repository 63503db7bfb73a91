//! Ordered, streaming reduction of run results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RunResult;
use crate::error::{Error, Result};
use crate::stats::{BoxStats, Moments};

/// Pooled metrics at one evaluation-grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: u64,
    pub mean_raw_reward: f64,
    pub mean_norm_reward: f64,
    /// Standard error of `mean_norm_reward` across runs.
    pub stderr: f64,
    /// Fraction of runs whose greedy policy is optimal at this point.
    pub pct_optimal: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixSummary {
    pub matrix_index: usize,
    pub runs: u64,
    pub optimal: u64,
    pub failed: u64,
}

impl MatrixSummary {
    /// Optimal fraction over successful runs; zero when every run failed.
    pub fn pct_optimal(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.optimal as f64 / self.runs as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub matrix_index: usize,
    pub run_index: u64,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub curve: Vec<CurvePoint>,
    pub matrices: Vec<MatrixSummary>,
    /// Quartiles of per-matrix pct-optimal; absent when no matrix has a
    /// successful run.
    pub boxplot: Option<BoxStats>,
    /// `counts[s][a]`: successful runs whose final greedy policy plays `a` in `s`.
    pub counts: Vec<Vec<u64>>,
    pub partitions: BTreeMap<String, u64>,
    pub successful_runs: u64,
    pub optimal_runs: u64,
    pub failures: Vec<FailureRecord>,
    /// Mean of `episodes_to_optimal` over optimal runs.
    pub mean_episodes_to_optimal: Option<f64>,
    pub final_mean_norm_reward: f64,
}

impl AggregateSummary {
    /// Final pct-optimal: optimal runs over successful runs.
    pub fn pct_optimal(&self) -> f64 {
        self.optimal_runs as f64 / self.successful_runs as f64
    }

    pub fn partition_share(&self, signature: &str) -> f64 {
        self.partitions.get(signature).copied().unwrap_or(0) as f64 / self.successful_runs as f64
    }

    /// Fraction of successful runs whose partition has a shared message.
    pub fn shared_message_share(&self) -> f64 {
        let shared: u64 = self
            .partitions
            .iter()
            .filter(|(sig, _)| sig.contains(','))
            .map(|(_, c)| *c)
            .sum();
        shared as f64 / self.successful_runs as f64
    }
}

#[derive(Debug, Clone, Default)]
struct GridAccumulator {
    episode: u64,
    raw: Moments,
    norm: Moments,
    optimal: u64,
}

/// Streaming reducer. Results must be pushed in `(matrix, run)` order for
/// bit-identical floating-point sums.
#[derive(Debug, Clone)]
pub struct SummaryBuilder {
    grid: Vec<GridAccumulator>,
    matrices: Vec<MatrixSummary>,
    counts: Vec<Vec<u64>>,
    partitions: BTreeMap<String, u64>,
    failures: Vec<FailureRecord>,
    to_optimal: Moments,
}

impl SummaryBuilder {
    pub fn new(grid: &[u64], n_matrices: usize, n_states: usize, n_actions: usize) -> Self {
        SummaryBuilder {
            grid: grid
                .iter()
                .map(|e| GridAccumulator {
                    episode: *e,
                    ..GridAccumulator::default()
                })
                .collect(),
            matrices: (0..n_matrices)
                .map(|matrix_index| MatrixSummary {
                    matrix_index,
                    ..MatrixSummary::default()
                })
                .collect(),
            counts: vec![vec![0; n_actions]; n_states],
            partitions: BTreeMap::new(),
            failures: Vec::new(),
            to_optimal: Moments::default(),
        }
    }

    pub fn push(&mut self, matrix_index: usize, run_index: u64, result: &RunResult) -> Result<()> {
        let size = self.matrices.len();
        let matrix = self.matrices.get_mut(matrix_index).ok_or(Error::OutOfRange {
            what: "matrix",
            index: matrix_index,
            size,
        })?;
        if let Some(message) = &result.failure {
            matrix.failed += 1;
            self.failures.push(FailureRecord {
                matrix_index,
                run_index,
                seed: result.seed,
                message: message.clone(),
            });
            return Ok(());
        }
        if result.checkpoints.len() != self.grid.len() {
            return Err(Error::Aggregation(format!(
                "run has {} checkpoints, grid has {}",
                result.checkpoints.len(),
                self.grid.len()
            )));
        }
        matrix.runs += 1;
        matrix.optimal += u64::from(result.optimal);
        for (acc, c) in self.grid.iter_mut().zip(&result.checkpoints) {
            acc.raw.push(c.mean_raw_reward);
            acc.norm.push(c.mean_norm_reward);
            acc.optimal += u64::from(c.optimal);
        }
        for (s, a) in result.policy.actions.iter().enumerate() {
            self.counts[s][*a] += 1;
        }
        *self.partitions.entry(result.partition.to_string()).or_insert(0) += 1;
        if let Some(e) = result.episodes_to_optimal {
            self.to_optimal.push(e as f64);
        }
        Ok(())
    }

    pub fn finish(self) -> Result<AggregateSummary> {
        let successful_runs: u64 = self.matrices.iter().map(|m| m.runs).sum();
        if successful_runs == 0 {
            return Err(Error::Aggregation(format!("all {} runs failed", self.failures.len())));
        }
        let optimal_runs = self.matrices.iter().map(|m| m.optimal).sum();
        let curve: Vec<CurvePoint> = self
            .grid
            .iter()
            .map(|g| CurvePoint {
                episode: g.episode,
                mean_raw_reward: g.raw.mean,
                mean_norm_reward: g.norm.mean,
                stderr: g.norm.stderr(),
                pct_optimal: g.optimal as f64 / successful_runs as f64,
            })
            .collect();
        let per_matrix: Vec<f64> = self
            .matrices
            .iter()
            .filter(|m| m.runs > 0)
            .map(MatrixSummary::pct_optimal)
            .collect();
        Ok(AggregateSummary {
            final_mean_norm_reward: curve.last().map_or(0.0, |c| c.mean_norm_reward),
            curve,
            boxplot: BoxStats::from_samples(&per_matrix),
            matrices: self.matrices,
            counts: self.counts,
            partitions: self.partitions,
            successful_runs,
            optimal_runs,
            failures: self.failures,
            mean_episodes_to_optimal: (self.to_optimal.n > 0).then_some(self.to_optimal.mean),
        })
    }
}

/// Reduces `results[matrix][run]` in order.
pub fn aggregate(results: &[Vec<RunResult>], n_states: usize, n_actions: usize) -> Result<AggregateSummary> {
    let first = results
        .iter()
        .flatten()
        .find(|r| r.failure.is_none())
        .ok_or_else(|| Error::Aggregation("no successful runs".into()))?;
    let grid: Vec<u64> = first.checkpoints.iter().map(|c| c.episode).collect();
    let mut builder = SummaryBuilder::new(&grid, results.len(), n_states, n_actions);
    for (m, runs) in results.iter().enumerate() {
        for (r, result) in runs.iter().enumerate() {
            builder.push(m, r as u64, result)?;
        }
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{partition_signature, Checkpoint, JointPolicy};

    fn run(norm: f64, optimal: bool, messages: Vec<usize>) -> RunResult {
        RunResult {
            seed: 0,
            checkpoints: vec![Checkpoint {
                episode: 10,
                mean_raw_reward: norm,
                mean_norm_reward: norm,
                optimal,
            }],
            partition: partition_signature(&messages),
            policy: JointPolicy {
                messages,
                actions: vec![0, 1, 2],
            },
            optimal,
            episodes_to_optimal: optimal.then_some(10),
            failure: None,
        }
    }

    #[test]
    fn two_runs() {
        let s = aggregate(
            &[vec![run(1.0, true, vec![0, 1, 2]), run(0.8, false, vec![0, 0, 1])]],
            3,
            3,
        )
        .unwrap();
        assert!((s.curve[0].mean_norm_reward - 0.9).abs() < 1e-15);
        assert!((s.curve[0].stderr - 0.1).abs() < 1e-12);
        assert_eq!(s.pct_optimal(), 0.5);
        assert_eq!(s.counts.iter().flatten().sum::<u64>(), 6);
        assert_eq!(s.partitions["{s1,s2}{s3}"], 1);
        assert_eq!(s.shared_message_share(), 0.5);
    }

    #[test]
    fn all_optimal_and_all_failed() {
        let s = aggregate(&[vec![run(1.0, true, vec![0, 1, 2]); 4]], 3, 3).unwrap();
        assert_eq!(s.pct_optimal(), 1.0);
        assert_eq!(s.curve[0].pct_optimal, 1.0);
        let mut bad = run(1.0, true, vec![0, 1, 2]);
        bad.failure = Some("nan".into());
        assert!(aggregate(&[vec![bad.clone()]], 3, 3).is_err());
        let mut b = SummaryBuilder::new(&[10], 1, 3, 3);
        b.push(0, 0, &bad).unwrap();
        assert!(matches!(b.finish(), Err(Error::Aggregation(_))));
    }
}
