//! Grid search over hyperparameters, scored by the fraction of optimal runs
//! on fresh random games.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentSpec, Algorithm, Bank};
use crate::error::{Error, Result};
use crate::harness::{derive_tuning_seed, run_algorithm, thread_pool, Experiment, GameSet};

/// Candidate values per named parameter (see [`crate::agents::PARAMETER_NAMES`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub bank: Bank,
    /// Axes in name order; an empty map is the single preset point.
    #[serde(default)]
    pub axes: BTreeMap<String, Vec<f64>>,
}

const STEPS: [f64; 4] = [0.01, 0.05, 0.1, 0.5];
const EPSILONS: [f64; 4] = [1.0, 0.5, 0.3, 0.1];

impl GridSpec {
    /// The published tuning sets for `algorithm`.
    pub fn default_for(algorithm: Algorithm, bank: Bank) -> Self {
        let axes: Vec<(&str, Vec<f64>)> = match algorithm {
            Algorithm::InfoQ => vec![],
            Algorithm::InfoPolicy => vec![("receiver_step", vec![0.1, 0.5]), ("sender_alpha", vec![0.5, 0.05])],
            Algorithm::ApproxInfo => vec![("mu", vec![0.0, 0.25, 0.5, 0.9])],
            Algorithm::Iql | Algorithm::ModelS | Algorithm::ModelR => {
                vec![("alpha", STEPS.to_vec()), ("epsilon", EPSILONS.to_vec())]
            }
            Algorithm::Iq => vec![
                ("alpha", STEPS.to_vec()),
                ("epsilon", EPSILONS.to_vec()),
                ("period", vec![1.0, 10.0, 100.0]),
            ],
            Algorithm::HystereticQ => vec![
                ("alpha", STEPS.to_vec()),
                ("epsilon", EPSILONS.to_vec()),
                ("beta_ratio", vec![0.1, 1.0, 10.0]),
            ],
            Algorithm::Lenience => vec![
                ("alpha", STEPS.to_vec()),
                ("temp_decay", vec![0.999, 0.995, 0.99]),
                ("max_temp", vec![5.0, 50.0, 500.0, 5000.0]),
                ("omega", vec![0.1, 1.0, 10.0]),
                ("theta", vec![0.1, 1.0, 10.0]),
            ],
            Algorithm::CommBias => vec![
                ("policy_step", vec![0.1, 0.5]),
                ("signaling_weight", vec![0.001, 0.01, 0.1]),
                ("entropy_weight", vec![0.1, 0.3, 1.0]),
                ("entropy_target", vec![0.0, 0.5, 1.0, 1.5]),
            ],
        };
        GridSpec {
            algorithm,
            bank,
            axes: axes.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let grid: GridSpec = toml::from_str(text).map_err(|e| Error::Config(format!("grid: {e}")))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((name, _)) = self.axes.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::Config(format!("grid axis {name:?} is empty")));
        }
        for point in self.points() {
            AgentSpec::preset(self.algorithm, self.bank).with_overrides(&point)?;
        }
        Ok(())
    }

    pub fn cardinality(&self) -> usize {
        self.axes.values().map(Vec::len).product()
    }

    /// Cartesian product in lexicographic index order (last axis fastest).
    pub fn points(&self) -> Vec<BTreeMap<String, f64>> {
        let mut points = vec![BTreeMap::new()];
        for (name, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), *v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningProtocol {
    pub size: usize,
    pub n_matrices: usize,
    pub runs_per_matrix: u64,
    pub episodes: u64,
    pub eval_every: u64,
    pub seed: u64,
    #[serde(skip_serializing, default)]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub params: BTreeMap<String, f64>,
    pub pct_optimal: f64,
    /// Final mean normalized reward.
    pub mean_reward: f64,
    pub successful_runs: u64,
    pub optimal_runs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub grid: GridSpec,
    pub protocol: TuningProtocol,
    pub rows: Vec<TuningRow>,
    pub best: usize,
}

impl TuningResult {
    pub fn best_row(&self) -> &TuningRow {
        &self.rows[self.best]
    }

    pub fn best_spec(&self) -> Result<AgentSpec> {
        AgentSpec::preset(self.grid.algorithm, self.grid.bank).with_overrides(&self.best_row().params)
    }
}

fn lexicographic(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Ordering {
    a.values()
        .zip(b.values())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Winner order: higher pct-optimal (compared exactly as a fraction), then
/// higher mean reward, then the lexicographically smaller parameter vector.
pub fn compare_rows(a: &TuningRow, b: &TuningRow) -> Ordering {
    let score = |r: &TuningRow, other: &TuningRow| r.optimal_runs as u128 * other.successful_runs.max(1) as u128;
    score(b, a)
        .cmp(&score(a, b))
        .then_with(|| b.mean_reward.total_cmp(&a.mean_reward))
        .then_with(|| lexicographic(&a.params, &b.params))
}

/// Index of the winning row.
pub fn select_best(rows: &[TuningRow]) -> Option<usize> {
    (0..rows.len()).min_by(|i, j| compare_rows(&rows[*i], &rows[*j]))
}

/// Evaluates every grid point on the same tuning matrices and run seeds.
/// A point whose runs all diverge scores zero.
pub fn grid_search(grid: &GridSpec, protocol: &TuningProtocol) -> Result<TuningResult> {
    grid.validate()?;
    if protocol.n_matrices == 0 || protocol.runs_per_matrix == 0 || protocol.episodes == 0 {
        return Err(Error::InvalidInput(
            "tuning needs at least one matrix, run and episode".into(),
        ));
    }
    let seed = derive_tuning_seed(protocol.seed);
    let games = GameSet::Random {
        size: protocol.size,
        n_matrices: protocol.n_matrices,
        seed,
    };
    let materialized = games.materialize()?;
    let pool = thread_pool(protocol.threads)?;
    let mut rows = Vec::new();
    for params in grid.points() {
        let spec = AgentSpec::preset(grid.algorithm, grid.bank).with_overrides(&params)?;
        let exp = Experiment {
            games: games.clone(),
            algorithms: vec![spec.clone()],
            runs: protocol.runs_per_matrix,
            episodes: protocol.episodes,
            eval_every: protocol.eval_every,
            seed,
            threads: protocol.threads,
        };
        let row = match run_algorithm(&pool, &spec, &materialized, &exp) {
            Ok(s) => TuningRow {
                params,
                pct_optimal: s.pct_optimal(),
                mean_reward: s.final_mean_norm_reward,
                successful_runs: s.successful_runs,
                optimal_runs: s.optimal_runs,
            },
            Err(Error::Aggregation(_)) => TuningRow {
                params,
                pct_optimal: 0.0,
                mean_reward: 0.0,
                successful_runs: 0,
                optimal_runs: 0,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    let best = select_best(&rows).ok_or_else(|| Error::InvalidInput("empty grid".into()))?;
    Ok(TuningResult {
        grid: grid.clone(),
        protocol: *protocol,
        rows,
        best,
    })
}

/// Writes `tuning.csv` (one row per grid point) and `best.json`.
pub fn write_tuning(dir: &Path, result: &TuningResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("tuning.csv");
    let to_err = |e: csv::Error| Error::io(&path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(&path).map_err(to_err)?;
    let mut header: Vec<String> = vec!["algorithm".into()];
    header.extend(result.grid.axes.keys().cloned());
    header.extend(["pct_optimal", "mean_reward", "successful_runs", "optimal_runs"].map(String::from));
    w.write_record(&header).map_err(to_err)?;
    for row in &result.rows {
        let mut record = vec![result.grid.algorithm.name().to_string()];
        record.extend(row.params.values().map(f64::to_string));
        record.extend([
            row.pct_optimal.to_string(),
            row.mean_reward.to_string(),
            row.successful_runs.to_string(),
            row.optimal_runs.to_string(),
        ]);
        w.write_record(&record).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let best = result.best_row();
    let json = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "algorithm": result.grid.algorithm,
        "bank": result.grid.bank,
        "params": best.params,
        "pct_optimal": best.pct_optimal,
        "mean_reward": best.mean_reward,
        "successful_runs": best.successful_runs,
        "optimal_runs": best.optimal_runs,
        "spec": result.best_spec()?,
        "protocol": result.protocol,
        "grid_points": result.rows.len(),
    });
    let path = dir.join("best.json");
    let text = serde_json::to_string_pretty(&json).map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(params: &[(&str, f64)], optimal: u64, runs: u64, reward: f64) -> TuningRow {
        TuningRow {
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            pct_optimal: optimal as f64 / runs as f64,
            mean_reward: reward,
            successful_runs: runs,
            optimal_runs: optimal,
        }
    }

    #[test]
    fn default_grid_sizes() {
        let n = |a| GridSpec::default_for(a, Bank::Small).cardinality();
        assert_eq!(n(Algorithm::Iql), 16);
        assert_eq!(n(Algorithm::Iq), 48);
        assert_eq!(n(Algorithm::HystereticQ), 48);
        assert_eq!(n(Algorithm::Lenience), 432);
        assert_eq!(n(Algorithm::CommBias), 72);
        assert_eq!(n(Algorithm::InfoPolicy), 4);
        assert_eq!(n(Algorithm::InfoQ), 1);
        let g = GridSpec::default_for(Algorithm::Iq, Bank::Small);
        assert_eq!(g.points().len(), 48);
        assert_eq!(g.points()[1]["period"], 10.0);
        let h = GridSpec::default_for(Algorithm::HystereticQ, Bank::Small);
        assert_eq!(h.axes["beta_ratio"], vec![0.1, 1.0, 10.0]);
    }

    #[test]
    fn tie_break_chain() {
        let a = row(&[("alpha", 0.1)], 5, 10, 0.9);
        let b = row(&[("alpha", 0.5)], 6, 10, 0.1);
        assert_eq!(select_best(&[a.clone(), b.clone()]), Some(1));
        let c = row(&[("alpha", 0.5)], 5, 10, 0.95);
        assert_eq!(select_best(&[a.clone(), c.clone()]), Some(1));
        let d = row(&[("alpha", 0.05)], 5, 10, 0.9);
        assert_eq!(select_best(&[a.clone(), d]), Some(1));
        // 1/2 and 5/10 tie exactly
        let e = row(&[("alpha", 0.01)], 1, 2, 0.9);
        assert_eq!(select_best(&[a, e]), Some(1));
        assert_eq!(select_best(&[]), None);
    }

    #[test]
    fn rejects_empty_axis() {
        let text = "algorithm = \"iql\"\n[axes]\nalpha = []\n";
        assert!(GridSpec::from_toml(text).is_err());
        let text = "algorithm = \"iql\"\nbank = \"3x3\"\n[axes]\nalpha = [0.1, 0.5]\n";
        assert_eq!(GridSpec::from_toml(text).unwrap().cardinality(), 2);
        assert!(GridSpec::from_toml("algorithm = \"iql\"\nextra = 1\n").is_err());
    }
}
