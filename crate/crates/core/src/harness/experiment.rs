//! Parallel experiments over many games and runs.

use std::sync::Arc;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{AggregateSummary, SummaryBuilder};
use super::{checkpoint_grid, derive_matrix_seed, derive_run_seed, run_training, RunConfig, RunResult};
use crate::agents::{AgentSpec, RunRng};
use crate::error::{Error, Result};
use crate::game::{climbing_game, generate_random_game, SignalingGame};

const CHUNK: usize = 2048;

/// Which payoff matrices an experiment runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GameSet {
    Climbing,
    /// `n_matrices` uniform random `size x size` games from `seed`.
    Random {
        size: usize,
        n_matrices: usize,
        seed: u64,
    },
}

impl GameSet {
    pub fn n_matrices(&self) -> usize {
        match self {
            GameSet::Climbing => 1,
            GameSet::Random { n_matrices, .. } => *n_matrices,
        }
    }

    /// Matrix ids and games, in matrix-index order.
    pub fn materialize(&self) -> Result<Vec<(String, Arc<SignalingGame>)>> {
        match self {
            GameSet::Climbing => Ok(vec![("climbing".into(), Arc::new(climbing_game()))]),
            GameSet::Random { size, n_matrices, seed } => (0..*n_matrices)
                .map(|i| {
                    let mut rng = RunRng::seed_from_u64(derive_matrix_seed(*seed, i as u64));
                    Ok((i.to_string(), Arc::new(generate_random_game(*size, &mut rng)?)))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub games: GameSet,
    pub algorithms: Vec<AgentSpec>,
    pub runs: u64,
    pub episodes: u64,
    pub eval_every: u64,
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Results do not depend on it, so it
    /// is left out of serialized output.
    #[serde(skip_serializing, default)]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub matrix_ids: Vec<String>,
    pub summaries: Vec<(AgentSpec, AggregateSummary)>,
}

impl ExperimentResult {
    pub fn summary(&self, algorithm: crate::agents::Algorithm) -> Option<&AggregateSummary> {
        self.summaries
            .iter()
            .find(|(s, _)| s.algorithm == algorithm)
            .map(|(_, a)| a)
    }
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.runs == 0 || self.eval_every == 0 {
            return Err(Error::InvalidInput(
                "episodes, runs and eval_every must be at least 1".into(),
            ));
        }
        if self.games.n_matrices() == 0 {
            return Err(Error::InvalidInput("at least one matrix is required".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidInput("at least one algorithm is required".into()));
        }
        self.algorithms.iter().try_for_each(AgentSpec::validate)
    }
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every `(algorithm, matrix, run)` triple. Run seeds depend only on
/// `(seed, matrix, run)`, so all algorithms see the same seeds.
pub fn run_experiment(exp: &Experiment) -> Result<ExperimentResult> {
    exp.validate()?;
    let games = exp.games.materialize()?;
    let pool = thread_pool(exp.threads)?;
    let summaries = exp
        .algorithms
        .iter()
        .map(|spec| Ok((spec.clone(), run_algorithm(&pool, spec, &games, exp)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        matrix_ids: games.into_iter().map(|(id, _)| id).collect(),
        summaries,
    })
}

pub(crate) fn run_algorithm(
    pool: &rayon::ThreadPool,
    spec: &AgentSpec,
    games: &[(String, Arc<SignalingGame>)],
    exp: &Experiment,
) -> Result<AggregateSummary> {
    let grid = checkpoint_grid(exp.episodes, exp.eval_every);
    let (n_states, n_actions) = (games[0].1.n_states(), games[0].1.n_actions());
    let mut builder = SummaryBuilder::new(&grid, games.len(), n_states, n_actions);
    let items: Vec<(usize, u64)> = (0..games.len())
        .flat_map(|m| (0..exp.runs).map(move |r| (m, r)))
        .collect();
    for chunk in items.chunks(CHUNK) {
        let results: Vec<Result<RunResult>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|(m, r)| {
                    run_training(&RunConfig {
                        game: Arc::clone(&games[*m].1),
                        spec: spec.clone(),
                        episodes: exp.episodes,
                        eval_every: exp.eval_every,
                        seed: derive_run_seed(exp.seed, *m as u64, *r),
                    })
                })
                .collect()
        });
        for ((m, r), result) in chunk.iter().zip(results) {
            builder.push(*m, *r, &result?)?;
        }
    }
    builder.finish()
}
