//! Seeded training runs, greedy evaluation and run-level metrics.

mod aggregate;
mod experiment;
mod output;

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate, AggregateSummary, CurvePoint, FailureRecord, MatrixSummary, SummaryBuilder};
pub(crate) use experiment::{run_algorithm, thread_pool};
pub use experiment::{run_experiment, Experiment, ExperimentResult, GameSet};
pub use output::{write_outputs, OutputFiles, BOXPLOT_CSV, COUNTS_CSV, CURVES_CSV, PARTITIONS_CSV, SUMMARY_JSON};

use crate::agents::{AgentSpec, Outcome, Receiver, RunRng, Sender};
use crate::error::Result;
use crate::game::SignalingGame;

const MATRIX_DOMAIN: u64 = 0x6d61_7472_6978_0001;
const TUNING_DOMAIN: u64 = 0x7475_6e69_6e67_0002;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-run seed from `(master, matrix, run)`; independent of execution order.
pub fn derive_run_seed(master: u64, matrix_index: u64, run_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ matrix_index) ^ run_index)
}

/// Seed for generating random matrix `matrix_index`.
pub fn derive_matrix_seed(master: u64, matrix_index: u64) -> u64 {
    derive_run_seed(master ^ MATRIX_DOMAIN, matrix_index, u64::MAX)
}

/// Master seed for tuning; its matrices and runs are disjoint from those of
/// an evaluation experiment with the same master seed.
pub fn derive_tuning_seed(master: u64) -> u64 {
    splitmix64(master ^ TUNING_DOMAIN)
}

/// Environment, sender and receiver streams for one run.
pub fn run_streams(seed: u64) -> [RunRng; 3] {
    std::array::from_fn(|k| {
        let mut rng = RunRng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        rng
    })
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub game: Arc<SignalingGame>,
    pub spec: AgentSpec,
    pub episodes: u64,
    pub eval_every: u64,
    pub seed: u64,
}

/// Greedy joint policy: `state -> message -> action`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointPolicy {
    pub messages: Vec<usize>,
    pub actions: Vec<usize>,
}

/// Measurements at one evaluation-grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Episodes completed.
    pub episode: u64,
    /// Mean training reward over the episodes since the previous checkpoint.
    pub mean_raw_reward: f64,
    pub mean_norm_reward: f64,
    /// Whether the greedy joint policy is optimal at this point.
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub policy: JointPolicy,
    pub optimal: bool,
    pub episodes_to_optimal: Option<u64>,
    pub partition: PartitionSignature,
    /// Set when the run diverged; such runs are excluded from aggregates.
    pub failure: Option<String>,
}

/// Evaluation grid: every `eval_every` episodes, plus the final episode.
pub fn checkpoint_grid(episodes: u64, eval_every: u64) -> Vec<u64> {
    let step = eval_every.max(1);
    let mut grid: Vec<u64> = (1..=episodes / step).map(|k| k * step).collect();
    if grid.last() != Some(&episodes) {
        grid.push(episodes);
    }
    grid
}

/// Per-state greedy sweep; agents are only read.
pub fn evaluate_greedy_policy(sender: &dyn Sender, receiver: &dyn Receiver, game: &SignalingGame) -> JointPolicy {
    let messages: Vec<usize> = (0..game.n_states()).map(|s| sender.greedy_message(s)).collect();
    let actions = messages.iter().map(|m| receiver.greedy_action(*m)).collect();
    JointPolicy { messages, actions }
}

/// Every state's action attains that state's best payoff (within `1e-9`).
pub fn is_optimal(policy: &JointPolicy, game: &SignalingGame) -> bool {
    policy
        .actions
        .iter()
        .enumerate()
        .all(|(s, a)| game.is_best_action(s, *a))
}

/// Partition of states by shared greedy message, message identity erased.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PartitionSignature {
    classes: Vec<Vec<usize>>,
}

impl PartitionSignature {
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Every state has its own message.
    pub fn is_all_singletons(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }

    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if !text.starts_with('{') || !text.ends_with('}') {
            return None;
        }
        let classes = text[1..text.len() - 1]
            .split("}{")
            .map(|class| {
                class
                    .split(',')
                    .map(|s| s.trim().strip_prefix('s')?.parse::<usize>().ok()?.checked_sub(1))
                    .collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(PartitionSignature { classes })
    }
}

impl fmt::Display for PartitionSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for class in &self.classes {
            f.write_str("{")?;
            for (i, s) in class.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "s{}", s + 1)?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

impl From<PartitionSignature> for String {
    fn from(p: PartitionSignature) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PartitionSignature {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        PartitionSignature::parse(&s).ok_or_else(|| format!("bad partition signature {s:?}"))
    }
}

/// Canonical partition of states by equal message; classes ordered by their
/// smallest state.
pub fn partition_signature(messages: &[usize]) -> PartitionSignature {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<(usize, usize)> = Vec::new();
    for (s, m) in messages.iter().enumerate() {
        match seen.iter().find(|(msg, _)| msg == m) {
            Some((_, idx)) => classes[*idx].push(s),
            None => {
                seen.push((*m, classes.len()));
                classes.push(vec![s]);
            }
        }
    }
    PartitionSignature { classes }
}

fn finish(
    seed: u64,
    checkpoints: Vec<Checkpoint>,
    sender: &dyn Sender,
    receiver: &dyn Receiver,
    game: &SignalingGame,
    failure: Option<String>,
) -> RunResult {
    let policy = evaluate_greedy_policy(sender, receiver, game);
    let optimal = failure.is_none() && is_optimal(&policy, game);
    let episodes_to_optimal = if optimal {
        let stable_from = checkpoints.iter().rposition(|c| !c.optimal).map_or(0, |i| i + 1);
        checkpoints.get(stable_from).map(|c| c.episode)
    } else {
        None
    };
    RunResult {
        seed,
        partition: partition_signature(&policy.messages),
        checkpoints,
        policy,
        optimal,
        episodes_to_optimal,
        failure,
    }
}

/// Runs one seeded training run.
///
/// Divergence (non-finite values) does not return an error; it is recorded in
/// [`RunResult::failure`]. Errors are reserved for invalid configurations.
pub fn run_training(config: &RunConfig) -> Result<RunResult> {
    let game = config.game.as_ref();
    let (mut sender, mut receiver) = config.spec.build(game)?;
    let [mut env_rng, mut sender_rng, mut receiver_rng] = run_streams(config.seed);
    let grid = checkpoint_grid(config.episodes, config.eval_every);
    let mut checkpoints = Vec::with_capacity(grid.len());
    let mut next = grid.iter().copied().peekable();
    let (mut raw_sum, mut norm_sum, mut window) = (0.0, 0.0, 0u64);

    for episode in 0..config.episodes {
        let state = game.sample_state(&mut env_rng);
        let message = sender.act(state, episode, &mut sender_rng);
        let action = receiver.act(message, episode, &mut receiver_rng);
        let (reward, norm) = game.step_unchecked(state, action);
        let outcome = Outcome {
            episode,
            state,
            message,
            action,
            reward,
        };
        let learned = sender
            .learn(&outcome, &mut sender_rng)
            .and_then(|_| receiver.learn(&outcome, &mut receiver_rng));
        if let Err(e) = learned {
            let failure = Some(format!("episode {episode}: {e}"));
            return Ok(finish(
                config.seed,
                checkpoints,
                sender.as_ref(),
                receiver.as_ref(),
                game,
                failure,
            ));
        }
        raw_sum += reward;
        norm_sum += norm;
        window += 1;

        if next.peek() == Some(&(episode + 1)) {
            next.next();
            if !(sender.is_finite() && receiver.is_finite()) {
                let failure = Some(format!("episode {episode}: non-finite agent values"));
                return Ok(finish(
                    config.seed,
                    checkpoints,
                    sender.as_ref(),
                    receiver.as_ref(),
                    game,
                    failure,
                ));
            }
            let policy = evaluate_greedy_policy(sender.as_ref(), receiver.as_ref(), game);
            checkpoints.push(Checkpoint {
                episode: episode + 1,
                mean_raw_reward: raw_sum / window as f64,
                mean_norm_reward: norm_sum / window as f64,
                optimal: is_optimal(&policy, game),
            });
            raw_sum = 0.0;
            norm_sum = 0.0;
            window = 0;
        }
    }
    Ok(finish(
        config.seed,
        checkpoints,
        sender.as_ref(),
        receiver.as_ref(),
        game,
        None,
    ))
}

/// Runs training and also returns the trained agents.
pub fn train_agents(config: &RunConfig) -> Result<(Box<dyn Sender>, Box<dyn Receiver>)> {
    let game = config.game.as_ref();
    let (mut sender, mut receiver) = config.spec.build(game)?;
    let [mut env_rng, mut sender_rng, mut receiver_rng] = run_streams(config.seed);
    for episode in 0..config.episodes {
        let state = game.sample_state(&mut env_rng);
        let message = sender.act(state, episode, &mut sender_rng);
        let action = receiver.act(message, episode, &mut receiver_rng);
        let (reward, _) = game.step_unchecked(state, action);
        let outcome = Outcome {
            episode,
            state,
            message,
            action,
            reward,
        };
        sender.learn(&outcome, &mut sender_rng)?;
        receiver.learn(&outcome, &mut receiver_rng)?;
    }
    Ok((sender, receiver))
}
