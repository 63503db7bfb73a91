//! Bayesian message inference.
//!
//! The exact tabular sender scores every message `m` for the current state `s`
//! by the scaled posterior
//!
//! ```text
//! p(s|m) = 1{m = pi(s)} / sum_{s'} 1{m = pi(s')} p(s')
//! ```
//!
//! and falls back to `1` for messages no state currently maps to. The
//! approximate sender replaces the denominator with a moving-average marginal
//! `p_hat(m)` maintained over rollouts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::select;

/// Score given to messages that no state maps to.
pub const UNUSED_MESSAGE_SCORE: f64 = 1.0;

/// Lower bound applied to every marginal entry after an update.
pub const MARGINAL_FLOOR: f64 = 1e-9;

/// Visit counts `N(s)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalPrior {
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalPrior {
    pub fn new(n_states: usize) -> Self {
        EmpiricalPrior {
            counts: vec![0; n_states],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        EmpiricalPrior { counts, total }
    }

    pub fn observe(&mut self, state: usize) {
        self.counts[state] += 1;
        self.total += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `p(s) = N(s) / sum N`.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.counts.len()];
        self.probabilities_into(&mut out)?;
        Ok(out)
    }

    pub(crate) fn probabilities_into(&self, out: &mut [f64]) -> Result<()> {
        if self.total == 0 {
            return Err(Error::InvalidInput(
                "prior probabilities need at least one observed state".into(),
            ));
        }
        let total = self.total as f64;
        for (p, n) in out.iter_mut().zip(&self.counts) {
            *p = *n as f64 / total;
        }
        Ok(())
    }
}

/// How a greedy assignment treats a value row with no strict preference
/// (every message attains the row maximum).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlatRowRule {
    /// The state maps to no message yet: it contributes to no denominator and
    /// every used message scores 0 for it.
    #[default]
    Unassigned,
    /// The state maps to the lowest-index message.
    LowestIndex,
}

/// Greedy message map `pi(s)`; `None` marks a state with no preference yet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicMessagePolicy {
    assignment: Vec<Option<usize>>,
    n_messages: usize,
}

impl DeterministicMessagePolicy {
    pub fn new(assignment: Vec<usize>, n_messages: usize) -> Result<Self> {
        Self::from_partial(assignment.into_iter().map(Some).collect(), n_messages)
    }

    pub fn from_partial(assignment: Vec<Option<usize>>, n_messages: usize) -> Result<Self> {
        if let Some(m) = assignment.iter().flatten().find(|m| **m >= n_messages) {
            return Err(Error::OutOfRange {
                what: "message",
                index: *m,
                size: n_messages,
            });
        }
        Ok(DeterministicMessagePolicy { assignment, n_messages })
    }

    /// Greedy map from a row-major `(state, message)` value table.
    pub fn greedy(values: &[f64], n_messages: usize, rule: FlatRowRule) -> Self {
        let assignment = values
            .chunks_exact(n_messages)
            .map(|row| greedy_message(row, rule))
            .collect();
        DeterministicMessagePolicy { assignment, n_messages }
    }

    pub fn n_states(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_messages(&self) -> usize {
        self.n_messages
    }

    pub fn get(&self, state: usize) -> Option<usize> {
        self.assignment[state]
    }

    pub(crate) fn set(&mut self, state: usize, message: Option<usize>) {
        self.assignment[state] = message;
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }
}

/// Greedy message for one value row under `rule`.
pub fn greedy_message(row: &[f64], rule: FlatRowRule) -> Option<usize> {
    let best = select::argmax_first(row);
    match rule {
        FlatRowRule::LowestIndex => Some(best),
        FlatRowRule::Unassigned => {
            let max = row[best];
            if row.iter().all(|v| *v == max) {
                None
            } else {
                Some(best)
            }
        }
    }
}

/// Scaled posterior scores indexed `(state, message)`; not row-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledPosterior {
    n_states: usize,
    n_messages: usize,
    scores: Vec<f64>,
}

impl ScaledPosterior {
    pub fn get(&self, state: usize, message: usize) -> f64 {
        self.scores[state * self.n_messages + message]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.scores[state * self.n_messages..(state + 1) * self.n_messages]
    }

    pub fn column(&self, message: usize) -> Vec<f64> {
        (0..self.n_states).map(|s| self.get(s, message)).collect()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_messages(&self) -> usize {
        self.n_messages
    }
}

/// Per-message denominators `sum_{s'} 1{m = pi(s')} p(s')`.
pub(crate) fn message_mass(policy: &DeterministicMessagePolicy, probs: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|d| *d = 0.0);
    for (m, p) in policy.assignment.iter().zip(probs) {
        if let Some(m) = m {
            out[*m] += p;
        }
    }
}

/// Scores of every message for one state given precomputed message mass.
#[inline]
pub(crate) fn posterior_row_from_mass(assigned: Option<usize>, mass: &[f64], out: &mut [f64]) {
    for (m, (score, d)) in out.iter_mut().zip(mass).enumerate() {
        *score = if *d == 0.0 {
            UNUSED_MESSAGE_SCORE
        } else if assigned == Some(m) {
            1.0 / d
        } else {
            0.0
        };
    }
}

/// Full table of scaled posterior scores.
pub fn scaled_posterior(policy: &DeterministicMessagePolicy, probs: &[f64]) -> ScaledPosterior {
    let n_states = policy.n_states();
    let n_messages = policy.n_messages();
    let mut mass = vec![0.0; n_messages];
    message_mass(policy, probs, &mut mass);
    let mut scores = vec![0.0; n_states * n_messages];
    for (s, row) in scores.chunks_exact_mut(n_messages).enumerate() {
        posterior_row_from_mass(policy.get(s), &mass, row);
    }
    ScaledPosterior {
        n_states,
        n_messages,
        scores,
    }
}

/// Picks a maximizer of `posterior.row(state)`, ties uniformly at random.
pub fn select_message<R: Rng + ?Sized>(state: usize, posterior: &ScaledPosterior, rng: &mut R) -> usize {
    select::argmax_random(posterior.row(state), rng)
}

/// How rollout samples feed the empirical marginal `p_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccumulationMode {
    /// Only the sent message accumulates `p(m|s) / T`.
    #[default]
    PseudocodeLiteral,
    /// Every message accumulates `p(m'|s) / T`, giving an empirical mean of the
    /// unscaled policy rows.
    FullSweep,
}

/// Moving-average estimate `p_hat(m)` of the message marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEstimate {
    estimate: Vec<f64>,
    rollout_mean: Vec<f64>,
    weight: f64,
    mode: AccumulationMode,
}

impl MarginalEstimate {
    /// Uniform `p_hat`; `weight` is the moving-average weight `mu` in `[0, 1)`.
    pub fn new(n_messages: usize, weight: f64, mode: AccumulationMode) -> Result<Self> {
        if n_messages == 0 {
            return Err(Error::InvalidInput("marginal needs at least one message".into()));
        }
        if !(0.0..1.0).contains(&weight) {
            return Err(Error::InvalidInput(format!(
                "moving-average weight must lie in [0, 1), got {weight}"
            )));
        }
        Ok(MarginalEstimate {
            estimate: vec![1.0 / n_messages as f64; n_messages],
            rollout_mean: vec![0.0; n_messages],
            weight,
            mode,
        })
    }

    pub fn estimate(&self) -> &[f64] {
        &self.estimate
    }

    pub fn rollout_mean(&self) -> &[f64] {
        &self.rollout_mean
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mode(&self) -> AccumulationMode {
        self.mode
    }

    /// Adds one step's contribution to `p_bar`.
    pub fn accumulate_rollout(&mut self, chosen: usize, row: &[f64], rollout_len: usize) {
        let t = rollout_len as f64;
        match self.mode {
            AccumulationMode::PseudocodeLiteral => self.rollout_mean[chosen] += row[chosen] / t,
            AccumulationMode::FullSweep => {
                for (acc, p) in self.rollout_mean.iter_mut().zip(row) {
                    *acc += p / t;
                }
            }
        }
    }

    /// `p_hat <- mu p_hat + (1 - mu) p_bar`, floored, then clears `p_bar`.
    pub fn update_marginal(&mut self) {
        let mu = self.weight;
        for (est, bar) in self.estimate.iter_mut().zip(self.rollout_mean.iter_mut()) {
            *est = (mu * *est + (1.0 - mu) * *bar).max(MARGINAL_FLOOR);
            *bar = 0.0;
        }
    }
}

/// Elementwise `p(m|s) / p_hat(m)`.
pub fn scaled_score_row(row: &[f64], marginal: &MarginalEstimate) -> Vec<f64> {
    let mut out = vec![0.0; row.len()];
    scaled_score_row_into(row, marginal.estimate(), &mut out);
    out
}

#[inline]
pub(crate) fn scaled_score_row_into(row: &[f64], estimate: &[f64], out: &mut [f64]) {
    for ((o, p), q) in out.iter_mut().zip(row).zip(estimate) {
        *o = p / q;
    }
}

/// Off-policy weight for a deterministic behavior policy: `p(m|s) / 1`.
#[inline]
pub fn importance_weight(row: &[f64], chosen: usize) -> f64 {
    row[chosen]
}
