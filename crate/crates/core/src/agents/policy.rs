//! REINFORCE learners and the positive-signaling objective.

use rand::Rng;

use super::spec::Hyperparams;
use super::tables::{entropy, grad_log_softmax_into, SoftmaxTable};
use super::{Outcome, Receiver, RunRng, Sender};
use crate::error::{Error, Result};

/// Softmax policy trained by REINFORCE with a per-context value baseline.
#[derive(Debug, Clone)]
pub struct PolicyLearner {
    theta: SoftmaxTable,
    baseline: Vec<f64>,
    policy_step: f64,
    value_step: f64,
    probs: Vec<f64>,
    grad: Vec<f64>,
}

impl PolicyLearner {
    pub fn new(n_contexts: usize, n_choices: usize, policy_step: f64, value_step: f64) -> Self {
        PolicyLearner {
            theta: SoftmaxTable::new(n_contexts, n_choices),
            baseline: vec![0.0; n_contexts],
            policy_step,
            value_step,
            probs: vec![0.0; n_choices],
            grad: vec![0.0; n_choices],
        }
    }

    pub fn theta(&self) -> &SoftmaxTable {
        &self.theta
    }

    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }

    fn sample(&mut self, context: usize, rng: &mut RunRng) -> usize {
        self.theta.probabilities_into(context, &mut self.probs);
        let mut x = rng.gen::<f64>();
        for (i, p) in self.probs.iter().enumerate() {
            if x < *p {
                return i;
            }
            x -= p;
        }
        self.probs.len() - 1
    }

    /// One REINFORCE step on `context`; the advantage uses the baseline from
    /// before this step's value update.
    pub fn reinforce_update(&mut self, context: usize, taken: usize, reward: f64) -> Result<()> {
        self.theta.probabilities_into(context, &mut self.probs);
        reinforce_step(
            self.theta.params_mut(context),
            &self.probs,
            taken,
            reward,
            &mut self.baseline[context],
            self.policy_step,
            self.value_step,
            &mut self.grad,
        )
    }

    fn snapshot_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for c in 0..self.theta.n_contexts() {
            out.extend_from_slice(self.theta.params(c));
        }
        out.extend_from_slice(&self.baseline);
        out
    }
}

/// `theta += policy_step * (r - V) * grad log softmax(taken)`, then
/// `V += value_step * (r - V)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn reinforce_step(
    params: &mut [f64],
    probs: &[f64],
    taken: usize,
    reward: f64,
    baseline: &mut f64,
    policy_step: f64,
    value_step: f64,
    grad: &mut [f64],
) -> Result<()> {
    let advantage = reward - *baseline;
    grad_log_softmax_into(probs, taken, grad);
    if !advantage.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("REINFORCE gradient".into()));
    }
    for (t, g) in params.iter_mut().zip(grad.iter()) {
        *t += policy_step * advantage * g;
    }
    *baseline += value_step * (reward - *baseline);
    Ok(())
}

impl Receiver for PolicyLearner {
    fn act(&mut self, message: usize, _episode: u64, rng: &mut RunRng) -> usize {
        self.sample(message, rng)
    }

    fn learn(&mut self, o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        self.reinforce_update(o.message, o.action, o.reward)
    }

    fn greedy_action(&self, message: usize) -> usize {
        self.theta.greedy(message)
    }

    fn snapshot(&self) -> Vec<f64> {
        self.snapshot_values()
    }
}

impl Sender for PolicyLearner {
    fn act(&mut self, state: usize, _episode: u64, rng: &mut RunRng) -> usize {
        self.sample(state, rng)
    }

    fn learn(&mut self, o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        self.reinforce_update(o.state, o.message, o.reward)
    }

    fn greedy_message(&self, state: usize) -> usize {
        self.theta.greedy(state)
    }

    fn snapshot(&self) -> Vec<f64> {
        self.snapshot_values()
    }
}

fn all_probabilities(theta: &SoftmaxTable) -> Vec<Vec<f64>> {
    (0..theta.n_contexts()).map(|s| theta.probabilities(s)).collect()
}

fn marginal(probs: &[Vec<f64>], state_weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; probs[0].len()];
    for (row, w) in probs.iter().zip(state_weights) {
        for (o, p) in out.iter_mut().zip(row) {
            *o += w * p;
        }
    }
    out
}

/// `lambda H(p(m)) - (H(m|state) - target)^2` with `p(m) = sum_s w_s p(m|s)`.
pub fn signaling_objective(theta: &SoftmaxTable, state_weights: &[f64], state: usize, lambda: f64, target: f64) -> f64 {
    let probs = all_probabilities(theta);
    let p_m = marginal(&probs, state_weights);
    let h_cond = entropy(&probs[state]);
    lambda * entropy(&p_m) - (h_cond - target).powi(2)
}

/// Analytic gradient of [`signaling_objective`] w.r.t. every parameter,
/// row-major `(state, message)`.
pub fn signaling_gradient(
    theta: &SoftmaxTable,
    state_weights: &[f64],
    state: usize,
    lambda: f64,
    target: f64,
) -> Vec<f64> {
    let n_m = theta.n_choices();
    let probs = all_probabilities(theta);
    let p_m = marginal(&probs, state_weights);
    let log_pm: Vec<f64> = p_m.iter().map(|p| if *p > 0.0 { p.ln() } else { 0.0 }).collect();
    let mut grad = vec![0.0; theta.n_contexts() * n_m];

    // marginal entropy: -w_s p_sk (ln pbar_k - sum_j p_sj ln pbar_j)
    for (s, row) in probs.iter().enumerate() {
        let w = state_weights[s];
        if w == 0.0 {
            continue;
        }
        let mean_log: f64 = row
            .iter()
            .zip(&log_pm)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, l)| p * l)
            .sum();
        for (k, p) in row.iter().enumerate() {
            if *p > 0.0 {
                grad[s * n_m + k] += lambda * -w * p * (log_pm[k] - mean_log);
            }
        }
    }

    // conditional entropy of the current state: dH/dtheta_k = -p_k (ln p_k + H)
    let row = &probs[state];
    let h = entropy(row);
    let coeff = -2.0 * (h - target);
    for (k, p) in row.iter().enumerate() {
        if *p > 0.0 {
            grad[state * n_m + k] += coeff * -p * (p.ln() + h);
        }
    }
    grad
}

/// REINFORCE sender that also ascends the positive-signaling objective,
/// computed exactly over the tabular policy each episode.
#[derive(Debug, Clone)]
pub struct CommBiasSender {
    learner: PolicyLearner,
    weight: f64,
    lambda: f64,
    target: f64,
    empirical_prior: bool,
    counts: Vec<u64>,
}

impl CommBiasSender {
    pub fn new(n_states: usize, n_messages: usize, p: &Hyperparams) -> Self {
        CommBiasSender {
            learner: PolicyLearner::new(n_states, n_messages, p.policy_step, p.value_step),
            weight: p.signaling_weight,
            lambda: p.entropy_weight,
            target: p.entropy_target,
            empirical_prior: p.empirical_signaling_prior,
            counts: vec![0; n_states],
        }
    }

    pub fn theta(&self) -> &SoftmaxTable {
        self.learner.theta()
    }

    fn state_weights(&self) -> Vec<f64> {
        let n = self.counts.len();
        let total: u64 = self.counts.iter().sum();
        if self.empirical_prior && total > 0 {
            self.counts.iter().map(|c| *c as f64 / total as f64).collect()
        } else {
            vec![1.0 / n as f64; n]
        }
    }
}

impl Sender for CommBiasSender {
    fn act(&mut self, state: usize, episode: u64, rng: &mut RunRng) -> usize {
        self.counts[state] += 1;
        Sender::act(&mut self.learner, state, episode, rng)
    }

    fn learn(&mut self, o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        let weights = self.state_weights();
        let grad = signaling_gradient(&self.learner.theta, &weights, o.state, self.lambda, self.target);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("positive-signaling gradient".into()));
        }
        self.learner.reinforce_update(o.state, o.message, o.reward)?;
        let scale = self.learner.policy_step * self.weight;
        let n_m = self.learner.theta.n_choices();
        for s in 0..self.learner.theta.n_contexts() {
            for (t, g) in self
                .learner
                .theta
                .params_mut(s)
                .iter_mut()
                .zip(&grad[s * n_m..(s + 1) * n_m])
            {
                *t += scale * g;
            }
        }
        Ok(())
    }

    fn greedy_message(&self, state: usize) -> usize {
        self.learner.theta.greedy(state)
    }

    fn snapshot(&self) -> Vec<f64> {
        self.learner.snapshot_values()
    }
}
