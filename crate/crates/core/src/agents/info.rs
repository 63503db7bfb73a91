//! Inference-based senders.

use super::spec::Hyperparams;
use super::tables::{grad_log_softmax_into, QTable, SoftmaxTable};
use super::{Outcome, RunRng, Sender};
use crate::error::{Error, Result};
use crate::inference::{
    greedy_message, importance_weight, message_mass, posterior_row_from_mass, scaled_score_row_into,
    DeterministicMessagePolicy, EmpiricalPrior, FlatRowRule, MarginalEstimate,
};
use crate::select;

/// Exact tabular sender: Q-learning on the sent message, messages chosen by
/// maximizing the scaled posterior of the current state.
#[derive(Debug, Clone)]
pub struct InfoSender {
    q: QTable,
    step: f64,
    rule: FlatRowRule,
    prior: EmpiricalPrior,
    policy: DeterministicMessagePolicy,
    probs: Vec<f64>,
    mass: Vec<f64>,
    scores: Vec<f64>,
}

impl InfoSender {
    pub fn new(n_states: usize, n_messages: usize, init: f64, step: f64, rule: FlatRowRule) -> Self {
        let q = QTable::new(n_states, n_messages, init);
        let policy = DeterministicMessagePolicy::greedy(q.values(), n_messages, rule);
        InfoSender {
            q,
            step,
            rule,
            prior: EmpiricalPrior::new(n_states),
            policy,
            probs: vec![0.0; n_states],
            mass: vec![0.0; n_messages],
            scores: vec![0.0; n_messages],
        }
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn prior(&self) -> &EmpiricalPrior {
        &self.prior
    }

    pub fn policy(&self) -> &DeterministicMessagePolicy {
        &self.policy
    }

    /// Scores of every message for `state` under the current counts.
    pub fn scores(&self, state: usize) -> Vec<f64> {
        let mut probs = vec![0.0; self.probs.len()];
        let mut mass = vec![0.0; self.mass.len()];
        let mut scores = vec![0.0; self.scores.len()];
        if self.prior.probabilities_into(&mut probs).is_ok() {
            message_mass(&self.policy, &probs, &mut mass);
        }
        posterior_row_from_mass(self.policy.get(state), &mass, &mut scores);
        scores
    }
}

impl Sender for InfoSender {
    fn act(&mut self, state: usize, _episode: u64, rng: &mut RunRng) -> usize {
        self.prior.observe(state);
        self.prior
            .probabilities_into(&mut self.probs)
            .expect("state was just observed");
        message_mass(&self.policy, &self.probs, &mut self.mass);
        posterior_row_from_mass(self.policy.get(state), &self.mass, &mut self.scores);
        select::argmax_random(&self.scores, rng)
    }

    fn learn(&mut self, o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        self.q.update(o.state, o.message, o.reward, self.step);
        self.policy.set(o.state, greedy_message(self.q.row(o.state), self.rule));
        Ok(())
    }

    fn greedy_message(&self, state: usize) -> usize {
        select::argmax_first_tol(&self.scores(state))
    }

    fn snapshot(&self) -> Vec<f64> {
        let mut out = self.q.values().to_vec();
        out.extend(self.prior.counts().iter().map(|c| *c as f64));
        out
    }

    fn is_finite(&self) -> bool {
        self.q.is_finite()
    }
}

#[derive(Debug, Clone, Copy)]
struct Step {
    state: usize,
    message: usize,
    reward: f64,
}

/// Approximate sender: softmax messaging policy scaled by a moving-average
/// marginal, trained off-policy once per rollout.
#[derive(Debug, Clone)]
pub struct ApproxInfoSender {
    theta: SoftmaxTable,
    baseline: Vec<f64>,
    marginal: MarginalEstimate,
    rollout_len: usize,
    policy_step: f64,
    value_step: f64,
    gamma: f64,
    rollout: Vec<Step>,
    probs: Vec<f64>,
    scores: Vec<f64>,
    grad: Vec<f64>,
}

impl ApproxInfoSender {
    pub fn new(n_states: usize, n_messages: usize, p: &Hyperparams) -> Result<Self> {
        Ok(ApproxInfoSender {
            theta: SoftmaxTable::new(n_states, n_messages),
            baseline: vec![0.0; n_states],
            marginal: MarginalEstimate::new(n_messages, p.mu, p.accumulation)?,
            rollout_len: p.rollout_len,
            policy_step: p.policy_step,
            value_step: p.value_step,
            gamma: p.gamma,
            rollout: Vec::with_capacity(p.rollout_len),
            probs: vec![0.0; n_messages],
            scores: vec![0.0; n_messages],
            grad: vec![0.0; n_messages],
        })
    }

    pub fn marginal(&self) -> &MarginalEstimate {
        &self.marginal
    }

    pub fn theta(&self) -> &SoftmaxTable {
        &self.theta
    }

    fn train_rollout(&mut self) -> Result<()> {
        // one-step episodes: no successor state, so the bootstrap term vanishes
        let bootstrap = 0.0;
        for i in 0..self.rollout.len() {
            let Step { state, message, reward } = self.rollout[i];
            self.theta.probabilities_into(state, &mut self.probs);
            let rho = importance_weight(&self.probs, message);
            grad_log_softmax_into(&self.probs, message, &mut self.grad);
            let advantage = reward + self.gamma * bootstrap - self.baseline[state];
            let scale = self.policy_step * rho * advantage;
            if !scale.is_finite() {
                return Err(Error::NonFinite(format!(
                    "approximate sender gradient in state {state}"
                )));
            }
            for (t, g) in self.theta.params_mut(state).iter_mut().zip(&self.grad) {
                *t += scale * g;
            }
            self.baseline[state] += self.value_step * (reward - self.baseline[state]);
        }
        self.rollout.clear();
        Ok(())
    }
}

impl Sender for ApproxInfoSender {
    fn act(&mut self, state: usize, _episode: u64, rng: &mut RunRng) -> usize {
        self.theta.probabilities_into(state, &mut self.probs);
        scaled_score_row_into(&self.probs, self.marginal.estimate(), &mut self.scores);
        let m = select::argmax_random(&self.scores, rng);
        self.marginal.accumulate_rollout(m, &self.probs, self.rollout_len);
        m
    }

    fn learn(&mut self, o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        self.rollout.push(Step {
            state: o.state,
            message: o.message,
            reward: o.reward,
        });
        if self.rollout.len() == self.rollout_len {
            self.marginal.update_marginal();
            self.train_rollout()?;
        }
        Ok(())
    }

    fn greedy_message(&self, state: usize) -> usize {
        let probs = self.theta.probabilities(state);
        let mut scores = vec![0.0; probs.len()];
        scaled_score_row_into(&probs, self.marginal.estimate(), &mut scores);
        select::argmax_first_tol(&scores)
    }

    fn snapshot(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for s in 0..self.theta.n_contexts() {
            out.extend_from_slice(self.theta.params(s));
        }
        out.extend_from_slice(&self.baseline);
        out.extend_from_slice(self.marginal.estimate());
        out
    }
}
