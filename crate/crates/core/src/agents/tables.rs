use serde::{Deserialize, Serialize};

use crate::select;

/// Row-major value table indexed `(context, choice)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_choices: usize,
    init_value: f64,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_contexts: usize, n_choices: usize, init_value: f64) -> Self {
        QTable {
            n_choices,
            init_value,
            values: vec![init_value; n_contexts * n_choices],
        }
    }

    pub fn n_contexts(&self) -> usize {
        self.values.len() / self.n_choices
    }

    pub fn n_choices(&self) -> usize {
        self.n_choices
    }

    pub fn init_value(&self) -> f64 {
        self.init_value
    }

    #[inline]
    pub fn get(&self, context: usize, choice: usize) -> f64 {
        self.values[context * self.n_choices + choice]
    }

    #[inline]
    pub fn get_mut(&mut self, context: usize, choice: usize) -> &mut f64 {
        &mut self.values[context * self.n_choices + choice]
    }

    #[inline]
    pub fn row(&self, context: usize) -> &[f64] {
        &self.values[context * self.n_choices..(context + 1) * self.n_choices]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Q <- Q + step (target - Q)`.
    #[inline]
    pub fn update(&mut self, context: usize, choice: usize, target: f64, step: f64) {
        let q = self.get_mut(context, choice);
        *q += step * (target - *q);
    }

    /// Lowest-index greedy choice.
    #[inline]
    pub fn greedy(&self, context: usize) -> usize {
        select::argmax_first(self.row(context))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Asymmetric update: `step_up` for positive TD errors, `step_down` otherwise.
#[inline]
pub fn hysteretic_update(q: f64, reward: f64, step_up: f64, step_down: f64) -> f64 {
    let delta = reward - q;
    if delta > 0.0 {
        q + step_up * delta
    } else {
        q + step_down * delta
    }
}

/// Numerically stable softmax of `logits` into `out`.
#[inline]
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = select::max_value(logits);
    let mut sum = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, &mut out);
    out
}

/// `d log p_u / d theta_k = 1{k = u} - p_k`.
#[inline]
pub fn grad_log_softmax_into(probs: &[f64], taken: usize, out: &mut [f64]) {
    for (k, (g, p)) in out.iter_mut().zip(probs).enumerate() {
        *g = if k == taken { 1.0 } else { 0.0 } - p;
    }
}

/// `d p_u / d theta_k = p_u (1{k = u} - p_k)`.
pub fn grad_softmax_into(probs: &[f64], taken: usize, out: &mut [f64]) {
    grad_log_softmax_into(probs, taken, out);
    let p = probs[taken];
    out.iter_mut().for_each(|g| *g *= p);
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// Softmax policy parameters `theta` indexed `(context, choice)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxTable {
    params: QTable,
}

impl SoftmaxTable {
    pub fn new(n_contexts: usize, n_choices: usize) -> Self {
        SoftmaxTable {
            params: QTable::new(n_contexts, n_choices, 0.0),
        }
    }

    pub fn n_contexts(&self) -> usize {
        self.params.n_contexts()
    }

    pub fn n_choices(&self) -> usize {
        self.params.n_choices()
    }

    pub fn params(&self, context: usize) -> &[f64] {
        self.params.row(context)
    }

    pub fn params_mut(&mut self, context: usize) -> &mut [f64] {
        let n = self.params.n_choices();
        let start = context * n;
        &mut self.params.values[start..start + n]
    }

    pub fn probabilities_into(&self, context: usize, out: &mut [f64]) {
        softmax_into(self.params(context), out);
    }

    pub fn probabilities(&self, context: usize) -> Vec<f64> {
        softmax(self.params(context))
    }

    /// Mode of the policy, lowest index on ties.
    pub fn greedy(&self, context: usize) -> usize {
        self.params.greedy(context)
    }

    pub fn is_finite(&self) -> bool {
        self.params.is_finite()
    }
}

/// `epsilon(t) = max(0, initial - t * decay)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearEpsilonSchedule {
    pub initial: f64,
    pub decay: f64,
}

impl LinearEpsilonSchedule {
    pub const GREEDY: Self = LinearEpsilonSchedule {
        initial: 0.0,
        decay: 0.0,
    };

    pub fn new(initial: f64, decay: f64) -> Self {
        LinearEpsilonSchedule { initial, decay }
    }

    #[inline]
    pub fn at(&self, t: u64) -> f64 {
        (self.initial - t as f64 * self.decay).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LenienceParams {
    pub max_temp: f64,
    pub min_temp: f64,
    /// Multiplicative temperature decay applied per visit.
    pub temp_decay: f64,
    /// Action-selection moderation `omega`.
    pub omega: f64,
    /// Lenience moderation `theta`.
    pub theta: f64,
}

/// Per-entry lenience temperatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LenienceState {
    pub params: LenienceParams,
    temps: QTable,
}

impl LenienceState {
    pub fn new(n_contexts: usize, n_choices: usize, params: LenienceParams) -> Self {
        LenienceState {
            params,
            temps: QTable::new(n_contexts, n_choices, params.max_temp),
        }
    }

    pub fn temperature(&self, context: usize, choice: usize) -> f64 {
        self.temps.get(context, choice)
    }

    pub fn temperatures(&self) -> &[f64] {
        self.temps.values()
    }

    /// Boltzmann temperature for `context`: `omega * mean T`, clamped.
    pub fn selection_temperature(&self, context: usize) -> f64 {
        let row = self.temps.row(context);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        (self.params.omega * mean).clamp(self.params.min_temp, self.params.max_temp)
    }

    /// Probability that a negative update to `(context, choice)` is applied.
    pub fn negative_update_probability(&self, context: usize, choice: usize) -> f64 {
        let t = self.temps.get(context, choice);
        1.0 - (-1.0 / (self.params.theta * t)).exp()
    }

    pub fn cool(&mut self, context: usize, choice: usize) {
        let min = self.params.min_temp;
        let decay = self.params.temp_decay;
        let t = self.temps.get_mut(context, choice);
        *t = (*t * decay).max(min);
    }
}
