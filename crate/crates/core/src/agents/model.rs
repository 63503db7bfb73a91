//! Agents that model their partner.

use rand::Rng;

use super::spec::Hyperparams;
use super::tables::{LinearEpsilonSchedule, QTable};
use super::{Outcome, Receiver, RunRng, Sender};
use crate::error::Result;
use crate::inference::{greedy_message, DeterministicMessagePolicy, FlatRowRule};
use crate::select;

/// Receiver that models the sender with a `(state, message)` table, infers the
/// most probable state from the received message, and acts on a
/// `(state, action)` table.
#[derive(Debug, Clone)]
pub struct ModelSenderReceiver {
    sender_model: QTable,
    q: QTable,
    model_policy: DeterministicMessagePolicy,
    rule: FlatRowRule,
    counts: Vec<u64>,
    step: f64,
    epsilon: LinearEpsilonSchedule,
    hindsight: bool,
    inferred: Option<usize>,
    column: Vec<f64>,
}

impl ModelSenderReceiver {
    pub fn new(n_states: usize, n_messages: usize, n_actions: usize, p: &Hyperparams) -> Self {
        let sender_model = QTable::new(n_states, n_messages, p.sender_init);
        let model_policy = DeterministicMessagePolicy::greedy(sender_model.values(), n_messages, p.flat_rows);
        ModelSenderReceiver {
            sender_model,
            q: QTable::new(n_states, n_actions, p.receiver_init),
            model_policy,
            rule: p.flat_rows,
            counts: vec![0; n_states],
            step: p.alpha,
            epsilon: p.epsilon,
            hindsight: p.hindsight,
            inferred: None,
            column: vec![0.0; n_states],
        }
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn sender_model(&self) -> &QTable {
        &self.sender_model
    }

    /// Scaled posterior score of every state for `message`.
    fn fill_column(&self, message: usize, column: &mut [f64]) {
        let n = self.counts.len();
        let total: u64 = self.counts.iter().sum();
        let prob = |s: usize| {
            if total == 0 {
                1.0 / n as f64
            } else {
                self.counts[s] as f64 / total as f64
            }
        };
        let mass: f64 = (0..n)
            .filter(|s| self.model_policy.get(*s) == Some(message))
            .map(prob)
            .sum();
        for (s, c) in column.iter_mut().enumerate() {
            *c = if mass == 0.0 {
                1.0
            } else if self.model_policy.get(s) == Some(message) {
                1.0 / mass
            } else {
                0.0
            };
        }
    }

    /// Most probable state for `message`, lowest index on ties.
    pub fn infer_greedy(&self, message: usize) -> usize {
        let mut column = vec![0.0; self.counts.len()];
        self.fill_column(message, &mut column);
        select::argmax_first_tol(&column)
    }
}

impl Receiver for ModelSenderReceiver {
    fn act(&mut self, message: usize, episode: u64, rng: &mut RunRng) -> usize {
        let mut column = std::mem::take(&mut self.column);
        self.fill_column(message, &mut column);
        let state = select::argmax_random(&column, rng);
        self.column = column;
        self.inferred = Some(state);
        let eps = self.epsilon.at(episode);
        if eps > 0.0 && rng.gen::<f64>() < eps {
            rng.gen_range(0..self.q.n_choices())
        } else {
            self.q.greedy(state)
        }
    }

    fn learn(&mut self, o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        let state = if self.hindsight {
            o.state
        } else {
            self.inferred.take().unwrap_or(o.state)
        };
        self.counts[state] += 1;
        self.sender_model.update(state, o.message, o.reward, self.step);
        self.model_policy
            .set(state, greedy_message(self.sender_model.row(state), self.rule));
        self.q.update(state, o.action, o.reward, self.step);
        Ok(())
    }

    fn greedy_action(&self, message: usize) -> usize {
        self.q.greedy(self.infer_greedy(message))
    }

    fn snapshot(&self) -> Vec<f64> {
        let mut out = self.sender_model.values().to_vec();
        out.extend_from_slice(self.q.values());
        out.extend(self.counts.iter().map(|c| *c as f64));
        out
    }
}

/// Sender that models the receiver with a `(message, action)` table and picks
/// the message whose predicted action pays best in the current state.
#[derive(Debug, Clone)]
pub struct ModelReceiverSender {
    receiver_model: QTable,
    q: QTable,
    step: f64,
    epsilon: LinearEpsilonSchedule,
    scores: Vec<f64>,
}

impl ModelReceiverSender {
    pub fn new(n_states: usize, n_messages: usize, n_actions: usize, p: &Hyperparams) -> Self {
        ModelReceiverSender {
            receiver_model: QTable::new(n_messages, n_actions, p.receiver_init),
            q: QTable::new(n_states, n_actions, p.sender_init),
            step: p.alpha,
            epsilon: p.epsilon,
            scores: vec![0.0; n_messages],
        }
    }

    pub fn receiver_model_mut(&mut self) -> &mut QTable {
        &mut self.receiver_model
    }

    pub fn q_mut(&mut self) -> &mut QTable {
        &mut self.q
    }

    fn fill_scores(&self, state: usize, scores: &mut [f64]) {
        for (m, score) in scores.iter_mut().enumerate() {
            *score = self.q.get(state, self.receiver_model.greedy(m));
        }
    }
}

impl Sender for ModelReceiverSender {
    fn act(&mut self, state: usize, episode: u64, rng: &mut RunRng) -> usize {
        let eps = self.epsilon.at(episode);
        if eps > 0.0 && rng.gen::<f64>() < eps {
            return rng.gen_range(0..self.scores.len());
        }
        let mut scores = std::mem::take(&mut self.scores);
        self.fill_scores(state, &mut scores);
        let m = select::argmax_first(&scores);
        self.scores = scores;
        m
    }

    /// Needs the receiver's realized action, which the environment reveals.
    fn learn(&mut self, o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        self.receiver_model.update(o.message, o.action, o.reward, self.step);
        self.q.update(o.state, o.action, o.reward, self.step);
        Ok(())
    }

    fn greedy_message(&self, state: usize) -> usize {
        let mut scores = vec![0.0; self.scores.len()];
        self.fill_scores(state, &mut scores);
        select::argmax_first(&scores)
    }

    fn snapshot(&self) -> Vec<f64> {
        let mut out = self.receiver_model.values().to_vec();
        out.extend_from_slice(self.q.values());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::climbing_game;
    use rand::SeedableRng;

    #[test]
    fn fresh_inference_is_uniform() {
        let p = Hyperparams::default();
        let mut counts = [0usize; 3];
        let mut rng = RunRng::seed_from_u64(3);
        for _ in 0..3000 {
            let mut r = ModelSenderReceiver::new(3, 3, 3, &p);
            let _ = r.act(1, 0, &mut rng);
            counts[r.inferred.unwrap()] += 1;
        }
        for c in counts {
            assert!((850..1150).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn hindsight_with_fixed_optimal_sender_converges() {
        let game = climbing_game();
        let p = Hyperparams {
            alpha: 0.1,
            epsilon: LinearEpsilonSchedule::new(1.0, 1.25e-3),
            hindsight: true,
            ..Hyperparams::default()
        };
        let mut r = ModelSenderReceiver::new(3, 3, 3, &p);
        let mut rng = RunRng::seed_from_u64(1);
        for e in 0..3000u64 {
            let s = game.sample_state(&mut rng);
            let a = r.act(s, e, &mut rng);
            let (reward, _) = game.step(s, a).unwrap();
            let o = Outcome {
                episode: e,
                state: s,
                message: s,
                action: a,
                reward,
            };
            r.learn(&o, &mut rng).unwrap();
        }
        for s in 0..3 {
            assert!(game.is_best_action(s, r.greedy_action(s)), "state {s}");
        }
    }

    #[test]
    fn model_r_picks_best_message_for_frozen_receiver() {
        let game = climbing_game();
        // frozen receiver: message m -> action receiver[m]
        let receiver = [2usize, 0, 1];
        let p = Hyperparams {
            epsilon: LinearEpsilonSchedule::GREEDY,
            ..Hyperparams::default()
        };
        let mut s = ModelReceiverSender::new(3, 3, 3, &p);
        for (m, a) in receiver.iter().enumerate() {
            *s.receiver_model_mut().get_mut(m, *a) = 1.0;
        }
        for st in 0..3 {
            for a in 0..3 {
                *s.q_mut().get_mut(st, a) = game.payoff.get(st, a);
            }
        }
        let mut rng = RunRng::seed_from_u64(0);
        for st in 0..3 {
            let m = s.act(st, 0, &mut rng);
            let best = (0..3)
                .map(|mm| game.payoff.get(st, receiver[mm]))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(game.payoff.get(st, receiver[m]), best);
        }
        let fresh = ModelReceiverSender::new(3, 3, 3, &p);
        assert_eq!(fresh.greedy_message(1), 0);
    }
}
