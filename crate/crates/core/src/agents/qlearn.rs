use rand::Rng;

use super::tables::{hysteretic_update, LinearEpsilonSchedule, QTable};
use super::{Outcome, Receiver, RunRng, Sender};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateRule {
    Plain { step: f64 },
    Hysteretic { up: f64, down: f64 },
}

/// Tabular one-step learner with epsilon-greedy exploration.
#[derive(Debug, Clone, PartialEq)]
pub struct QLearner {
    pub table: QTable,
    pub rule: UpdateRule,
    pub epsilon: LinearEpsilonSchedule,
}

impl QLearner {
    pub fn new(
        n_contexts: usize,
        n_choices: usize,
        init: f64,
        rule: UpdateRule,
        epsilon: LinearEpsilonSchedule,
    ) -> Self {
        QLearner {
            table: QTable::new(n_contexts, n_choices, init),
            rule,
            epsilon,
        }
    }

    #[inline]
    pub fn act(&self, context: usize, epsilon: f64, rng: &mut RunRng) -> usize {
        if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            rng.gen_range(0..self.table.n_choices())
        } else {
            self.table.greedy(context)
        }
    }

    #[inline]
    pub fn learn(&mut self, context: usize, choice: usize, reward: f64) {
        match self.rule {
            UpdateRule::Plain { step } => self.table.update(context, choice, reward, step),
            UpdateRule::Hysteretic { up, down } => {
                let q = self.table.get_mut(context, choice);
                *q = hysteretic_update(*q, reward, up, down);
            }
        }
    }
}

/// Iterative-learning schedule: exactly one agent learns per period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alternation {
    pub period: u64,
    /// Whether this agent learns in period 0.
    pub learns_first: bool,
}

impl Alternation {
    pub fn sender_first(period: u64) -> Self {
        Alternation {
            period,
            learns_first: true,
        }
    }

    pub fn receiver_second(period: u64) -> Self {
        Alternation {
            period,
            learns_first: false,
        }
    }

    pub fn period_index(&self, episode: u64) -> u64 {
        episode / self.period
    }

    pub fn is_learning(&self, episode: u64) -> bool {
        self.period_index(episode).is_multiple_of(2) == self.learns_first
    }

    /// Exploration rate: restarts each learning period, zero while frozen.
    pub fn epsilon(&self, schedule: &LinearEpsilonSchedule, episode: u64) -> f64 {
        if self.is_learning(episode) {
            schedule.at(episode % self.period)
        } else {
            0.0
        }
    }
}

fn epsilon_for(learner: &QLearner, alternation: Option<Alternation>, episode: u64) -> f64 {
    match alternation {
        Some(alt) => alt.epsilon(&learner.epsilon, episode),
        None => learner.epsilon.at(episode),
    }
}

fn learns(alternation: Option<Alternation>, episode: u64) -> bool {
    alternation.is_none_or(|alt| alt.is_learning(episode))
}

/// Q-learning sender over a `(state, message)` table.
#[derive(Debug, Clone)]
pub struct QSender {
    pub learner: QLearner,
    pub alternation: Option<Alternation>,
}

impl QSender {
    pub fn new(learner: QLearner, alternation: Option<Alternation>) -> Self {
        QSender { learner, alternation }
    }
}

impl Sender for QSender {
    fn act(&mut self, state: usize, episode: u64, rng: &mut RunRng) -> usize {
        let eps = epsilon_for(&self.learner, self.alternation, episode);
        self.learner.act(state, eps, rng)
    }

    fn learn(&mut self, o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        if learns(self.alternation, o.episode) {
            self.learner.learn(o.state, o.message, o.reward);
        }
        Ok(())
    }

    fn greedy_message(&self, state: usize) -> usize {
        self.learner.table.greedy(state)
    }

    fn snapshot(&self) -> Vec<f64> {
        self.learner.table.values().to_vec()
    }

    fn is_finite(&self) -> bool {
        self.learner.table.is_finite()
    }
}

/// Q-learning receiver over a `(message, action)` table.
#[derive(Debug, Clone)]
pub struct QReceiver {
    pub learner: QLearner,
    pub alternation: Option<Alternation>,
}

impl QReceiver {
    pub fn new(learner: QLearner, alternation: Option<Alternation>) -> Self {
        QReceiver { learner, alternation }
    }
}

impl Receiver for QReceiver {
    fn act(&mut self, message: usize, episode: u64, rng: &mut RunRng) -> usize {
        let eps = epsilon_for(&self.learner, self.alternation, episode);
        self.learner.act(message, eps, rng)
    }

    fn learn(&mut self, o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        if learns(self.alternation, o.episode) {
            self.learner.learn(o.message, o.action, o.reward);
        }
        Ok(())
    }

    fn greedy_action(&self, message: usize) -> usize {
        self.learner.table.greedy(message)
    }

    fn snapshot(&self) -> Vec<f64> {
        self.learner.table.values().to_vec()
    }

    fn is_finite(&self) -> bool {
        self.learner.table.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn receiver_update_and_ties() {
        let mut r = QReceiver::new(
            QLearner::new(
                3,
                3,
                2.0,
                UpdateRule::Plain { step: 0.1 },
                LinearEpsilonSchedule::GREEDY,
            ),
            None,
        );
        let mut rng = RunRng::seed_from_u64(0);
        assert_eq!(r.act(0, 0, &mut rng), 0);
        let o = Outcome {
            episode: 0,
            state: 0,
            message: 0,
            action: 0,
            reward: 1.0,
        };
        r.learn(&o, &mut rng).unwrap();
        assert!((r.learner.table.get(0, 0) - 1.9).abs() < 1e-15);
    }

    #[test]
    fn receiver_learns_fixed_point() {
        let mut r = QReceiver::new(
            QLearner::new(
                3,
                3,
                2.0,
                UpdateRule::Plain { step: 0.1 },
                LinearEpsilonSchedule::GREEDY,
            ),
            None,
        );
        let mut rng = RunRng::seed_from_u64(0);
        for e in 0..500 {
            let a = r.act(0, e, &mut rng);
            let reward = if a == 1 { 1.0 } else { 0.0 };
            let o = Outcome {
                episode: e,
                state: 0,
                message: 0,
                action: a,
                reward,
            };
            r.learn(&o, &mut rng).unwrap();
        }
        assert_eq!(r.greedy_action(0), 1);
    }

    #[test]
    fn alternation_roles() {
        let s = Alternation::sender_first(10);
        let r = Alternation::receiver_second(10);
        assert!(s.is_learning(0) && !r.is_learning(0));
        assert!(r.is_learning(15) && !s.is_learning(15));
        assert_eq!(s.period_index(25), 2);
        assert!(s.is_learning(25));
        let sched = LinearEpsilonSchedule::new(1.0, 0.125);
        assert_eq!(s.epsilon(&sched, 0), 1.0);
        assert_eq!(s.epsilon(&sched, 1), 0.875);
        assert_eq!(s.epsilon(&sched, 8), 0.0);
        assert_eq!(s.epsilon(&sched, 10), 0.0);
        assert_eq!(r.epsilon(&sched, 10), 1.0);
    }

    #[test]
    fn frozen_agent_is_untouched() {
        let mut s = QSender::new(
            QLearner::new(
                3,
                3,
                0.0,
                UpdateRule::Plain { step: 0.5 },
                LinearEpsilonSchedule::new(1.0, 0.125),
            ),
            Some(Alternation::sender_first(10)),
        );
        let mut rng = RunRng::seed_from_u64(3);
        for e in 0..10 {
            let m = s.act((e % 3) as usize, e, &mut rng);
            s.learn(
                &Outcome {
                    episode: e,
                    state: (e % 3) as usize,
                    message: m,
                    action: 0,
                    reward: 0.7,
                },
                &mut rng,
            )
            .unwrap();
        }
        let before = s.snapshot();
        for e in 10..20 {
            let m = s.act((e % 3) as usize, e, &mut rng);
            assert_eq!(m, s.greedy_message((e % 3) as usize));
            s.learn(
                &Outcome {
                    episode: e,
                    state: (e % 3) as usize,
                    message: m,
                    action: 0,
                    reward: 0.1,
                },
                &mut rng,
            )
            .unwrap();
        }
        assert_eq!(before, s.snapshot());
    }
}
