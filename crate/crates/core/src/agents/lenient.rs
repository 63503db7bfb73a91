use rand::Rng;

use super::tables::{LenienceParams, LenienceState, QTable};
use super::{Outcome, Receiver, RunRng, Sender};
use crate::error::Result;

/// Lenient Q-learner with Boltzmann selection. Serves as either role.
///
/// Negative TD errors are applied with probability
/// `1 - exp(-1 / (theta * T(x, u)))`, so they are mostly ignored while the
/// entry's temperature is high and always applied once it has cooled.
#[derive(Debug, Clone)]
pub struct LenientLearner {
    q: QTable,
    lenience: LenienceState,
    step: f64,
    weights: Vec<f64>,
}

impl LenientLearner {
    pub fn new(n_contexts: usize, n_choices: usize, step: f64, params: LenienceParams) -> Self {
        LenientLearner {
            q: QTable::new(n_contexts, n_choices, 0.0),
            lenience: LenienceState::new(n_contexts, n_choices, params),
            step,
            weights: vec![0.0; n_choices],
        }
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn lenience(&self) -> &LenienceState {
        &self.lenience
    }

    fn boltzmann(&mut self, context: usize, rng: &mut RunRng) -> usize {
        let tau = self.lenience.selection_temperature(context);
        let row = self.q.row(context);
        if tau.is_nan() || tau <= 0.0 {
            return self.q.greedy(context);
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (w, q) in self.weights.iter_mut().zip(row) {
            *w = ((q - max) / tau).exp();
            total += *w;
        }
        if !total.is_finite() {
            return self.q.greedy(context);
        }
        let mut x = rng.gen::<f64>() * total;
        for (i, w) in self.weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        self.q.greedy(context)
    }

    fn update(&mut self, context: usize, choice: usize, reward: f64, rng: &mut RunRng) {
        let q = self.q.get(context, choice);
        let delta = reward - q;
        let apply = delta >= 0.0 || rng.gen::<f64>() < self.lenience.negative_update_probability(context, choice);
        if apply {
            *self.q.get_mut(context, choice) = q + self.step * delta;
        }
        self.lenience.cool(context, choice);
    }

    fn snapshot_values(&self) -> Vec<f64> {
        let mut out = self.q.values().to_vec();
        out.extend_from_slice(self.lenience.temperatures());
        out
    }
}

impl Sender for LenientLearner {
    fn act(&mut self, state: usize, _episode: u64, rng: &mut RunRng) -> usize {
        self.boltzmann(state, rng)
    }

    fn learn(&mut self, o: &Outcome, rng: &mut RunRng) -> Result<()> {
        self.update(o.state, o.message, o.reward, rng);
        Ok(())
    }

    fn greedy_message(&self, state: usize) -> usize {
        self.q.greedy(state)
    }

    fn snapshot(&self) -> Vec<f64> {
        self.snapshot_values()
    }

    fn is_finite(&self) -> bool {
        self.q.is_finite()
    }
}

impl Receiver for LenientLearner {
    fn act(&mut self, message: usize, _episode: u64, rng: &mut RunRng) -> usize {
        self.boltzmann(message, rng)
    }

    fn learn(&mut self, o: &Outcome, rng: &mut RunRng) -> Result<()> {
        self.update(o.message, o.action, o.reward, rng);
        Ok(())
    }

    fn greedy_action(&self, message: usize) -> usize {
        self.q.greedy(message)
    }

    fn snapshot(&self) -> Vec<f64> {
        self.snapshot_values()
    }

    fn is_finite(&self) -> bool {
        self.q.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn params() -> LenienceParams {
        LenienceParams {
            max_temp: 5.0,
            min_temp: 1.6e-3,
            temp_decay: 0.99,
            omega: 0.1,
            theta: 1.0,
        }
    }

    #[test]
    fn positive_updates_always_apply() {
        let mut l = LenientLearner::new(1, 2, 0.1, params());
        let mut rng = RunRng::seed_from_u64(0);
        for i in 0..50 {
            let before = l.q.get(0, 0);
            l.update(0, 0, 1.0, &mut rng);
            assert!(l.q.get(0, 0) > before, "step {i}");
        }
    }

    #[test]
    fn negative_updates_are_rare_early_and_certain_late() {
        let mut applied = 0;
        let mut rng = RunRng::seed_from_u64(2);
        for _ in 0..10_000 {
            let mut l = LenientLearner::new(1, 1, 0.1, params());
            *l.q.get_mut(0, 0) = 1.0;
            l.update(0, 0, 0.0, &mut rng);
            if l.q.get(0, 0) < 1.0 {
                applied += 1;
            }
        }
        let f = applied as f64 / 10_000.0;
        assert!((f - 0.181).abs() < 0.015, "{f}");

        let mut l = LenientLearner::new(1, 1, 0.1, params());
        for _ in 0..1500 {
            l.lenience.cool(0, 0);
        }
        *l.q.get_mut(0, 0) = 1.0;
        l.update(0, 0, 0.0, &mut rng);
        assert!(l.q.get(0, 0) < 1.0);
    }

    #[test]
    fn zero_min_temperature_stays_finite() {
        let mut p = params();
        p.min_temp = 0.0;
        p.theta = 10.0;
        let mut l = LenientLearner::new(2, 2, 0.1, p);
        let mut rng = RunRng::seed_from_u64(5);
        for e in 0..20_000u64 {
            let m = Sender::act(&mut l, (e % 2) as usize, e, &mut rng);
            let o = Outcome {
                episode: e,
                state: (e % 2) as usize,
                message: m,
                action: 0,
                reward: if m == 0 { 0.4 } else { 0.9 },
            };
            Sender::learn(&mut l, &o, &mut rng).unwrap();
        }
        assert!(Sender::is_finite(&l));
        assert_eq!(l.greedy_message(0), 1);
    }
}
