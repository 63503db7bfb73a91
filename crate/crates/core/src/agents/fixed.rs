//! Fixed optimal partners for the single-agent reductions.

use super::{Outcome, Receiver, RunRng, Sender};
use crate::error::Result;
use crate::game::SignalingGame;
use crate::select;

/// Sends message `state mod n_messages`; never learns.
#[derive(Debug, Clone)]
pub struct FixedSender {
    n_messages: usize,
}

impl FixedSender {
    pub fn new(_n_states: usize, n_messages: usize) -> Self {
        FixedSender { n_messages }
    }
}

impl Sender for FixedSender {
    fn act(&mut self, state: usize, _episode: u64, _rng: &mut RunRng) -> usize {
        state % self.n_messages
    }

    fn learn(&mut self, _o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        Ok(())
    }

    fn greedy_message(&self, state: usize) -> usize {
        state % self.n_messages
    }

    fn snapshot(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Reads message `m` as state `m` and plays that state's best action.
#[derive(Debug, Clone)]
pub struct FixedReceiver {
    best: Vec<usize>,
}

impl FixedReceiver {
    pub fn new(game: &SignalingGame) -> Self {
        let best = (0..game.n_messages)
            .map(|m| select::argmax_first(game.payoff.row(m % game.n_states())))
            .collect();
        FixedReceiver { best }
    }
}

impl Receiver for FixedReceiver {
    fn act(&mut self, message: usize, _episode: u64, _rng: &mut RunRng) -> usize {
        self.best[message]
    }

    fn learn(&mut self, _o: &Outcome, _rng: &mut RunRng) -> Result<()> {
        Ok(())
    }

    fn greedy_action(&self, message: usize) -> usize {
        self.best[message]
    }

    fn snapshot(&self) -> Vec<f64> {
        Vec::new()
    }
}
