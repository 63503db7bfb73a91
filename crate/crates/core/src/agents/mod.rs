//! Learning agents behind one sender/receiver contract.
//!
//! Every algorithm is a pair: a [`Sender`] that maps private states to
//! messages and a [`Receiver`] that maps messages to actions. Both are trained
//! from the shared [`Outcome`] of each one-shot episode and never see each
//! other's tables.

mod fixed;
mod info;
mod lenient;
mod model;
mod policy;
mod qlearn;
mod spec;
mod tables;

use rand_chacha::ChaCha8Rng;

pub use fixed::{FixedReceiver, FixedSender};
pub use info::{ApproxInfoSender, InfoSender};
pub use lenient::LenientLearner;
pub use model::{ModelReceiverSender, ModelSenderReceiver};
pub use policy::{signaling_gradient, signaling_objective, CommBiasSender, PolicyLearner};
pub use qlearn::{Alternation, QLearner, QReceiver, QSender, UpdateRule};
pub use spec::{AgentSpec, Algorithm, Bank, FixedRole, Hyperparams, PARAMETER_NAMES};
pub use tables::{
    entropy, grad_log_softmax_into, grad_softmax_into, hysteretic_update, softmax, softmax_into, LenienceParams,
    LenienceState, LinearEpsilonSchedule, QTable, SoftmaxTable,
};

use crate::error::Result;
use crate::game::SignalingGame;

/// Random stream owned by one agent within one run.
pub type RunRng = ChaCha8Rng;

/// Everything revealed at the end of an episode.
///
/// `state` is the sender's private state; receivers only read it when they
/// are explicitly configured for hindsight training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub episode: u64,
    pub state: usize,
    pub message: usize,
    pub action: usize,
    pub reward: f64,
}

pub trait Sender: Send {
    /// Training-time message for `state` (may explore, may update counters).
    fn act(&mut self, state: usize, episode: u64, rng: &mut RunRng) -> usize;

    fn learn(&mut self, outcome: &Outcome, rng: &mut RunRng) -> Result<()>;

    /// Deterministic evaluation message; never mutates the agent.
    fn greedy_message(&self, state: usize) -> usize;

    /// All learned numbers, for equality checks.
    fn snapshot(&self) -> Vec<f64>;

    fn is_finite(&self) -> bool {
        self.snapshot().iter().all(|v| v.is_finite())
    }
}

pub trait Receiver: Send {
    fn act(&mut self, message: usize, episode: u64, rng: &mut RunRng) -> usize;

    fn learn(&mut self, outcome: &Outcome, rng: &mut RunRng) -> Result<()>;

    fn greedy_action(&self, message: usize) -> usize;

    fn snapshot(&self) -> Vec<f64>;

    fn is_finite(&self) -> bool {
        self.snapshot().iter().all(|v| v.is_finite())
    }
}

pub type AgentPair = (Box<dyn Sender>, Box<dyn Receiver>);

impl AgentSpec {
    /// Fresh sender/receiver pair for `game`.
    pub fn build(&self, game: &SignalingGame) -> Result<AgentPair> {
        self.validate()?;
        let p = &self.params;
        let (n_s, n_m, n_a) = (game.n_states(), game.n_messages, game.n_actions());
        let q_receiver = |init: f64, rule: UpdateRule, eps: LinearEpsilonSchedule| -> Box<dyn Receiver> {
            Box::new(QReceiver::new(QLearner::new(n_m, n_a, init, rule, eps), None))
        };
        let (sender, receiver): AgentPair = match self.algorithm {
            Algorithm::InfoQ => (
                Box::new(InfoSender::new(n_s, n_m, p.sender_init, p.sender_alpha, p.flat_rows)),
                q_receiver(
                    p.receiver_init,
                    UpdateRule::Plain { step: p.alpha },
                    LinearEpsilonSchedule::GREEDY,
                ),
            ),
            Algorithm::InfoPolicy => (
                Box::new(InfoSender::new(n_s, n_m, p.sender_init, p.sender_alpha, p.flat_rows)),
                Box::new(PolicyLearner::new(n_m, n_a, p.policy_step, p.value_step)),
            ),
            Algorithm::ApproxInfo => (
                Box::new(ApproxInfoSender::new(n_s, n_m, p)?),
                q_receiver(
                    p.receiver_init,
                    UpdateRule::Plain { step: p.alpha },
                    LinearEpsilonSchedule::GREEDY,
                ),
            ),
            Algorithm::Iql | Algorithm::HystereticQ => {
                let rule = if self.algorithm == Algorithm::Iql {
                    UpdateRule::Plain { step: p.alpha }
                } else {
                    UpdateRule::Hysteretic {
                        up: p.alpha,
                        down: p.negative_alpha,
                    }
                };
                (
                    Box::new(QSender::new(
                        QLearner::new(n_s, n_m, p.sender_init, rule, p.epsilon),
                        None,
                    )),
                    q_receiver(p.receiver_init, rule, p.epsilon),
                )
            }
            Algorithm::Iq => {
                let rule = UpdateRule::Plain { step: p.alpha };
                (
                    Box::new(QSender::new(
                        QLearner::new(n_s, n_m, p.sender_init, rule, p.epsilon),
                        Some(Alternation::sender_first(p.period)),
                    )),
                    Box::new(QReceiver::new(
                        QLearner::new(n_m, n_a, p.receiver_init, rule, p.epsilon),
                        Some(Alternation::receiver_second(p.period)),
                    )),
                )
            }
            Algorithm::ModelS => (
                Box::new(QSender::new(
                    QLearner::new(n_s, n_m, p.sender_init, UpdateRule::Plain { step: p.alpha }, p.epsilon),
                    None,
                )),
                Box::new(ModelSenderReceiver::new(n_s, n_m, n_a, p)),
            ),
            Algorithm::ModelR => (
                Box::new(ModelReceiverSender::new(n_s, n_m, n_a, p)),
                q_receiver(p.receiver_init, UpdateRule::Plain { step: p.alpha }, p.epsilon),
            ),
            Algorithm::Lenience => (
                Box::new(LenientLearner::new(n_s, n_m, p.alpha, p.lenience)),
                Box::new(LenientLearner::new(n_m, n_a, p.alpha, p.lenience)),
            ),
            Algorithm::CommBias => (
                Box::new(CommBiasSender::new(n_s, n_m, p)),
                Box::new(PolicyLearner::new(n_m, n_a, p.policy_step, p.value_step)),
            ),
        };
        Ok(match p.fixed {
            spec::FixedRole::None => (sender, receiver),
            spec::FixedRole::Sender => (Box::new(FixedSender::new(n_s, n_m)), receiver),
            spec::FixedRole::Receiver => (sender, Box::new(FixedReceiver::new(game))),
        })
    }
}
