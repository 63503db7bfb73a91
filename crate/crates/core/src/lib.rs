//! Inference-based messaging for one-shot signaling games.
//!
//! A sender observes a private state and emits a message; a receiver maps the
//! message to an action; both share the payoff. The crate provides:
//!
//! * [`game`]: payoff matrices, the climbing game and random games.
//! * [`inference`]: the scaled posterior `argmax_m p(s|m)` used to pick messages,
//!   plus the moving-average marginal for the softmax variant.
//! * [`agents`]: the inference senders and eight decentralized baselines behind
//!   one [`agents::Sender`] / [`agents::Receiver`] contract.
//! * [`harness`]: seeded runs, greedy evaluation, aggregation and CSV output.
//! * [`tuner`]: grid search scored by the fraction of optimal runs.
//! * [`report`]: static SVG rendering of harness CSVs.
//!
//! ```
//! use std::sync::Arc;
//! use infomsg::agents::{AgentSpec, Algorithm, Bank};
//! use infomsg::game::climbing_game;
//! use infomsg::harness::{run_training, RunConfig};
//!
//! let run = run_training(&RunConfig {
//!     game: Arc::new(climbing_game()),
//!     spec: AgentSpec::preset(Algorithm::InfoQ, Bank::Small),
//!     episodes: 1000,
//!     eval_every: 10,
//!     seed: 7,
//! })
//! .unwrap();
//! assert!(run.failure.is_none());
//! ```

pub mod agents;
pub mod cli;
pub mod config;
pub mod error;
pub mod game;
pub mod harness;
pub mod inference;
pub mod report;
pub mod select;
pub mod stats;
pub mod tuner;

pub use error::{Error, Result};
