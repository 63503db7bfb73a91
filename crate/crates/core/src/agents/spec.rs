use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tables::{LenienceParams, LinearEpsilonSchedule};
use crate::error::{Error, Result};
use crate::inference::{AccumulationMode, FlatRowRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    InfoQ,
    InfoPolicy,
    ApproxInfo,
    Iql,
    Iq,
    ModelS,
    ModelR,
    HystereticQ,
    Lenience,
    CommBias,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::InfoQ,
        Algorithm::InfoPolicy,
        Algorithm::ApproxInfo,
        Algorithm::Iql,
        Algorithm::Iq,
        Algorithm::ModelS,
        Algorithm::ModelR,
        Algorithm::HystereticQ,
        Algorithm::Lenience,
        Algorithm::CommBias,
    ];

    /// The comparison set used against Info-Q in the matrix-game figures.
    pub const BASELINES: [Algorithm; 8] = [
        Algorithm::InfoPolicy,
        Algorithm::Iql,
        Algorithm::Iq,
        Algorithm::ModelS,
        Algorithm::ModelR,
        Algorithm::HystereticQ,
        Algorithm::Lenience,
        Algorithm::CommBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::InfoQ => "info-q",
            Algorithm::InfoPolicy => "info-policy",
            Algorithm::ApproxInfo => "approx-info",
            Algorithm::Iql => "iql",
            Algorithm::Iq => "iq",
            Algorithm::ModelS => "model-s",
            Algorithm::ModelR => "model-r",
            Algorithm::HystereticQ => "hysteretic-q",
            Algorithm::Lenience => "lenience",
            Algorithm::CommBias => "comm-bias",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let alias = match key.as_str() {
            "infoq" => "info-q",
            "infopolicy" => "info-policy",
            "approx" | "approxinfo" => "approx-info",
            "models" => "model-s",
            "modelr" => "model-r",
            "hysteretic" | "hystereticq" => "hysteretic-q",
            "lenient" => "lenience",
            "commbias" => "comm-bias",
            other => other,
        };
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == alias)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Named hyperparameter preset bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Bank {
    #[default]
    #[serde(rename = "3x3")]
    Small,
    #[serde(rename = "32x32")]
    Large,
}

impl Bank {
    /// Bank matching a game size: 32 and above use the large-game presets.
    pub fn for_size(n: usize) -> Bank {
        if n >= 32 {
            Bank::Large
        } else {
            Bank::Small
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Bank::Small => "3x3",
            Bank::Large => "32x32",
        }
    }
}

impl FromStr for Bank {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3x3" | "small" => Ok(Bank::Small),
            "32x32" | "large" => Ok(Bank::Large),
            other => Err(Error::Config(format!("unknown preset bank {other:?}"))),
        }
    }
}

/// Which agent, if any, is pinned to an optimal fixed policy (debug mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedRole {
    #[default]
    None,
    Sender,
    Receiver,
}

/// Every tunable knob across the algorithm family; each algorithm reads the
/// subset it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    /// Q step size for baseline learners and for Q-based receivers.
    pub alpha: f64,
    /// Step size of the inference sender's Q-table.
    pub sender_alpha: f64,
    pub sender_init: f64,
    pub receiver_init: f64,
    pub epsilon: LinearEpsilonSchedule,
    /// Episodes per alternation period (iterative learning).
    pub period: u64,
    /// Negative-TD step size of hysteretic learners.
    pub negative_alpha: f64,
    pub lenience: LenienceParams,
    pub policy_step: f64,
    pub value_step: f64,
    pub signaling_weight: f64,
    pub entropy_weight: f64,
    pub entropy_target: f64,
    /// Use visit counts instead of the uniform state distribution for `p(m)`.
    pub empirical_signaling_prior: bool,
    pub mu: f64,
    pub rollout_len: usize,
    pub gamma: f64,
    pub accumulation: AccumulationMode,
    pub flat_rows: FlatRowRule,
    /// Receiver model of the sender trains on the true state.
    pub hindsight: bool,
    pub fixed: FixedRole,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 0.1,
            sender_alpha: 0.1,
            sender_init: 0.0,
            receiver_init: 0.0,
            epsilon: LinearEpsilonSchedule::GREEDY,
            period: 10,
            negative_alpha: 0.05,
            lenience: LenienceParams {
                max_temp: 5.0,
                min_temp: 1.6e-3,
                temp_decay: 0.99,
                omega: 0.1,
                theta: 1.0,
            },
            policy_step: 0.5,
            value_step: 0.5,
            signaling_weight: 0.01,
            entropy_weight: 0.1,
            entropy_target: 0.5,
            empirical_signaling_prior: false,
            mu: 0.5,
            rollout_len: 10,
            gamma: 0.99,
            accumulation: AccumulationMode::PseudocodeLiteral,
            flat_rows: FlatRowRule::Unassigned,
            hindsight: false,
            fixed: FixedRole::None,
        }
    }
}

/// Names accepted by [`Hyperparams::set`].
pub const PARAMETER_NAMES: &[&str] = &[
    "alpha",
    "sender_alpha",
    "sender_init",
    "receiver_init",
    "epsilon",
    "epsilon_decay",
    "period",
    "negative_alpha",
    "beta_ratio",
    "max_temp",
    "min_temp",
    "temp_decay",
    "omega",
    "theta",
    "policy_step",
    "value_step",
    "receiver_step",
    "signaling_weight",
    "entropy_weight",
    "entropy_target",
    "mu",
    "rollout_len",
    "gamma",
];

impl Hyperparams {
    /// Sets one numeric parameter by name.
    ///
    /// `beta_ratio` sets the hysteretic negative step to `ratio * alpha`, so it
    /// should be applied after `alpha`. `receiver_step` sets both the policy and
    /// the baseline step of a policy-gradient receiver.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Config(format!("{name} must be finite")));
        }
        let as_count = |v: f64| -> Result<u64> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(Error::Config(format!("{name} must be a positive integer, got {v}")))
            }
        };
        match name {
            "alpha" => self.alpha = value,
            "sender_alpha" => self.sender_alpha = value,
            "sender_init" => self.sender_init = value,
            "receiver_init" => self.receiver_init = value,
            "epsilon" => self.epsilon.initial = value,
            "epsilon_decay" => self.epsilon.decay = value,
            "period" => self.period = as_count(value)?,
            "negative_alpha" => self.negative_alpha = value,
            "beta_ratio" => self.negative_alpha = value * self.alpha,
            "max_temp" => self.lenience.max_temp = value,
            "min_temp" => self.lenience.min_temp = value,
            "temp_decay" => self.lenience.temp_decay = value,
            "omega" => self.lenience.omega = value,
            "theta" => self.lenience.theta = value,
            "policy_step" => self.policy_step = value,
            "value_step" => self.value_step = value,
            "receiver_step" => {
                self.policy_step = value;
                self.value_step = value;
            }
            "signaling_weight" => self.signaling_weight = value,
            "entropy_weight" => self.entropy_weight = value,
            "entropy_target" => self.entropy_target = value,
            "mu" => self.mu = value,
            "rollout_len" => self.rollout_len = as_count(value)? as usize,
            "gamma" => self.gamma = value,
            other => return Err(Error::Config(format!("unknown parameter {other:?}"))),
        }
        Ok(())
    }
}

/// An algorithm together with its resolved hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub algorithm: Algorithm,
    pub params: Hyperparams,
}

impl AgentSpec {
    /// Tuned defaults for `algorithm` in the given bank.
    pub fn preset(algorithm: Algorithm, bank: Bank) -> Self {
        let large = bank == Bank::Large;
        let mut p = Hyperparams::default();
        match algorithm {
            Algorithm::InfoQ => {
                p.sender_alpha = 0.1;
                p.sender_init = -2.0;
                p.alpha = 0.1;
                p.receiver_init = 2.0;
            }
            Algorithm::InfoPolicy => {
                p.sender_alpha = 0.05;
                p.sender_init = -2.0;
                p.policy_step = 0.5;
                p.value_step = 0.5;
            }
            Algorithm::ApproxInfo => {
                p.policy_step = 2.0;
                p.value_step = 0.5;
                p.mu = 0.9;
                p.rollout_len = 10;
                p.alpha = 0.1;
                p.receiver_init = 2.0;
            }
            Algorithm::Iql => {
                if large {
                    p.epsilon = LinearEpsilonSchedule::new(0.1, 5e-6);
                    p.alpha = 0.5;
                } else {
                    p.epsilon = LinearEpsilonSchedule::new(0.3, 3.75e-4);
                    p.alpha = 0.1;
                }
            }
            Algorithm::Iq => {
                p.alpha = 0.5;
                if large {
                    p.period = 100;
                    p.epsilon = LinearEpsilonSchedule::new(1.0, 0.0125);
                } else {
                    p.period = 10;
                    p.epsilon = LinearEpsilonSchedule::new(1.0, 0.125);
                }
            }
            Algorithm::ModelS => {
                if large {
                    p.epsilon = LinearEpsilonSchedule::new(1.0, 5e-5);
                    p.alpha = 0.1;
                } else {
                    p.epsilon = LinearEpsilonSchedule::new(1.0, 1.25e-3);
                    p.alpha = 0.05;
                }
            }
            Algorithm::ModelR => {
                p.alpha = 0.5;
                p.epsilon = if large {
                    LinearEpsilonSchedule::new(1.0, 5e-5)
                } else {
                    LinearEpsilonSchedule::new(0.1, 1.25e-4)
                };
            }
            Algorithm::HystereticQ => {
                p.alpha = 0.5;
                p.negative_alpha = 0.05;
                p.epsilon = if large {
                    LinearEpsilonSchedule::new(1.0, 5e-5)
                } else {
                    LinearEpsilonSchedule::new(0.1, 1.25e-4)
                };
            }
            Algorithm::Lenience => {
                p.alpha = 0.1;
                p.lenience = LenienceParams {
                    max_temp: 5.0,
                    min_temp: if large { 0.0 } else { 1.6e-3 },
                    temp_decay: 0.99,
                    omega: 0.1,
                    theta: if large { 10.0 } else { 1.0 },
                };
            }
            Algorithm::CommBias => {
                p.policy_step = 0.5;
                p.value_step = 0.5;
                p.signaling_weight = 0.01;
                p.entropy_weight = if large { 0.3 } else { 0.1 };
                p.entropy_target = if large { 0.0 } else { 0.5 };
            }
        }
        AgentSpec { algorithm, params: p }
    }

    /// Preset with named overrides applied in key order (with `alpha` first).
    pub fn with_overrides(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        if let Some(alpha) = overrides.get("alpha") {
            self.params.set("alpha", *alpha)?;
        }
        for (name, value) in overrides.iter().filter(|(k, _)| k.as_str() != "alpha") {
            self.params.set(name, *value)?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{}: {what}", self.algorithm)))
            }
        };
        check(p.period >= 1, "period must be at least 1")?;
        check(p.rollout_len >= 1, "rollout length must be at least 1")?;
        check((0.0..1.0).contains(&p.mu), "mu must lie in [0, 1)")?;
        check(
            p.epsilon.initial >= 0.0 && p.epsilon.decay >= 0.0,
            "epsilon schedule must be non-negative",
        )?;
        check(
            p.negative_alpha > 0.0 || self.algorithm != Algorithm::HystereticQ,
            "negative step must be positive",
        )?;
        let l = &p.lenience;
        check(
            l.min_temp >= 0.0 && l.max_temp >= l.min_temp && l.max_temp > 0.0,
            "lenience temperatures must satisfy 0 <= min <= max",
        )?;
        check(l.theta > 0.0, "lenience theta must be positive")?;
        check(
            l.temp_decay > 0.0 && l.temp_decay <= 1.0,
            "temperature decay must lie in (0, 1]",
        )?;
        Ok(())
    }
}
