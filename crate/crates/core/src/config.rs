//! Declarative TOML experiment files.
//!
//! ```toml
//! name = "climbing"
//! episodes = 1000
//! runs = 1000
//! seed = 7
//!
//! [game]
//! kind = "climbing"        # or "random" with size, n_matrices, matrix_seed
//!
//! [[algorithms]]
//! name = "info-q"
//!
//! [[algorithms]]
//! name = "hysteretic-q"
//! bank = "3x3"
//! overrides = { alpha = 0.5, beta_ratio = 0.1 }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentSpec, Algorithm, Bank, FixedRole};
use crate::error::{Error, Result};
use crate::harness::{Experiment, GameSet};
use crate::inference::{AccumulationMode, FlatRowRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    Climbing,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameBlock {
    pub kind: GameKind,
    pub size: Option<usize>,
    pub n_matrices: Option<usize>,
    /// Seed for the random matrices; the master seed when absent.
    pub matrix_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmEntry {
    pub name: Algorithm,
    /// Preset bank; chosen from the game size when absent.
    pub bank: Option<Bank>,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    pub fixed: Option<FixedRole>,
    pub hindsight: Option<bool>,
    pub flat_rows: Option<FlatRowRule>,
    pub accumulation: Option<AccumulationMode>,
    pub empirical_signaling_prior: Option<bool>,
}

impl AlgorithmEntry {
    pub fn preset(name: Algorithm) -> Self {
        AlgorithmEntry {
            name,
            bank: None,
            overrides: BTreeMap::new(),
            fixed: None,
            hindsight: None,
            flat_rows: None,
            accumulation: None,
            empirical_signaling_prior: None,
        }
    }

    pub fn resolve(&self, size: usize) -> Result<AgentSpec> {
        let mut spec =
            AgentSpec::preset(self.name, self.bank.unwrap_or(Bank::for_size(size))).with_overrides(&self.overrides)?;
        let p = &mut spec.params;
        if let Some(v) = self.fixed {
            p.fixed = v;
        }
        if let Some(v) = self.hindsight {
            p.hindsight = v;
        }
        if let Some(v) = self.flat_rows {
            p.flat_rows = v;
        }
        if let Some(v) = self.accumulation {
            p.accumulation = v;
        }
        if let Some(v) = self.empirical_signaling_prior {
            p.empirical_signaling_prior = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub name: String,
    pub game: GameBlock,
    pub algorithms: Vec<AlgorithmEntry>,
    pub episodes: u64,
    pub runs: u64,
    pub seed: u64,
    pub eval_every: Option<u64>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Grid spacing used when none is given: 10 for small games, 250 for 32 and up.
pub fn default_eval_every(size: usize) -> u64 {
    if size >= 32 {
        250
    } else {
        10
    }
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ExperimentFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.to_experiment()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn size(&self) -> usize {
        match self.game.kind {
            GameKind::Climbing => 3,
            GameKind::Random => self.game.size.unwrap_or(3),
        }
    }

    pub fn game_set(&self) -> Result<GameSet> {
        let g = &self.game;
        match g.kind {
            GameKind::Climbing => {
                if g.size.is_some() || g.n_matrices.is_some() || g.matrix_seed.is_some() {
                    return Err(Error::Config(
                        "the climbing game takes no size, n_matrices or matrix_seed".into(),
                    ));
                }
                Ok(GameSet::Climbing)
            }
            GameKind::Random => {
                let size = g.size.ok_or_else(|| Error::Config("random games need a size".into()))?;
                let n_matrices = g
                    .n_matrices
                    .ok_or_else(|| Error::Config("random games need n_matrices".into()))?;
                if size == 0 || n_matrices == 0 {
                    return Err(Error::Config("size and n_matrices must be positive".into()));
                }
                Ok(GameSet::Random {
                    size,
                    n_matrices,
                    seed: g.matrix_seed.unwrap_or(self.seed),
                })
            }
        }
    }

    pub fn to_experiment(&self) -> Result<Experiment> {
        let size = self.size();
        let exp = Experiment {
            games: self.game_set()?,
            algorithms: self.algorithms.iter().map(|a| a.resolve(size)).collect::<Result<_>>()?,
            runs: self.runs,
            episodes: self.episodes,
            eval_every: self.eval_every.unwrap_or(default_eval_every(size)),
            seed: self.seed,
            threads: self.threads.unwrap_or(0),
        };
        exp.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(exp)
    }
}
