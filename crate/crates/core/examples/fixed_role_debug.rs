//! Single-agent reductions: pin one side to an optimal fixed policy and train
//! only the other.
//!
//! `cargo run --release --example fixed_role_debug`

use infomsg::agents::{AgentSpec, Algorithm, Bank, FixedRole};
use infomsg::harness::{run_experiment, Experiment, GameSet};

fn main() -> infomsg::Result<()> {
    let mut algorithms = Vec::new();
    for alg in [Algorithm::Iql, Algorithm::Lenience] {
        for fixed in [FixedRole::None, FixedRole::Sender, FixedRole::Receiver] {
            let mut spec = AgentSpec::preset(alg, Bank::Small);
            spec.params.fixed = fixed;
            algorithms.push(spec);
        }
    }
    let result = run_experiment(&Experiment {
        games: GameSet::Climbing,
        algorithms,
        runs: 300,
        episodes: 1000,
        eval_every: 50,
        seed: 4,
        threads: 0,
    })?;
    for (spec, s) in &result.summaries {
        println!(
            "{:<9} fixed={:<8} optimal {:>5.1}%",
            spec.algorithm.name(),
            format!("{:?}", spec.params.fixed).to_lowercase(),
            100.0 * s.pct_optimal()
        );
    }
    Ok(())
}
