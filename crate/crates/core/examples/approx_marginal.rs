//! The softmax sender that divides by a moving-average message marginal.
//!
//! Shows the estimator in isolation, then trains the full sender on random
//! 3x3 games and reports how often every state ends with its own message.
//!
//! `cargo run --release --example approx_marginal`

use infomsg::agents::{AgentSpec, Algorithm, Bank};
use infomsg::harness::{run_experiment, Experiment, GameSet};
use infomsg::inference::{importance_weight, scaled_score_row, AccumulationMode, MarginalEstimate};

fn main() -> infomsg::Result<()> {
    let mut marginal = MarginalEstimate::new(3, 0.5, AccumulationMode::PseudocodeLiteral)?;
    let row = [1.0, 0.0, 0.0];
    marginal.accumulate_rollout(0, &row, 1);
    marginal.update_marginal();
    println!("p_hat after one rollout: {:?}", marginal.estimate());

    let row = [0.4, 0.4, 0.2];
    println!("scores for {row:?}: {:?}", scaled_score_row(&row, &marginal));
    println!("importance weight of m1: {}", importance_weight(&row, 0));

    let spec = AgentSpec::preset(Algorithm::ApproxInfo, Bank::Small);
    let mut sweep = spec.clone();
    sweep.params.accumulation = AccumulationMode::FullSweep;
    let result = run_experiment(&Experiment {
        games: GameSet::Random {
            size: 3,
            n_matrices: 20,
            seed: 5,
        },
        algorithms: vec![spec, sweep],
        runs: 100,
        episodes: 1000,
        eval_every: 10,
        seed: 5,
        threads: 0,
    })?;
    for (spec, s) in &result.summaries {
        println!(
            "{:?}: optimal {:.1}%, distinct messages {:.1}%",
            spec.params.accumulation,
            100.0 * s.pct_optimal(),
            100.0 * s.partition_share("{s1}{s2}{s3}")
        );
    }
    Ok(())
}
