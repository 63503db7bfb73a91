//! Train one Info-Q pair on the climbing game and inspect what it learned.
//!
//! `cargo run --release --example climbing_info_q -- [seed]`

use std::sync::Arc;

use infomsg::agents::{AgentSpec, Algorithm, Bank};
use infomsg::game::climbing_game;
use infomsg::harness::{evaluate_greedy_policy, run_training, train_agents, RunConfig};

fn main() -> infomsg::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .map_or(7, |s| s.parse().expect("seed must be an integer"));
    let config = RunConfig {
        game: Arc::new(climbing_game()),
        spec: AgentSpec::preset(Algorithm::InfoQ, Bank::Small),
        episodes: 1000,
        eval_every: 50,
        seed,
    };

    let run = run_training(&config)?;
    println!("episode  reward(norm)  optimal");
    for c in &run.checkpoints {
        println!("{:>7}  {:>12.3}  {}", c.episode, c.mean_norm_reward, c.optimal);
    }
    println!("converged at: {:?}", run.episodes_to_optimal);
    println!("partition:    {}", run.partition);

    // Same seed, same agents: the trained pair can be inspected directly.
    let (sender, receiver) = train_agents(&config)?;
    let policy = evaluate_greedy_policy(sender.as_ref(), receiver.as_ref(), &config.game);
    assert_eq!(policy, run.policy);
    for s in 0..config.game.n_states() {
        let m = policy.messages[s];
        let a = policy.actions[s];
        println!(
            "s{} -> m{} -> a{}  payoff {:.3} (best {:.3})",
            s + 1,
            m + 1,
            a + 1,
            config.game.payoff.get(s, a),
            config.game.payoff.row_max(s)
        );
    }
    Ok(())
}
