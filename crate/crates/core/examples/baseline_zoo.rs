//! Every algorithm on the climbing game and on random 3x3 games.
//!
//! `cargo run --release --example baseline_zoo -- [runs] [matrices]`

use infomsg::agents::{AgentSpec, Algorithm, Bank};
use infomsg::harness::{run_experiment, Experiment, GameSet};

fn main() -> infomsg::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u64>().expect("integer argument"));
    let runs = args.next().unwrap_or(200);
    let matrices = args.next().unwrap_or(20) as usize;
    let algorithms: Vec<AgentSpec> = Algorithm::ALL
        .iter()
        .map(|a| AgentSpec::preset(*a, Bank::Small))
        .collect();

    for (label, games) in [
        ("climbing", GameSet::Climbing),
        (
            "random 3x3",
            GameSet::Random {
                size: 3,
                n_matrices: matrices,
                seed: 1,
            },
        ),
    ] {
        let result = run_experiment(&Experiment {
            games,
            algorithms: algorithms.clone(),
            runs,
            episodes: 1000,
            eval_every: 10,
            seed: 7,
            threads: 0,
        })?;
        println!("{label}: {runs} runs per matrix, 1000 episodes");
        println!(
            "{:<14} {:>9} {:>9} {:>9} {:>10}",
            "algorithm", "optimal", "median", "reward", "distinct"
        );
        for (spec, s) in &result.summaries {
            let median = s.boxplot.map_or(f64::NAN, |b| b.median);
            let distinct = s.partition_share("{s1}{s2}{s3}");
            println!(
                "{:<14} {:>8.1}% {:>8.1}% {:>9.3} {:>9.1}%",
                spec.algorithm.name(),
                100.0 * s.pct_optimal(),
                100.0 * median,
                s.final_mean_norm_reward,
                100.0 * distinct
            );
        }
        println!();
    }
    Ok(())
}
