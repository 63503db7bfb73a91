//! A random-matrix sweep written to CSV and JSON.
//!
//! `cargo run --release --example random_sweep -- [out_dir] [size]`

use std::path::PathBuf;

use infomsg::agents::{AgentSpec, Algorithm, Bank};
use infomsg::config::default_eval_every;
use infomsg::harness::{run_experiment, write_outputs, Experiment, GameSet};

fn main() -> infomsg::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/random".into()));
    let size: usize = args.next().map_or(3, |s| s.parse().expect("size must be an integer"));
    let bank = Bank::for_size(size);
    let exp = Experiment {
        games: GameSet::Random {
            size,
            n_matrices: 20,
            seed: 1,
        },
        algorithms: [Algorithm::InfoQ, Algorithm::Iq, Algorithm::HystereticQ]
            .iter()
            .map(|a| AgentSpec::preset(*a, bank))
            .collect(),
        runs: 50,
        episodes: if size >= 32 { 25_000 } else { 1_000 },
        eval_every: default_eval_every(size),
        seed: 1,
        threads: 0,
    };
    let result = run_experiment(&exp)?;
    for (spec, s) in &result.summaries {
        let b = s.boxplot.expect("at least one matrix");
        println!(
            "{:<13} per-matrix optimal: q1 {:.2}  median {:.2}  q3 {:.2}",
            spec.algorithm.name(),
            b.q1,
            b.median,
            b.q3
        );
    }
    let files = write_outputs(&out, &exp, &result)?;
    println!("wrote {}", files.summary.display());
    Ok(())
}
