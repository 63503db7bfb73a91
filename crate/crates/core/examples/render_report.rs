//! Run a small climbing experiment and render its figures as SVG.
//!
//! `cargo run --release --example render_report -- [out_dir]`

use std::path::PathBuf;

use infomsg::agents::{AgentSpec, Algorithm, Bank};
use infomsg::harness::{run_experiment, write_outputs, Experiment, GameSet};
use infomsg::report::render_report;

fn main() -> infomsg::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/report".into()));
    let exp = Experiment {
        games: GameSet::Climbing,
        algorithms: [
            Algorithm::InfoQ,
            Algorithm::Iql,
            Algorithm::Lenience,
            Algorithm::CommBias,
        ]
        .iter()
        .map(|a| AgentSpec::preset(*a, Bank::Small))
        .collect(),
        runs: 200,
        episodes: 1000,
        eval_every: 10,
        seed: 2,
        threads: 0,
    };
    let result = run_experiment(&exp)?;
    write_outputs(&out, &exp, &result)?;
    for path in render_report(&out, &out.join("svg"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
