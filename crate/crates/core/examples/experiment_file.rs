//! Drive an experiment from a TOML file, as `infomsg climbing --config` does.
//!
//! `cargo run --release --example experiment_file`

use infomsg::config::ExperimentFile;
use infomsg::harness::run_experiment;

const FILE: &str = r#"
name = "hysteretic-vs-info-q"
episodes = 1000
runs = 200
seed = 11

[game]
kind = "random"
size = 3
n_matrices = 10

[[algorithms]]
name = "info-q"

[[algorithms]]
name = "hysteretic-q"
overrides = { alpha = 0.5, beta_ratio = 0.1 }

[[algorithms]]
name = "model-s"
hindsight = true
"#;

fn main() -> infomsg::Result<()> {
    let file = ExperimentFile::parse(FILE)?;
    let exp = file.to_experiment()?;
    let result = run_experiment(&exp)?;
    println!("{}", file.name);
    for (spec, s) in &result.summaries {
        println!(
            "  {:<13} optimal {:.1}%",
            spec.algorithm.name(),
            100.0 * s.pct_optimal()
        );
    }
    Ok(())
}
