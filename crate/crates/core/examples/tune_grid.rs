//! Grid search on a custom grid, scored on fresh random games.
//!
//! `cargo run --release --example tune_grid`

use std::collections::BTreeMap;

use infomsg::agents::{Algorithm, Bank};
use infomsg::tuner::{grid_search, GridSpec, TuningProtocol};

fn main() -> infomsg::Result<()> {
    let grid = GridSpec {
        algorithm: Algorithm::Iql,
        bank: Bank::Small,
        axes: BTreeMap::from([
            ("alpha".to_string(), vec![0.05, 0.1, 0.5]),
            ("epsilon".to_string(), vec![0.3, 1.0]),
        ]),
    };
    let protocol = TuningProtocol {
        size: 3,
        n_matrices: 10,
        runs_per_matrix: 50,
        episodes: 1000,
        eval_every: 100,
        seed: 3,
        threads: 0,
    };
    let result = grid_search(&grid, &protocol)?;
    for (i, row) in result.rows.iter().enumerate() {
        let mark = if i == result.best { "*" } else { " " };
        println!(
            "{mark} {:?}  optimal {:.3}  reward {:.4}",
            row.params, row.pct_optimal, row.mean_reward
        );
    }
    println!("best spec: {:?}", result.best_spec()?.params.epsilon);
    Ok(())
}
