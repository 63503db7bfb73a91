//! The scaled posterior behind message selection, worked by hand.
//!
//! `cargo run --example posterior_inference`

use infomsg::inference::{
    greedy_message, scaled_posterior, select_message, DeterministicMessagePolicy, EmpiricalPrior, FlatRowRule,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn print(label: &str, policy: &DeterministicMessagePolicy, probs: &[f64]) {
    let post = scaled_posterior(policy, probs);
    println!("{label}: pi = {:?}, p(s) = {probs:?}", policy.assignment());
    for s in 0..post.n_states() {
        let row: Vec<String> = post.row(s).iter().map(|v| format!("{v:.2}")).collect();
        println!("  s{}: [{}]", s + 1, row.join(", "));
    }
}

fn main() -> infomsg::Result<()> {
    // Visit counts (2, 1, 1) give p(s) = (0.5, 0.25, 0.25).
    let prior = EmpiricalPrior::from_counts(vec![2, 1, 1]);
    let probs = prior.probabilities()?;

    // m1 scores 1/p(s1) and the shared m2 scores 1/(p(s2)+p(s3)); both are 2.
    // Once s3 leaves m2, m2 scores 1/p(s2) = 4. Unused m3 scores 1 everywhere.
    let shared = DeterministicMessagePolicy::new(vec![0, 1, 1], 3)?;
    print("shared message", &shared, &probs);

    // A state whose value row is still flat has no preference yet; it steers
    // toward the unused message instead of piling onto m1.
    let flat_row = [-2.0, -2.0, -2.0];
    let partial = DeterministicMessagePolicy::from_partial(
        vec![Some(0), Some(1), greedy_message(&flat_row, FlatRowRule::Unassigned)],
        3,
    )?;
    print("new state", &partial, &probs);

    let post = scaled_posterior(&partial, &probs);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let picks: Vec<usize> = (0..5).map(|_| select_message(2, &post, &mut rng) + 1).collect();
    println!("s3 sends m{picks:?}");
    Ok(())
}
