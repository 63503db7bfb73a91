//! Property tests for the inference oracle, gradients, estimators and harness
//! invariants.

use std::collections::BTreeSet;
use std::sync::Arc;

use infomsg::agents::{
    grad_log_softmax_into, grad_softmax_into, signaling_gradient, signaling_objective, softmax, AgentSpec, Algorithm,
    Bank, PolicyLearner, SoftmaxTable,
};
use infomsg::game::climbing_game;
use infomsg::harness::{
    derive_run_seed, partition_signature, run_experiment, run_training, Experiment, GameSet, PartitionSignature,
    RunConfig,
};
use infomsg::inference::{
    importance_weight, scaled_posterior, scaled_score_row, select_message, AccumulationMode,
    DeterministicMessagePolicy, EmpiricalPrior, MarginalEstimate,
};
use infomsg::select::maximizers;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const GRAD_REL_TOL: f64 = 1e-4;

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// `p(s|m) / p(s)` straight from Bayes' rule over the joint table; 1 when `p(m) = 0`.
fn brute_force_posterior(assignment: &[Option<usize>], probs: &[f64], n_messages: usize) -> Vec<Vec<f64>> {
    let n = probs.len();
    let joint: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            (0..n_messages)
                .map(|m| if assignment[s] == Some(m) { probs[s] } else { 0.0 })
                .collect()
        })
        .collect();
    (0..n)
        .map(|s| {
            (0..n_messages)
                .map(|m| {
                    let p_m: f64 = (0..n).map(|t| joint[t][m]).sum();
                    if p_m == 0.0 {
                        1.0
                    } else {
                        (joint[s][m] / p_m) / probs[s]
                    }
                })
                .collect()
        })
        .collect()
}

fn exact_maximizers(row: &[f64]) -> BTreeSet<usize> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..row.len())
        .filter(|&i| (row[i] - max).abs() <= 1e-12 * max.abs().max(1.0))
        .collect()
}

fn policy_instance() -> impl Strategy<Value = (Vec<Option<usize>>, Vec<u64>, usize)> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(n_states, n_messages)| {
        (
            prop::collection::vec(prop::option::weighted(0.85, 0..n_messages), n_states),
            prop::collection::vec(1u64..50, n_states),
            Just(n_messages),
        )
    })
}

fn logits(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn posterior_matches_bayes_rule((assignment, counts, n_messages) in policy_instance()) {
        let probs = EmpiricalPrior::from_counts(counts).probabilities().unwrap();
        let policy = DeterministicMessagePolicy::from_partial(assignment.clone(), n_messages).unwrap();
        let post = scaled_posterior(&policy, &probs);
        let oracle = brute_force_posterior(&assignment, &probs, n_messages);
        for (s, expected) in oracle.iter().enumerate() {
            for (m, e) in expected.iter().enumerate() {
                prop_assert!((post.get(s, m) - e).abs() <= 1e-12 * e.abs().max(1.0),
                    "s{s} m{m}: {} vs {e}", post.get(s, m));
            }
            let want = exact_maximizers(expected);
            let reported: BTreeSet<usize> = maximizers(post.row(s)).into_iter().collect();
            prop_assert_eq!(&reported, &want);
            let mut sampled = BTreeSet::new();
            for seed in 0..200 {
                sampled.insert(select_message(s, &post, &mut ChaCha8Rng::seed_from_u64(seed)));
            }
            prop_assert_eq!(&sampled, &want);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn log_softmax_gradient_matches_finite_differences(theta in logits(3), taken in 0usize..3) {
        let mut analytic = [0.0; 3];
        grad_log_softmax_into(&softmax(&theta), taken, &mut analytic);
        for k in 0..3 {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[k] += H;
            minus[k] -= H;
            let numeric = (softmax(&plus)[taken].ln() - softmax(&minus)[taken].ln()) / (2.0 * H);
            prop_assert!(rel_err(analytic[k], numeric) < GRAD_REL_TOL, "k{k}: {} vs {numeric}", analytic[k]);
        }
    }

    #[test]
    fn weighted_log_gradient_equals_probability_gradient(theta in logits(3), taken in 0usize..3) {
        let probs = softmax(&theta);
        let rho = importance_weight(&probs, taken);
        let mut log_grad = [0.0; 3];
        let mut grad = [0.0; 3];
        grad_log_softmax_into(&probs, taken, &mut log_grad);
        grad_softmax_into(&probs, taken, &mut grad);
        for k in 0..3 {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[k] += H;
            minus[k] -= H;
            let numeric = (softmax(&plus)[taken] - softmax(&minus)[taken]) / (2.0 * H);
            prop_assert!((rho * log_grad[k] - grad[k]).abs() <= 1e-15);
            prop_assert!(rel_err(rho * log_grad[k], numeric) < GRAD_REL_TOL);
        }
    }

    #[test]
    fn signaling_gradient_matches_finite_differences(
        params in logits(9),
        weights in prop::collection::vec(0.05f64..1.0, 3),
        state in 0usize..3,
        lambda in 0.0f64..2.0,
        target in 0.0f64..1.0,
    ) {
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut theta = SoftmaxTable::new(3, 3);
        for s in 0..3 {
            theta.params_mut(s).copy_from_slice(&params[3 * s..3 * s + 3]);
        }
        let analytic = signaling_gradient(&theta, &weights, state, lambda, target);
        for (i, a) in analytic.iter().enumerate() {
            let (s, k) = (i / 3, i % 3);
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus.params_mut(s)[k] += H;
            minus.params_mut(s)[k] -= H;
            let numeric = (signaling_objective(&plus, &weights, state, lambda, target)
                - signaling_objective(&minus, &weights, state, lambda, target))
                / (2.0 * H);
            // Exact zeros of the analytic gradient leave only finite-difference noise.
            prop_assert!(
                rel_err(*a, numeric) < GRAD_REL_TOL || (a - numeric).abs() < 1e-9,
                "param {i}: {a} vs {numeric}"
            );
        }
    }

    #[test]
    fn full_sweep_rollout_mean_sums_to_one(rows in prop::collection::vec(logits(4), 1..20)) {
        let t = rows.len();
        let mut marginal = MarginalEstimate::new(4, 0.5, AccumulationMode::FullSweep).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(t as u64);
        for theta in &rows {
            let row = softmax(theta);
            let chosen = rand::Rng::gen_range(&mut rng, 0..4);
            marginal.accumulate_rollout(chosen, &row, t);
        }
        let sum: f64 = marginal.rollout_mean().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9, "sum {sum}");
    }

    #[test]
    fn marginal_stays_positive(
        mu in 0.0f64..0.999,
        literal in any::<bool>(),
        steps in prop::collection::vec((prop::collection::vec(0.0f64..1.0, 3), 0usize..3, any::<bool>()), 1..200),
    ) {
        let mode = if literal { AccumulationMode::PseudocodeLiteral } else { AccumulationMode::FullSweep };
        let mut marginal = MarginalEstimate::new(3, mu, mode).unwrap();
        for (row, chosen, flush) in steps {
            let total: f64 = row.iter().sum::<f64>().max(1e-300);
            let row: Vec<f64> = row.iter().map(|p| p / total).collect();
            marginal.accumulate_rollout(chosen, &row, 10);
            if flush {
                marginal.update_marginal();
                prop_assert!(marginal.estimate().iter().all(|p| *p > 0.0 && p.is_finite()));
            }
        }
        marginal.update_marginal();
        prop_assert!(marginal.estimate().iter().all(|p| *p > 0.0 && p.is_finite()));
    }

    #[test]
    fn uniform_marginal_preserves_argmax(theta in logits(5), mu in 0.0f64..0.99) {
        let row = softmax(&theta);
        let marginal = MarginalEstimate::new(5, mu, AccumulationMode::PseudocodeLiteral).unwrap();
        prop_assert_eq!(maximizers(&scaled_score_row(&row, &marginal)), maximizers(&row));
    }

    #[test]
    fn softmax_rows_stay_normalized(
        updates in prop::collection::vec((0usize..3, 0usize..4, -5.0f64..5.0), 0..300),
        step in 0.01f64..5.0,
    ) {
        let mut learner = PolicyLearner::new(3, 4, step, 0.1);
        for (context, taken, reward) in updates {
            learner.reinforce_update(context, taken, reward).unwrap();
        }
        for s in 0..3 {
            let sum: f64 = learner.theta().probabilities(s).iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(learner.theta().params(s).iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn prior_probabilities_sum_to_one(counts in prop::collection::vec(0u64..1000, 1..8)) {
        let prior = EmpiricalPrior::from_counts(counts.clone());
        match prior.probabilities() {
            Ok(p) => prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12),
            Err(_) => prop_assert_eq!(counts.iter().sum::<u64>(), 0),
        }
    }

    #[test]
    fn partition_signature_round_trips(messages in prop::collection::vec(0usize..4, 1..6)) {
        let sig = partition_signature(&messages);
        prop_assert_eq!(PartitionSignature::parse(&sig.to_string()), Some(sig.clone()));
        let distinct: BTreeSet<usize> = messages.iter().copied().collect();
        prop_assert_eq!(sig.n_classes(), distinct.len());
    }

    #[test]
    fn run_seeds_do_not_collide(master in any::<u64>()) {
        let mut seen = BTreeSet::new();
        for m in 0..40 {
            for r in 0..50 {
                prop_assert!(seen.insert(derive_run_seed(master, m, r)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn hysteretic_with_equal_steps_is_iql(alpha in 0.01f64..1.0, seed in any::<u64>()) {
        let mut hysteretic = AgentSpec::preset(Algorithm::HystereticQ, Bank::Small);
        hysteretic.params.alpha = alpha;
        hysteretic.params.negative_alpha = alpha;
        let mut iql = AgentSpec::preset(Algorithm::Iql, Bank::Small);
        iql.params.alpha = alpha;
        iql.params.epsilon = hysteretic.params.epsilon;
        let run = |spec: AgentSpec| {
            run_training(&RunConfig {
                game: Arc::new(climbing_game()),
                spec,
                episodes: 300,
                eval_every: 50,
                seed,
            })
            .unwrap()
        };
        prop_assert_eq!(run(hysteretic), run(iql));
    }

    #[test]
    fn pooled_counts_cover_every_state_of_every_run(
        runs in 1u64..6,
        n_matrices in 1usize..4,
        size in 2usize..5,
        seed in any::<u64>(),
    ) {
        let exp = Experiment {
            games: GameSet::Random { size, n_matrices, seed },
            algorithms: vec![AgentSpec::preset(Algorithm::Iql, Bank::Small)],
            runs,
            episodes: 20,
            eval_every: 10,
            seed,
            threads: 1,
        };
        let result = run_experiment(&exp).unwrap();
        let summary = &result.summaries[0].1;
        let total: u64 = summary.counts.iter().flatten().sum();
        prop_assert_eq!(total, runs * n_matrices as u64 * size as u64);
        prop_assert_eq!(summary.partitions.values().sum::<u64>(), runs * n_matrices as u64);
    }
}
