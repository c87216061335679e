mod common;

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subgraph_order::checkpoint::model_to_string;
use subgraph_order::graph::{compute_stats, extract_connected_query, GraphStats, LabeledGraph};
use subgraph_order::policy::{Mode, PolicyConfig, PolicyModel};
use subgraph_order::trainer::{
    compute_rewards, ppo_update, rollout, surrogate_objective, train, BatchReward, EpisodeTrace, Optimizer,
    OptimizerState, RewardWeights, RolloutMode, RolloutOptions, TrainConfig,
};
use subgraph_order::Error;

use common::{perturb, synthetic_graph};

fn small_policy(seed: u64) -> PolicyConfig {
    PolicyConfig {
        layers: 2,
        hidden: 6,
        dropout: 0.2,
        seed,
    }
}

fn weights() -> RewardWeights {
    RewardWeights::from(&TrainConfig::default())
}

fn sample(model: &PolicyModel, q: &LabeledGraph, stats: &GraphStats, seed: u64) -> EpisodeTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rollout(
        model,
        q,
        stats,
        RolloutMode::Sample,
        &mut rng,
        RolloutOptions::default(),
    )
    .unwrap()
}

fn greedy(model: &PolicyModel, q: &LabeledGraph, stats: &GraphStats) -> EpisodeTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    rollout(
        model,
        q,
        stats,
        RolloutMode::Greedy,
        &mut rng,
        RolloutOptions::default(),
    )
    .unwrap()
}

/// Lowest-id admissible vertex at every step.
fn lowest_id_connected_order(q: &LabeledGraph) -> Vec<usize> {
    let mut order = vec![0];
    while order.len() < q.vertex_count() {
        let next = (0..q.vertex_count())
            .find(|u| !order.contains(u) && order.iter().any(|&w| q.has_edge(*u, w)))
            .unwrap();
        order.push(next);
    }
    order
}

#[test]
fn zero_weights_give_the_lowest_id_connected_order() {
    let g = synthetic_graph();
    let stats = compute_stats(&g);
    let mut model = PolicyModel::init(small_policy(1)).unwrap();
    let zeros = vec![0.0; model.parameters().len()];
    model.parameters_mut().set_flat(&zeros);
    for seed in 0..10 {
        let q = extract_connected_query(&g, 7, seed).unwrap();
        let trace = greedy(&model, &q, &stats);
        assert_eq!(trace.order.vertices(), lowest_id_connected_order(&q).as_slice());
    }
}

#[test]
fn second_vertex_of_an_edge_is_forced() {
    let q = LabeledGraph::from_edges(vec![0, 1], &[(0, 1)]).unwrap();
    let stats = compute_stats(&synthetic_graph());
    let model = PolicyModel::init(small_policy(2)).unwrap();
    let trace = sample(&model, &q, &stats, 3);
    assert!(!trace.steps[0].is_forced());
    assert!(trace.steps[1].is_forced());
    assert_eq!(trace.steps[1].log_prob, 0.0);
}

#[test]
fn sampled_rollouts_repeat_under_a_seed() {
    let g = synthetic_graph();
    let stats = compute_stats(&g);
    let model = PolicyModel::init(small_policy(3)).unwrap();
    let q = extract_connected_query(&g, 8, 4).unwrap();
    let a = sample(&model, &q, &stats, 11);
    let b = sample(&model, &q, &stats, 11);
    assert_eq!(a.order, b.order);
    for (x, y) in a.steps.iter().zip(&b.steps) {
        assert_eq!(x.log_prob.to_bits(), y.log_prob.to_bits());
        assert_eq!(x.dropout_seed, y.dropout_seed);
    }
}

#[test]
fn shifting_all_scores_changes_nothing() {
    let g = synthetic_graph();
    let stats = compute_stats(&g);
    let model = PolicyModel::init(small_policy(5)).unwrap();
    let mut shifted = model.clone();
    shifted.parameters_mut().output.bias[0] += 3.75;
    for seed in 0..8 {
        let q = extract_connected_query(&g, 8, 100 + seed).unwrap();
        for (a, b) in [
            (
                sample(&model, &q, &stats, seed),
                sample(&shifted, &q, &stats, seed),
            ),
            (greedy(&model, &q, &stats), greedy(&shifted, &q, &stats)),
        ] {
            assert_eq!(a.order, b.order);
            for (x, y) in a.steps.iter().zip(&b.steps) {
                assert!((x.r_h - y.r_h).abs() < 1e-12);
                assert_eq!(x.r_val, y.r_val);
                if let (Some(p), Some(r)) = (&x.distribution, &y.distribution) {
                    for (pp, rp) in p.probabilities.iter().zip(&r.probabilities) {
                        assert!((pp - rp).abs() < 1e-12);
                    }
                }
            }
            let (mut a, mut b) = (a, b);
            compute_rewards(&mut a, 40, 90, weights());
            compute_rewards(&mut b, 40, 90, weights());
            assert_eq!(a.r_enum, b.r_enum);
        }
    }
}

#[test]
fn surrogate_at_the_sampling_policy_is_the_reward_sum() {
    let g = synthetic_graph();
    let stats = compute_stats(&g);
    let model = PolicyModel::init(small_policy(6)).unwrap();
    let mut traces = Vec::new();
    for (i, (learned, base)) in [(10, 100), (300, 120), (50, 50)].into_iter().enumerate() {
        let q = extract_connected_query(&g, 6, 200 + i as u64).unwrap();
        let mut trace = sample(&model, &q, &stats, i as u64);
        compute_rewards(&mut trace, learned, base, weights());
        traces.push(trace);
    }
    let refs: Vec<&EpisodeTrace> = traces.iter().collect();
    let (j, _, terms) = surrogate_objective(&model, &refs, 0.2, BatchReward::PerQuery).unwrap();
    let expected: f64 = traces
        .iter()
        .map(|t| t.decayed_return * t.steps.iter().filter(|s| !s.is_forced()).count() as f64)
        .sum();
    assert_eq!(
        terms,
        traces
            .iter()
            .flat_map(|t| &t.steps)
            .filter(|s| !s.is_forced())
            .count()
    );
    assert!((j - expected).abs() <= 1e-12 * expected.abs().max(1.0));
}

/// `Σ r · ln π_θ(a_t | s_t)` over the unforced steps, with the recorded dropout masks.
fn log_likelihood_objective(model: &PolicyModel, traces: &[&EpisodeTrace]) -> f64 {
    let mut total = 0.0;
    for trace in traces {
        for step in trace.steps.iter().filter(|s| !s.is_forced()) {
            let mode = Mode::Training {
                dropout_seed: step.dropout_seed.unwrap(),
            };
            let (d, _) = model
                .forward(&trace.adjacency, &step.features, &step.action_space, mode)
                .unwrap();
            total += trace.decayed_return * d.probabilities[step.action].ln();
        }
    }
    total
}

#[test]
fn first_update_follows_the_policy_gradient() {
    let g = synthetic_graph();
    let stats = compute_stats(&g);
    let mut model = PolicyModel::init(PolicyConfig {
        layers: 2,
        hidden: 4,
        dropout: 0.25,
        seed: 8,
    })
    .unwrap();
    // Zero biases put dead rows exactly on the ReLU kink, where finite differences disagree.
    perturb(&mut model, &mut ChaCha8Rng::seed_from_u64(8), 0.1);
    let mut traces = Vec::new();
    for (i, (learned, base)) in [(20, 80), (90, 30)].into_iter().enumerate() {
        let q = extract_connected_query(&g, 5, 300 + i as u64).unwrap();
        let mut trace = sample(&model, &q, &stats, 40 + i as u64);
        compute_rewards(&mut trace, learned, base, weights());
        traces.push(trace);
    }
    let refs: Vec<&EpisodeTrace> = traces.iter().collect();
    let cfg = TrainConfig {
        learning_rate: 1e-6,
        optimizer: Optimizer::Sgd,
        ..TrainConfig::default()
    };
    let mut updated = model.clone();
    ppo_update(
        &mut updated,
        &mut OptimizerState::new(Optimizer::Sgd),
        &refs,
        &cfg,
    )
    .unwrap();
    let before = model.parameters().flatten();
    let step: Vec<f64> = updated
        .parameters()
        .flatten()
        .iter()
        .zip(&before)
        .map(|(a, b)| (a - b) / cfg.learning_rate)
        .collect();

    let h = 1e-6;
    let mut numeric = Vec::with_capacity(before.len());
    for i in 0..before.len() {
        let mut probe = model.clone();
        let mut flat = before.clone();
        flat[i] += h;
        probe.parameters_mut().set_flat(&flat);
        let plus = log_likelihood_objective(&probe, &refs);
        flat[i] -= 2.0 * h;
        probe.parameters_mut().set_flat(&flat);
        let minus = log_likelihood_objective(&probe, &refs);
        numeric.push((plus - minus) / (2.0 * h));
    }
    let diff: f64 = step
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = numeric.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(scale > 1e-3, "degenerate instance");
    assert!(diff / scale < 1e-5, "relative deviation {}", diff / scale);
}

fn tiny_training_set(g: &LabeledGraph) -> Vec<LabeledGraph> {
    (0..6)
        .map(|i| extract_connected_query(g, 6, 500 + i).unwrap())
        .collect()
}

fn tiny_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        seed: 21,
        policy: small_policy(21),
        ..TrainConfig::default()
    }
}

#[test]
fn zero_epochs_return_the_initial_model() {
    let g = synthetic_graph();
    let out = train(None, &g, &tiny_training_set(&g), &tiny_config(0)).unwrap();
    assert!(out.metrics.is_empty());
    assert!(out.model.bit_eq(&PolicyModel::init(small_policy(21)).unwrap()));
}

#[test]
fn training_is_deterministic_across_thread_counts() {
    let g = synthetic_graph();
    let queries = tiny_training_set(&g);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| train(None, &g, &queries, &tiny_config(4)).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(model_to_string(&a.model), model_to_string(&b.model));
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn incremental_training_continues_from_a_model() {
    let g = synthetic_graph();
    let first = train(None, &g, &tiny_training_set(&g), &tiny_config(3)).unwrap();
    let more: Vec<LabeledGraph> = (0..4)
        .map(|i| extract_connected_query(&g, 9, 900 + i).unwrap())
        .collect();
    let cfg = TrainConfig {
        epochs: 10,
        ..tiny_config(10)
    };
    let second = train(Some(first.model.clone()), &g, &more, &cfg).unwrap();
    assert_eq!(second.metrics.len(), 10);
    assert!(!second.model.bit_eq(&first.model));
    assert_eq!(second.model.config(), first.model.config());
}

#[test]
fn queries_over_the_time_limit_are_skipped() {
    let complete = |n: usize| {
        let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        LabeledGraph::from_edges(vec![0; n], &edges).unwrap()
    };
    let g = complete(12);
    let cfg = TrainConfig {
        time_limit: Duration::ZERO,
        ..tiny_config(2)
    };
    let out = train(None, &g, &[complete(4)], &cfg).unwrap();
    assert_eq!(out.metrics.len(), 2);
    assert!(out.metrics.iter().all(|m| m.skipped_queries == 1));
    assert!(out.model.bit_eq(&PolicyModel::init(small_policy(21)).unwrap()));
}

#[test]
fn invalid_inputs_are_rejected() {
    let g = synthetic_graph();
    assert!(matches!(
        train(None, &g, &[], &tiny_config(1)),
        Err(Error::Training(_))
    ));
    let disconnected = LabeledGraph::from_edges(vec![0, 0, 0], &[(0, 1)]).unwrap();
    assert!(train(None, &g, &[disconnected], &tiny_config(1)).is_err());
    let bad = TrainConfig {
        gamma: 0.0,
        ..tiny_config(1)
    };
    assert!(matches!(
        train(None, &g, &tiny_training_set(&g), &bad),
        Err(Error::Config(_))
    ));
}

#[test]
fn perturbed_models_still_train() {
    let g = synthetic_graph();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut model = PolicyModel::init(small_policy(4)).unwrap();
    perturb(&mut model, &mut rng, 1.0);
    let out = train(Some(model), &g, &tiny_training_set(&g), &tiny_config(3)).unwrap();
    assert!(out.model.parameters().all_finite());
    assert!(out
        .metrics
        .iter()
        .all(|m| m.mean_reward.is_finite() && m.loss.is_finite()));
}
