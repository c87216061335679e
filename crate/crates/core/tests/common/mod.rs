#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subgraph_order::features::{FeatureMatrix, FEATURE_WIDTH};
use subgraph_order::graph::{extract_connected_query, random_connected_graph, LabeledGraph};
use subgraph_order::policy::{PolicyConfig, PolicyModel};

/// Label weights of the synthetic benchmark graph: one dominant label and a rare one.
pub const SKEWED_LABELS: [f64; 4] = [0.55, 0.25, 0.15, 0.05];

pub fn synthetic_graph() -> LabeledGraph {
    random_connected_graph(200, 600, &SKEWED_LABELS, 7).unwrap()
}

/// A small matching instance: data graph with 10..=40 vertices and 1..=4
/// labels, and a connected query with 2..=8 vertices. Half of the queries are
/// cut from the data graph (at least one match); the rest are independent.
pub fn random_instance(seed: u64) -> (LabeledGraph, LabeledGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = rng.gen_range(1..=4);
    let weights: Vec<f64> = (0..labels).map(|_| rng.gen_range(0.2..1.0)).collect();
    let n = rng.gen_range(10..=40);
    let m = rng.gen_range(n - 1..=(2 * n).min(n * (n - 1) / 2));
    let g = random_connected_graph(n, m, &weights, rng.gen()).unwrap();
    let size = rng.gen_range(2..=8);
    let q = if rng.gen_bool(0.5) {
        extract_connected_query(&g, size, rng.gen()).unwrap()
    } else {
        let max_edges = size * (size - 1) / 2;
        let edges = rng.gen_range(size - 1..=max_edges.min(size + 3));
        random_connected_graph(size, edges, &weights, rng.gen()).unwrap()
    };
    (q, g)
}

pub fn random_model(rng: &mut ChaCha8Rng, dropout: f64) -> PolicyModel {
    PolicyModel::init(PolicyConfig {
        layers: rng.gen_range(1..=3),
        hidden: rng.gen_range(1..=12),
        dropout,
        seed: rng.gen(),
    })
    .unwrap()
}

/// Moves every parameter of `model` by a uniform amount in `[-scale, scale]`.
pub fn perturb(model: &mut PolicyModel, rng: &mut ChaCha8Rng, scale: f64) {
    let mut flat = model.parameters().flatten();
    for x in &mut flat {
        *x += rng.gen_range(-scale..=scale);
    }
    model.parameters_mut().set_flat(&flat);
}

pub fn random_features(rng: &mut ChaCha8Rng, rows: usize) -> FeatureMatrix {
    let values = (0..rows * FEATURE_WIDTH)
        .map(|_| rng.gen_range(-3.0..3.0))
        .collect();
    FeatureMatrix::from_rows(rows, 1, values).unwrap()
}

/// A non-empty random subset of `0..n`.
pub fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    mask[rng.gen_range(0..n)] = true;
    mask
}
