//! Per-step query-vertex features fed to the policy network.
//!
//! Columns, in order: scaled degree, dense label id, vertex id, share of data
//! vertices with a larger degree, share of data vertices with the same label,
//! number of vertices not yet ordered, and an already-ordered indicator.

use crate::error::{Error, Result};
use crate::graph::{GraphStats, LabeledGraph, VertexId};

pub const FEATURE_WIDTH: usize = 7;

/// Divisors applied to the degree and frequency columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScaling {
    pub degree: f64,
    pub data_degree: f64,
    pub label: f64,
}

impl Default for FeatureScaling {
    fn default() -> Self {
        Self {
            degree: 1.0,
            data_degree: 1.0,
            label: 1.0,
        }
    }
}

/// Row-major `|V(q)| x 7` matrix for step `t` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    step: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn row(&self, u: VertexId) -> &[f64] {
        &self.values[u * FEATURE_WIDTH..(u + 1) * FEATURE_WIDTH]
    }

    pub fn get(&self, u: VertexId, column: usize) -> f64 {
        self.values[u * FEATURE_WIDTH + column]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn from_rows(rows: usize, step: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * FEATURE_WIDTH {
            return Err(Error::Encoding(format!(
                "{} values cannot form {rows} rows of width {FEATURE_WIDTH}",
                values.len()
            )));
        }
        Ok(Self { rows, step, values })
    }
}

/// The step-independent columns of one query, computed once per episode.
#[derive(Debug, Clone)]
pub struct EpisodeFeatures {
    base: Vec<[f64; 5]>,
}

impl EpisodeFeatures {
    pub fn new(q: &LabeledGraph, stats: &GraphStats, scaling: FeatureScaling) -> Self {
        let data_vertices = stats.vertex_count().max(1) as f64;
        let base = (0..q.vertex_count())
            .map(|u| {
                let degree = q.degree(u);
                [
                    degree as f64 / scaling.degree,
                    q.label(u) as f64,
                    u as f64,
                    stats.degree_exceed_count(degree) as f64 / (data_vertices * scaling.data_degree),
                    stats.label_frequency(q.label(u)) as f64 / (data_vertices * scaling.label),
                ]
            })
            .collect();
        Self { base }
    }

    /// Features before selection step `t`, given the `t - 1` vertices already ordered.
    pub fn at_step(&self, prefix: &[VertexId], t: usize) -> Result<FeatureMatrix> {
        let n = self.base.len();
        if t == 0 || t > n {
            return Err(Error::Encoding(format!("step {t} outside 1..={n}")));
        }
        if prefix.len() != t - 1 {
            return Err(Error::Encoding(format!(
                "step {t} expects {} ordered vertices, got {}",
                t - 1,
                prefix.len()
            )));
        }
        let mut ordered = vec![false; n];
        for &u in prefix {
            if u >= n || std::mem::replace(&mut ordered[u], true) {
                return Err(Error::Encoding(format!("invalid prefix {prefix:?}")));
            }
        }
        let remaining = (n - t + 1) as f64;
        let mut values = Vec::with_capacity(n * FEATURE_WIDTH);
        for (u, base) in self.base.iter().enumerate() {
            values.extend_from_slice(base);
            values.push(remaining);
            values.push(if ordered[u] { 1.0 } else { 0.0 });
        }
        Ok(FeatureMatrix {
            rows: n,
            step: t,
            values,
        })
    }
}

pub fn encode(
    q: &LabeledGraph,
    stats: &GraphStats,
    prefix: &[VertexId],
    t: usize,
    scaling: FeatureScaling,
) -> Result<FeatureMatrix> {
    EpisodeFeatures::new(q, stats, scaling).at_step(prefix, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::compute_stats;

    fn data() -> GraphStats {
        // labels [0,0,1,1], degrees [1,2,2,1]
        let g = LabeledGraph::from_edges(vec![0, 0, 1, 1], &[(0, 1), (1, 2), (2, 3)]).unwrap();
        compute_stats(&g)
    }

    fn query() -> LabeledGraph {
        // vertex 0: degree 2, label 1
        LabeledGraph::from_edges(vec![1, 0, 1], &[(0, 1), (0, 2)]).unwrap()
    }

    #[test]
    fn hand_evaluated_row() {
        let h = encode(&query(), &data(), &[], 1, FeatureScaling::default()).unwrap();
        assert_eq!(h.row(0), &[2.0, 1.0, 0.0, 0.0, 0.5, 3.0, 0.0]);
        assert!((0..3).all(|u| h.get(u, 6) == 0.0));
    }

    #[test]
    fn indicator_and_remaining_after_first_pick() {
        let h = encode(&query(), &data(), &[0], 2, FeatureScaling::default()).unwrap();
        assert_eq!(h.get(0, 6), 1.0);
        assert_eq!(h.get(1, 6), 0.0);
        assert!((0..3).all(|u| h.get(u, 5) == 2.0));
    }

    #[test]
    fn scaling_divides() {
        let scaling = FeatureScaling {
            degree: 2.0,
            data_degree: 4.0,
            label: 5.0,
        };
        let h = encode(&query(), &data(), &[], 1, scaling).unwrap();
        assert_eq!(h.get(0, 0), 1.0);
        assert_eq!(h.get(0, 4), 0.1);
        // vertex 1 has degree 1; data vertices 1 and 2 exceed it
        assert_eq!(h.get(1, 3), 2.0 / 16.0);
    }

    #[test]
    fn step_mismatch_is_an_error() {
        let q = query();
        let s = data();
        assert!(encode(&q, &s, &[], 2, FeatureScaling::default()).is_err());
        assert!(encode(&q, &s, &[0], 1, FeatureScaling::default()).is_err());
        assert!(encode(&q, &s, &[], 0, FeatureScaling::default()).is_err());
        assert!(encode(&q, &s, &[0, 1, 2], 4, FeatureScaling::default()).is_err());
        assert!(encode(&q, &s, &[1, 1], 3, FeatureScaling::default()).is_err());
    }
}
