//! Graph-convolution policy over query vertices.
//!
//! `L` propagation layers `X ← dropout(relu(Â X W + b))` with
//! `Â = D̃^{-1/2}(A + I)D̃^{-1/2}`, followed by a per-vertex scorer
//! `s = W₂ relu(W₁ x + b₁) + b₂` and a softmax restricted to the action space.
//! Gradients are derived by hand; everything runs in `f64`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FEATURE_WIDTH};
use crate::graph::{LabeledGraph, VertexId};
use crate::linalg::Matrix;

pub const DEFAULT_LAYERS: usize = 2;
pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_DROPOUT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            layers: DEFAULT_LAYERS,
            hidden: DEFAULT_HIDDEN,
            dropout: DEFAULT_DROPOUT,
            seed: 0,
        }
    }
}

/// A fully connected layer; `weight` is `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Matrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            weight: Matrix::from_vec(fan_in, fan_out, data),
            bias: vec![0.0; fan_out],
        }
    }

    fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.matmul(&self.weight);
        out.add_row_vector(&self.bias);
        out
    }
}

/// All trainable tensors; also used to hold gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub gcn: Vec<Dense>,
    pub hidden: Dense,
    pub output: Dense,
}

impl Parameters {
    pub fn zeros_like(other: &Parameters) -> Self {
        Self {
            gcn: other
                .gcn
                .iter()
                .map(|d| Dense::zeros(d.weight.rows(), d.weight.cols()))
                .collect(),
            hidden: Dense::zeros(other.hidden.weight.rows(), other.hidden.weight.cols()),
            output: Dense::zeros(other.output.weight.rows(), other.output.weight.cols()),
        }
    }

    fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.gcn.iter().chain([&self.hidden, &self.output])
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.gcn.iter_mut().chain([&mut self.hidden, &mut self.output])
    }

    /// Weight then bias of each layer, in checkpoint order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers()
            .flat_map(|d| [d.weight.as_slice(), d.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .flat_map(|d| [d.weight.as_mut_slice(), d.bias.as_mut_slice()])
            .collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.len());
        let mut rest = values;
        for t in self.tensors_mut() {
            let (head, tail) = rest.split_at(t.len());
            t.copy_from_slice(head);
            rest = tail;
        }
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Parameters) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += alpha * y;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Exact equality including the sign of zero.
    pub fn bit_eq(&self, other: &Parameters) -> bool {
        let (a, b) = (self.tensors(), other.tensors());
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| {
                x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits())
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    config: PolicyConfig,
    params: Parameters,
}

impl PolicyModel {
    /// Glorot-uniform weights drawn from `config.seed`; zero biases.
    pub fn init(config: PolicyConfig) -> Result<Self> {
        if config.layers == 0 || config.hidden == 0 {
            return Err(Error::Model(format!(
                "layers ({}) and hidden width ({}) must be positive",
                config.layers, config.hidden
            )));
        }
        if !(0.0..1.0).contains(&config.dropout) {
            return Err(Error::Model(format!("dropout {} outside [0, 1)", config.dropout)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.hidden;
        let gcn = (0..config.layers)
            .map(|l| Dense::glorot(if l == 0 { FEATURE_WIDTH } else { d }, d, &mut rng))
            .collect();
        let hidden = Dense::glorot(d, d, &mut rng);
        let output = Dense::glorot(d, 1, &mut rng);
        Ok(Self {
            config,
            params: Parameters { gcn, hidden, output },
        })
    }

    pub(crate) fn from_parts(config: PolicyConfig, params: Parameters) -> Self {
        Self { config, params }
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn parameters(&self) -> &Parameters {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut Parameters {
        &mut self.params
    }

    pub fn bit_eq(&self, other: &PolicyModel) -> bool {
        self.config.layers == other.config.layers
            && self.config.hidden == other.config.hidden
            && self.config.dropout.to_bits() == other.config.dropout.to_bits()
            && self.config.seed == other.config.seed
            && self.params.bit_eq(&other.params)
    }

    /// Scores, masked softmax and the intermediates needed by [`Self::backward`].
    pub fn forward(
        &self,
        adjacency: &NormalizedAdjacency,
        features: &FeatureMatrix,
        action_space: &[bool],
        mode: Mode,
    ) -> Result<(ActionDistribution, ForwardCache)> {
        let n = adjacency.size();
        if features.rows() != n || action_space.len() != n {
            return Err(Error::Model(format!(
                "query has {n} vertices but features have {} rows and action space {}",
                features.rows(),
                action_space.len()
            )));
        }
        if !action_space.iter().any(|&a| a) {
            return Err(Error::EmptyActionSpace);
        }
        let keep = 1.0 - self.config.dropout;
        let mut dropout_rng = match mode {
            Mode::Training { dropout_seed } if self.config.dropout > 0.0 => {
                Some(ChaCha8Rng::seed_from_u64(dropout_seed))
            }
            _ => None,
        };

        let mut x = Matrix::from_vec(n, FEATURE_WIDTH, features.as_slice().to_vec());
        let mut layers = Vec::with_capacity(self.params.gcn.len());
        for dense in &self.params.gcn {
            let propagated = adjacency.matrix.matmul(&x);
            let pre = dense.apply(&propagated);
            let activated = pre.map(relu);
            let mask = dropout_rng.as_mut().map(|rng| {
                let data = (0..pre.rows() * pre.cols())
                    .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                Matrix::from_vec(pre.rows(), pre.cols(), data)
            });
            let out = match &mask {
                Some(m) => activated.hadamard(m),
                None => activated,
            };
            layers.push(LayerCache {
                propagated,
                pre,
                mask,
            });
            x = out;
        }
        let hidden_pre = self.params.hidden.apply(&x);
        let hidden = hidden_pre.map(relu);
        let scores: Vec<f64> = self.params.output.apply(&hidden).as_slice().to_vec();
        let distribution = ActionDistribution::masked_softmax(&scores, action_space);
        let cache = ForwardCache {
            layers,
            embedding: x,
            hidden_pre,
            hidden,
            probabilities: distribution.probabilities.clone(),
            action_space: action_space.to_vec(),
        };
        Ok((distribution, cache))
    }

    /// Gradients of a scalar objective `J` given `∂J/∂p_u` for every vertex.
    pub fn backward(
        &self,
        adjacency: &NormalizedAdjacency,
        cache: &ForwardCache,
        grad_probabilities: &[f64],
    ) -> Result<Parameters> {
        let n = cache.probabilities.len();
        let d = self.config.hidden;
        if cache.layers.len() != self.params.gcn.len()
            || cache.embedding.cols() != d
            || adjacency.size() != n
            || grad_probabilities.len() != n
        {
            return Err(Error::Model(
                "forward cache does not match model or inputs".into(),
            ));
        }
        let mut grads = Parameters::zeros_like(&self.params);

        // masked softmax: ∂J/∂s_i = p_i (g_i - Σ_j p_j g_j) inside the action space
        let expected: f64 = cache
            .probabilities
            .iter()
            .zip(grad_probabilities)
            .map(|(p, g)| p * g)
            .sum();
        let grad_scores: Vec<f64> = (0..n)
            .map(|i| {
                if cache.action_space[i] {
                    cache.probabilities[i] * (grad_probabilities[i] - expected)
                } else {
                    0.0
                }
            })
            .collect();
        let grad_scores = Matrix::from_vec(n, 1, grad_scores);

        grads.output.weight = cache.hidden.t_matmul(&grad_scores);
        grads.output.bias = grad_scores.column_sums();
        let grad_hidden = grad_scores
            .matmul_t(&self.params.output.weight)
            .hadamard(&cache.hidden_pre.map(relu_derivative));
        grads.hidden.weight = cache.embedding.t_matmul(&grad_hidden);
        grads.hidden.bias = grad_hidden.column_sums();
        let mut grad_x = grad_hidden.matmul_t(&self.params.hidden.weight);

        for (l, layer) in cache.layers.iter().enumerate().rev() {
            let grad_activated = match &layer.mask {
                Some(m) => grad_x.hadamard(m),
                None => grad_x,
            };
            let grad_pre = grad_activated.hadamard(&layer.pre.map(relu_derivative));
            grads.gcn[l].weight = layer.propagated.t_matmul(&grad_pre);
            grads.gcn[l].bias = grad_pre.column_sums();
            let grad_propagated = grad_pre.matmul_t(&self.params.gcn[l].weight);
            // Â is symmetric, so Âᵀ dP = Â dP
            grad_x = adjacency.matrix.matmul(&grad_propagated);
        }
        Ok(grads)
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

fn relu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Inference,
    /// Dropout active, with masks drawn from `dropout_seed`.
    Training {
        dropout_seed: u64,
    },
}

#[derive(Debug, Clone)]
struct LayerCache {
    propagated: Matrix,
    pre: Matrix,
    mask: Option<Matrix>,
}

/// Intermediates of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    embedding: Matrix,
    hidden_pre: Matrix,
    hidden: Matrix,
    probabilities: Vec<f64>,
    action_space: Vec<bool>,
}

/// `D̃^{-1/2}(A + I)D̃^{-1/2}` of a query graph.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    matrix: Matrix,
}

impl NormalizedAdjacency {
    pub fn new(q: &LabeledGraph) -> Self {
        let n = q.vertex_count();
        let inv_sqrt: Vec<f64> = (0..n).map(|u| 1.0 / ((q.degree(u) + 1) as f64).sqrt()).collect();
        let mut matrix = Matrix::zeros(n, n);
        for u in 0..n {
            matrix.set(u, u, inv_sqrt[u] * inv_sqrt[u]);
            for &w in q.neighbors(u) {
                matrix.set(u, w, inv_sqrt[u] * inv_sqrt[w]);
            }
        }
        Self { matrix }
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn get(&self, u: VertexId, w: VertexId) -> f64 {
        self.matrix.get(u, w)
    }
}

/// Softmax over the action space; zero probability elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    pub probabilities: Vec<f64>,
    pub action_space: Vec<bool>,
    /// Unmasked scores.
    pub scores: Vec<f64>,
    pub entropy: f64,
}

impl ActionDistribution {
    pub fn masked_softmax(scores: &[f64], action_space: &[bool]) -> Self {
        let max = scores
            .iter()
            .zip(action_space)
            .filter(|(_, &a)| a)
            .map(|(&s, _)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut probabilities: Vec<f64> = scores
            .iter()
            .zip(action_space)
            .map(|(&s, &a)| if a { (s - max).exp() } else { 0.0 })
            .collect();
        let total: f64 = probabilities.iter().sum();
        for p in &mut probabilities {
            *p /= total;
        }
        let entropy = -probabilities
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>();
        Self {
            probabilities,
            action_space: action_space.to_vec(),
            scores: scores.to_vec(),
            entropy,
        }
    }

    /// Most probable admissible vertex, lowest id on ties.
    pub fn argmax(&self) -> VertexId {
        argmax_where(&self.probabilities, |u| self.action_space[u])
    }

    /// Highest-scoring vertex ignoring the mask, lowest id on ties.
    pub fn unmasked_argmax(&self) -> VertexId {
        argmax_where(&self.scores, |_| true)
    }

    /// Draws a vertex by inverse-CDF sampling over the action space in id order.
    pub fn sample(&self, rng: &mut impl Rng) -> VertexId {
        let target: f64 = rng.gen();
        let mut cumulative = 0.0;
        let mut last = None;
        for (u, &p) in self.probabilities.iter().enumerate() {
            if !self.action_space[u] || p <= 0.0 {
                continue;
            }
            cumulative += p;
            last = Some(u);
            if target < cumulative {
                return u;
            }
        }
        last.unwrap_or_else(|| self.argmax())
    }
}

fn argmax_where(values: &[f64], admissible: impl Fn(usize) -> bool) -> usize {
    let mut best: Option<usize> = None;
    for (u, &v) in values.iter().enumerate() {
        if admissible(u) && best.is_none_or(|b| v > values[b]) {
            best = Some(u);
        }
    }
    best.expect("non-empty admissible set")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let d = ActionDistribution::masked_softmax(&[1.3, 1.3], &[true, true]);
        assert_eq!(d.probabilities, vec![0.5, 0.5]);
        let d = ActionDistribution::masked_softmax(&[0.0, 3f64.ln()], &[true, true]);
        assert!((d.probabilities[0] - 0.25).abs() < 1e-15);
        assert!((d.probabilities[1] - 0.75).abs() < 1e-15);
        let d = ActionDistribution::masked_softmax(&[5.0, -2.0, 9.0], &[false, true, false]);
        assert_eq!(d.probabilities, vec![0.0, 1.0, 0.0]);
        assert_eq!(d.entropy, 0.0);
        assert_eq!(d.unmasked_argmax(), 2);
        assert_eq!(d.argmax(), 1);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let config = PolicyConfig::default();
        let a = PolicyModel::init(config).unwrap();
        let b = PolicyModel::init(config).unwrap();
        assert!(a.bit_eq(&b));
        let limit = (6.0f64 / 71.0).sqrt();
        let first = &a.parameters().gcn[0];
        assert_eq!((first.weight.rows(), first.weight.cols()), (7, 64));
        assert!(first.weight.as_slice().iter().all(|w| w.abs() <= limit));
        for dense in a.parameters().layers() {
            assert!(dense.bias.iter().all(|&b| b == 0.0));
        }
        let other = PolicyModel::init(PolicyConfig { seed: 1, ..config }).unwrap();
        assert!(!a.bit_eq(&other));
    }

    #[test]
    fn init_rejects_bad_dimensions() {
        for config in [
            PolicyConfig {
                layers: 0,
                ..Default::default()
            },
            PolicyConfig {
                hidden: 0,
                ..Default::default()
            },
            PolicyConfig {
                dropout: 1.0,
                ..Default::default()
            },
        ] {
            assert!(PolicyModel::init(config).is_err());
        }
    }

    #[test]
    fn normalized_adjacency_entries() {
        let q = LabeledGraph::from_edges(vec![0; 3], &[(0, 1), (1, 2)]).unwrap();
        let a = NormalizedAdjacency::new(&q);
        assert!((a.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((a.get(0, 1) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.get(0, 2), 0.0);
        for u in 0..3 {
            for w in 0..3 {
                assert_eq!(a.get(u, w), a.get(w, u));
            }
        }
    }
}
