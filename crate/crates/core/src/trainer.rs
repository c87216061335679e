//! Order generation as a sequential decision process, reward shaping and
//! clipped-surrogate policy optimization.
//!
//! An episode orders one query. At step `t` the policy picks a vertex among the
//! unordered neighbors of the prefix (any vertex at `t = 1`). When the order is
//! complete it is enumerated and compared with the RI baseline order.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::enumerate::{enumerate, Limits, Termination, DEFAULT_MATCH_LIMIT, DEFAULT_TIME_LIMIT_SECS};
use crate::error::{Error, Result};
use crate::features::{EpisodeFeatures, FeatureMatrix, FeatureScaling};
use crate::filter::{global_refine, local_prune, CandidateSets, DEFAULT_REFINE_ROUNDS};
use crate::graph::{compute_stats, GraphStats, LabeledGraph, VertexId};
use crate::order::{order_ri, MatchingOrder, Strategy};
use crate::policy::{ActionDistribution, Mode, NormalizedAdjacency, Parameters, PolicyConfig, PolicyModel};

/// Validity reward when the unmasked argmax is admissible.
pub const VALID_REWARD: f64 = 0.1;
/// Validity reward otherwise; larger in magnitude than [`VALID_REWARD`].
pub const INVALID_REWARD: f64 = -0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutMode {
    /// Draw each vertex from the policy distribution, dropout active.
    Sample,
    /// Take the most probable vertex, lowest id on ties.
    Greedy,
}

/// How the per-step reward scalar of the surrogate is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchReward {
    /// Each query's steps use that query's decayed return.
    PerQuery,
    /// Every step uses the sum of decayed returns over the whole batch.
    Summed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    /// Plain gradient ascent.
    Sgd,
    /// Adam with the usual moment decays (0.9, 0.999).
    Adam,
}

/// Shaping of the enumeration-count difference `baseline - learned`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumReward {
    /// `sign(x) · ln(1 + |x|)`.
    SignedLog1p,
    /// `x` unchanged.
    Linear,
}

impl EnumReward {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            EnumReward::SignedLog1p => signed_log1p(x),
            EnumReward::Linear => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub gamma: f64,
    pub beta_val: f64,
    pub beta_h: f64,
    pub clip_eps: f64,
    pub enum_reward: EnumReward,
    /// Match limit for every enumeration during training.
    pub match_limit: u64,
    /// Queries whose enumeration exceeds this are skipped for the epoch.
    pub time_limit: Duration,
    pub refine_rounds: usize,
    pub seed: u64,
    /// Queries per gradient step; `None` uses the whole set (one step per epoch).
    pub batch_size: Option<usize>,
    /// Surrogate optimization passes over each batch.
    pub updates_per_batch: usize,
    pub batch_reward: BatchReward,
    pub optimizer: Optimizer,
    /// Pick the maximum-degree vertex first instead of asking the policy.
    pub first_by_degree: bool,
    pub scaling: FeatureScaling,
    /// Architecture used when no initial model is supplied.
    pub policy: PolicyConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 100,
            gamma: 0.9,
            beta_val: 1.0,
            beta_h: 0.1,
            clip_eps: 0.2,
            enum_reward: EnumReward::SignedLog1p,
            match_limit: DEFAULT_MATCH_LIMIT,
            time_limit: Duration::from_secs(DEFAULT_TIME_LIMIT_SECS),
            refine_rounds: DEFAULT_REFINE_ROUNDS,
            seed: 0,
            batch_size: None,
            updates_per_batch: 1,
            batch_reward: BatchReward::PerQuery,
            optimizer: Optimizer::Adam,
            first_by_degree: false,
            scaling: FeatureScaling::default(),
            policy: PolicyConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::Config(format!(
                "clip epsilon {} outside (0, 1)",
                self.clip_eps
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == Some(0) || self.updates_per_batch == 0 {
            return Err(Error::Config(
                "batch size and update count must be positive".into(),
            ));
        }
        Ok(())
    }

    fn limits(&self) -> Limits {
        Limits::unlimited()
            .with_match_limit(self.match_limit)
            .with_time_limit(self.time_limit)
    }
}

/// One decision of an episode.
#[derive(Debug, Clone)]
pub struct Step {
    /// 1-based step index.
    pub t: usize,
    pub features: FeatureMatrix,
    pub action_space: Vec<bool>,
    /// `None` when the action was forced (single admissible vertex, or the
    /// degree-based first pick) and no forward pass ran.
    pub distribution: Option<ActionDistribution>,
    pub action: VertexId,
    /// `ln π_θ′(a_t | s_t)` under the sampling policy.
    pub log_prob: f64,
    pub dropout_seed: Option<u64>,
    pub r_val: f64,
    pub r_h: f64,
}

impl Step {
    pub fn is_forced(&self) -> bool {
        self.distribution.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub adjacency: NormalizedAdjacency,
    pub steps: Vec<Step>,
    pub order: MatchingOrder,
    pub enum_calls: Option<u64>,
    pub r_enum: f64,
    /// `R_t` for every step.
    pub step_rewards: Vec<f64>,
    /// Decayed return `Σ_t γ^t R_t`.
    pub decayed_return: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RolloutOptions {
    pub scaling: FeatureScaling,
    pub first_by_degree: bool,
}

/// Builds a matching order for `q` with the policy.
pub fn rollout(
    model: &PolicyModel,
    q: &LabeledGraph,
    stats: &GraphStats,
    mode: RolloutMode,
    rng: &mut ChaCha8Rng,
    options: RolloutOptions,
) -> Result<EpisodeTrace> {
    let adjacency = NormalizedAdjacency::new(q);
    let features = EpisodeFeatures::new(q, stats, options.scaling);
    rollout_prepared(model, q, adjacency, &features, mode, rng, options.first_by_degree)
}

fn rollout_prepared(
    model: &PolicyModel,
    q: &LabeledGraph,
    adjacency: NormalizedAdjacency,
    features: &EpisodeFeatures,
    mode: RolloutMode,
    rng: &mut ChaCha8Rng,
    first_by_degree: bool,
) -> Result<EpisodeTrace> {
    use rand::Rng;

    let n = q.vertex_count();
    if !q.is_connected() {
        return Err(Error::DisconnectedQuery);
    }
    let mut prefix: Vec<VertexId> = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut steps = Vec::with_capacity(n);
    for t in 1..=n {
        let action_space: Vec<bool> = if t == 1 {
            vec![true; n]
        } else {
            (0..n)
                .map(|u| !placed[u] && q.neighbors(u).iter().any(|&w| placed[w]))
                .collect()
        };
        let admissible: Vec<VertexId> = (0..n).filter(|&u| action_space[u]).collect();
        let step_features = features.at_step(&prefix, t)?;
        let forced = if admissible.len() == 1 {
            Some(admissible[0])
        } else if t == 1 && first_by_degree {
            Some(
                (0..n)
                    .max_by_key(|&u| (q.degree(u), std::cmp::Reverse(u)))
                    .unwrap(),
            )
        } else {
            None
        };
        let step = match forced {
            Some(action) => Step {
                t,
                features: step_features,
                action_space,
                distribution: None,
                action,
                log_prob: 0.0,
                dropout_seed: None,
                r_val: 0.0,
                r_h: 0.0,
            },
            None => {
                let (net_mode, dropout_seed) = match mode {
                    RolloutMode::Sample => {
                        let seed: u64 = rng.gen();
                        (Mode::Training { dropout_seed: seed }, Some(seed))
                    }
                    RolloutMode::Greedy => (Mode::Inference, None),
                };
                let (dist, _) = model.forward(&adjacency, &step_features, &action_space, net_mode)?;
                let action = match mode {
                    RolloutMode::Sample => dist.sample(rng),
                    RolloutMode::Greedy => dist.argmax(),
                };
                let log_prob = dist.probabilities[action].ln();
                let r_val = if action_space[dist.unmasked_argmax()] {
                    VALID_REWARD
                } else {
                    INVALID_REWARD
                };
                let r_h = dist.entropy;
                Step {
                    t,
                    features: step_features,
                    action_space,
                    distribution: Some(dist),
                    action,
                    log_prob,
                    dropout_seed,
                    r_val,
                    r_h,
                }
            }
        };
        placed[step.action] = true;
        prefix.push(step.action);
        steps.push(step);
    }
    let order = MatchingOrder::new(q, prefix, Strategy::Rl)?;
    Ok(EpisodeTrace {
        adjacency,
        steps,
        order,
        enum_calls: None,
        r_enum: 0.0,
        step_rewards: Vec::new(),
        decayed_return: 0.0,
    })
}

/// `sign(x) · ln(1 + |x|)`.
pub fn signed_log1p(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

/// Shaping weights used by [`compute_rewards`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub gamma: f64,
    pub beta_val: f64,
    pub beta_h: f64,
    pub enum_reward: EnumReward,
}

impl From<&TrainConfig> for RewardWeights {
    fn from(cfg: &TrainConfig) -> Self {
        Self {
            gamma: cfg.gamma,
            beta_val: cfg.beta_val,
            beta_h: cfg.beta_h,
            enum_reward: cfg.enum_reward,
        }
    }
}

/// Fills in the enumeration reward, per-step rewards and decayed return.
///
/// The enumeration reward rewards reduction: `f(baseline - learned)`, shared by every step.
pub fn compute_rewards(trace: &mut EpisodeTrace, learned_calls: u64, baseline_calls: u64, w: RewardWeights) {
    let r_enum = w.enum_reward.apply(baseline_calls as f64 - learned_calls as f64);
    trace.enum_calls = Some(learned_calls);
    trace.r_enum = r_enum;
    trace.step_rewards = trace
        .steps
        .iter()
        .map(|s| r_enum + w.beta_val * s.r_val + w.beta_h * s.r_h)
        .collect();
    trace.decayed_return = decayed_return(&trace.step_rewards, w.gamma);
}

/// `Σ_{t=1}^{T} γ^t R_t`.
pub fn decayed_return(step_rewards: &[f64], gamma: f64) -> f64 {
    let mut discount = 1.0;
    step_rewards
        .iter()
        .map(|r| {
            discount *= gamma;
            discount * r
        })
        .sum()
}

/// `min(ρ r, clip(ρ, 1 - ε, 1 + ε) r)`.
pub fn clipped_surrogate(ratio: f64, reward: f64, eps: f64) -> f64 {
    (ratio * reward).min(ratio.clamp(1.0 - eps, 1.0 + eps) * reward)
}

/// `∂/∂ρ` of [`clipped_surrogate`]; the unclipped branch wins ties.
fn clipped_surrogate_slope(ratio: f64, reward: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    if ratio * reward <= clipped * reward || clipped == ratio {
        reward
    } else {
        0.0
    }
}

/// Surrogate objective `J` over `traces` and its gradient with respect to
/// the current parameters. Forced steps carry no gradient and are left out.
pub fn surrogate_objective(
    model: &PolicyModel,
    traces: &[&EpisodeTrace],
    eps: f64,
    batch_reward: BatchReward,
) -> Result<(f64, Parameters, usize)> {
    let summed: f64 = traces.iter().map(|t| t.decayed_return).sum();
    let mut objective = 0.0;
    let mut grads = Parameters::zeros_like(model.parameters());
    let mut terms = 0;
    for trace in traces {
        let reward = match batch_reward {
            BatchReward::PerQuery => trace.decayed_return,
            BatchReward::Summed => summed,
        };
        for step in trace.steps.iter().filter(|s| !s.is_forced()) {
            let mode = match step.dropout_seed {
                Some(dropout_seed) => Mode::Training { dropout_seed },
                None => Mode::Inference,
            };
            let (dist, cache) = model.forward(&trace.adjacency, &step.features, &step.action_space, mode)?;
            let old = step.log_prob.exp();
            let current = dist.probabilities[step.action];
            let ratio = current / old;
            objective += clipped_surrogate(ratio, reward, eps);
            terms += 1;
            let slope = clipped_surrogate_slope(ratio, reward, eps);
            if slope == 0.0 {
                continue;
            }
            let mut upstream = vec![0.0; dist.probabilities.len()];
            upstream[step.action] = slope / old;
            let step_grads = model.backward(&trace.adjacency, &cache, &upstream)?;
            grads.add_scaled(1.0, &step_grads);
        }
    }
    Ok((objective, grads, terms))
}

/// Optimizer state carried across updates.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: Optimizer,
    step: u64,
    first: Option<Parameters>,
    second: Option<Parameters>,
}

impl OptimizerState {
    pub fn new(kind: Optimizer) -> Self {
        Self {
            kind,
            step: 0,
            first: None,
            second: None,
        }
    }

    /// Moves `params` uphill along `grads`.
    fn ascend(&mut self, params: &mut Parameters, grads: &Parameters, lr: f64) {
        match self.kind {
            Optimizer::Sgd => params.add_scaled(lr, grads),
            Optimizer::Adam => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                self.step += 1;
                let m = self.first.get_or_insert_with(|| Parameters::zeros_like(grads));
                let v = self.second.get_or_insert_with(|| Parameters::zeros_like(grads));
                let c1 = 1.0 - B1.powi(self.step as i32);
                let c2 = 1.0 - B2.powi(self.step as i32);
                let tensors = params
                    .tensors_mut()
                    .into_iter()
                    .zip(grads.tensors())
                    .zip(m.tensors_mut().into_iter().zip(v.tensors_mut()));
                for ((p, g), (m, v)) in tensors {
                    for i in 0..p.len() {
                        m[i] = B1 * m[i] + (1.0 - B1) * g[i];
                        v[i] = B2 * v[i] + (1.0 - B2) * g[i] * g[i];
                        p[i] += lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// Surrogate objective before the step.
    pub objective: f64,
    /// `-objective`.
    pub loss: f64,
    pub terms: usize,
}

/// One gradient-ascent step on the clipped surrogate of `traces`, which were
/// recorded under the sampling policy.
pub fn ppo_update(
    model: &mut PolicyModel,
    optimizer: &mut OptimizerState,
    traces: &[&EpisodeTrace],
    cfg: &TrainConfig,
) -> Result<UpdateStats> {
    let (objective, grads, terms) = surrogate_objective(model, traces, cfg.clip_eps, cfg.batch_reward)?;
    if !objective.is_finite() {
        return Err(Error::NonFinite(format!("surrogate objective is {objective}")));
    }
    if !grads.all_finite() {
        return Err(Error::NonFinite("gradient contains NaN or infinity".into()));
    }
    let mut updated = model.parameters().clone();
    optimizer.ascend(&mut updated, &grads, cfg.learning_rate);
    if !updated.all_finite() {
        return Err(Error::NonFinite("parameters diverged".into()));
    }
    *model.parameters_mut() = updated;
    Ok(UpdateStats {
        objective,
        loss: -objective,
        terms,
    })
}

/// A training query with everything that does not change across epochs.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    pub graph: LabeledGraph,
    pub candidates: CandidateSets,
    pub features: EpisodeFeatures,
    pub baseline_order: MatchingOrder,
    pub baseline_calls: u64,
    /// Set when the baseline itself ran out of time.
    pub baseline_timed_out: bool,
}

impl PreparedQuery {
    pub fn new(q: &LabeledGraph, g: &LabeledGraph, stats: &GraphStats, cfg: &TrainConfig) -> Result<Self> {
        let candidates = global_refine(q, g, &local_prune(q, g), cfg.refine_rounds);
        let baseline_order = order_ri(q)?;
        let baseline = enumerate(q, g, &candidates, &baseline_order, cfg.limits());
        Ok(Self {
            graph: q.clone(),
            candidates,
            features: EpisodeFeatures::new(q, stats, cfg.scaling),
            baseline_order,
            baseline_calls: baseline.enum_calls,
            baseline_timed_out: baseline.terminated_by == Termination::TimeLimit,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_reward: f64,
    /// Mean of learned / baseline enumeration calls.
    pub mean_enum_ratio: f64,
    pub loss: f64,
    pub skipped_queries: usize,
}

impl EpochMetrics {
    pub const CSV_HEADER: &'static str = "epoch,mean_reward,mean_enum_ratio,loss,skipped_queries";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{}",
            self.epoch, self.mean_reward, self.mean_enum_ratio, self.loss, self.skipped_queries
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PolicyModel,
    pub metrics: Vec<EpochMetrics>,
    pub elapsed: Duration,
}

/// Independent RNG stream per (epoch, query).
fn stream_seed(seed: u64, epoch: usize, query: usize) -> u64 {
    let mut x = seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(epoch as u64 + 1);
    x ^= 0xD1B5_4A32_D192_ED03u64.wrapping_mul(query as u64 + 1);
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^ (x >> 29)
}

/// Trains a policy on `queries` over data graph `g`.
///
/// With `initial = Some(model)` training continues from that model
/// (incremental mode); otherwise a model is initialized from `cfg.policy`.
pub fn train(
    initial: Option<PolicyModel>,
    g: &LabeledGraph,
    queries: &[LabeledGraph],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    if queries.is_empty() {
        return Err(Error::Training("no training queries".into()));
    }
    let mut model = match initial {
        Some(m) => m,
        None => PolicyModel::init(cfg.policy)?,
    };
    if cfg.epochs == 0 {
        return Ok(TrainOutcome {
            model,
            metrics: Vec::new(),
            elapsed: start.elapsed(),
        });
    }
    let stats = compute_stats(g);
    let prepared = queries
        .par_iter()
        .map(|q| PreparedQuery::new(q, g, &stats, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut optimizer = OptimizerState::new(cfg.optimizer);
    let mut metrics = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let m = train_epoch(&mut model, &mut optimizer, g, &prepared, cfg, epoch)?;
        metrics.push(m);
    }
    Ok(TrainOutcome {
        model,
        metrics,
        elapsed: start.elapsed(),
    })
}

/// Rolls out every query under a frozen copy of `model`, rewards the orders
/// and applies the surrogate updates.
pub fn train_epoch(
    model: &mut PolicyModel,
    optimizer: &mut OptimizerState,
    g: &LabeledGraph,
    prepared: &[PreparedQuery],
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<EpochMetrics> {
    let sampling = model.clone();
    let weights = RewardWeights::from(cfg);
    let limits = cfg.limits();
    let episodes: Vec<Option<(EpisodeTrace, f64)>> = prepared
        .par_iter()
        .enumerate()
        .map(|(i, pq)| {
            if pq.baseline_timed_out {
                return Ok(None);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, epoch, i));
            let q = &pq.graph;
            let mut trace = rollout_prepared(
                &sampling,
                q,
                NormalizedAdjacency::new(q),
                &pq.features,
                RolloutMode::Sample,
                &mut rng,
                cfg.first_by_degree,
            )?;
            let learned = enumerate(q, g, &pq.candidates, &trace.order, limits);
            if learned.terminated_by == Termination::TimeLimit {
                return Ok(None);
            }
            compute_rewards(&mut trace, learned.enum_calls, pq.baseline_calls, weights);
            let ratio = learned.enum_calls as f64 / pq.baseline_calls as f64;
            Ok(Some((trace, ratio)))
        })
        .collect::<Result<Vec<_>>>()?;

    let skipped_queries = episodes.iter().filter(|e| e.is_none()).count();
    let kept: Vec<&(EpisodeTrace, f64)> = episodes.iter().flatten().collect();
    if kept.is_empty() {
        return Ok(EpochMetrics {
            epoch,
            mean_reward: 0.0,
            mean_enum_ratio: 0.0,
            loss: 0.0,
            skipped_queries,
        });
    }
    let mean_reward = kept.iter().map(|(t, _)| t.decayed_return).sum::<f64>() / kept.len() as f64;
    let mean_enum_ratio = kept.iter().map(|(_, r)| r).sum::<f64>() / kept.len() as f64;

    let traces: Vec<&EpisodeTrace> = kept.iter().map(|(t, _)| t).collect();
    let batch = cfg.batch_size.unwrap_or(traces.len());
    let mut loss = 0.0;
    for chunk in traces.chunks(batch) {
        for pass in 0..cfg.updates_per_batch {
            let stats = ppo_update(model, optimizer, chunk, cfg)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            if pass == 0 {
                loss += stats.loss;
            }
        }
    }
    Ok(EpochMetrics {
        epoch,
        mean_reward,
        mean_enum_ratio,
        loss,
        skipped_queries,
    })
}

/// Deterministic learned order: greedy rollout without dropout.
pub fn greedy_order(
    model: &PolicyModel,
    q: &LabeledGraph,
    stats: &GraphStats,
    options: RolloutOptions,
) -> Result<MatchingOrder> {
    // Greedy rollouts never draw from the RNG.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    Ok(rollout(model, q, stats, RolloutMode::Greedy, &mut rng, options)?.order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_closed_forms() {
        assert_eq!(signed_log1p(0.0), 0.0);
        assert!((signed_log1p(90.0) - 91f64.ln()).abs() < 1e-12);
        assert!((signed_log1p(90.0) - 4.5109).abs() < 1e-4);
        assert_eq!(signed_log1p(-90.0), -signed_log1p(90.0));
        assert!((decayed_return(&[1.0, 1.0], 0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn clipping_closed_forms() {
        assert_eq!(clipped_surrogate(1.0, 3.5, 0.2), 3.5);
        assert!((clipped_surrogate(2.0, 1.0, 0.2) - 1.2).abs() < 1e-15);
        assert!((clipped_surrogate(0.5, -1.0, 0.2) + 0.8).abs() < 1e-15);
        assert_eq!(clipped_surrogate_slope(2.0, 1.0, 0.2), 0.0);
        assert_eq!(clipped_surrogate_slope(0.5, 1.0, 0.2), 1.0);
        assert_eq!(clipped_surrogate_slope(0.5, -1.0, 0.2), 0.0);
        assert_eq!(clipped_surrogate_slope(2.0, -1.0, 0.2), -1.0);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for cfg in [
            TrainConfig {
                gamma: 1.0,
                ..Default::default()
            },
            TrainConfig {
                clip_eps: 0.0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn stream_seeds_differ() {
        assert_ne!(stream_seed(1, 1, 0), stream_seed(1, 1, 1));
        assert_ne!(stream_seed(1, 1, 0), stream_seed(1, 2, 0));
        assert_eq!(stream_seed(3, 4, 5), stream_seed(3, 4, 5));
    }
}
