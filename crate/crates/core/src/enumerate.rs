//! Depth-first backtracking along a fixed matching order.

use std::fmt;
use std::time::{Duration, Instant};

use crate::filter::CandidateSets;
use crate::graph::{LabeledGraph, VertexId};
use crate::order::MatchingOrder;

/// Default number of matches after which enumeration stops.
pub const DEFAULT_MATCH_LIMIT: u64 = 100_000;
/// Default wall-clock budget per query, in seconds.
pub const DEFAULT_TIME_LIMIT_SECS: u64 = 500;

/// The clock is read once every `TIME_CHECK_INTERVAL` recursive calls.
const TIME_CHECK_INTERVAL: u64 = 1 << 10;

/// Total injective mapping indexed by query vertex.
pub type MatchMapping = Vec<VertexId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Exhausted,
    MatchLimit,
    TimeLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Exhausted => "exhausted",
            Termination::MatchLimit => "match_limit",
            Termination::TimeLimit => "time_limit",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Limits {
    pub match_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Keep every emitted mapping in [`EnumResult::matches`].
    pub materialize: bool,
}

impl Limits {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn with_match_limit(mut self, limit: u64) -> Self {
        self.match_limit = Some(limit);
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn materialized(mut self) -> Self {
        self.materialize = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumResult {
    pub match_count: u64,
    /// Populated only when [`Limits::materialize`] is set.
    pub matches: Vec<MatchMapping>,
    /// Number of invocations of the recursive procedure, including the root.
    pub enum_calls: u64,
    pub elapsed: Duration,
    pub terminated_by: Termination,
}

/// Runs the backtracking search for `q` in `g` along `order`.
///
/// At depth `i` the query vertex `order[i]` is extended with every candidate
/// adjacent to the images of all its backward neighbors and not already used.
pub fn enumerate(
    q: &LabeledGraph,
    g: &LabeledGraph,
    c: &CandidateSets,
    order: &MatchingOrder,
    limits: Limits,
) -> EnumResult {
    debug_assert_eq!(order.len(), q.vertex_count());
    debug_assert_eq!(c.query_vertex_count(), q.vertex_count());
    let mut search = Search::new(q, g, c, order, limits);
    search.recurse(0);
    EnumResult {
        match_count: search.match_count,
        matches: search.matches,
        enum_calls: search.calls,
        elapsed: search.start.elapsed(),
        terminated_by: search.stopped.unwrap_or(Termination::Exhausted),
    }
}

struct Search<'a> {
    g: &'a LabeledGraph,
    c: &'a CandidateSets,
    order: &'a [VertexId],
    backward: Vec<Vec<VertexId>>,
    member: Vec<Vec<bool>>,
    mapping: Vec<VertexId>,
    used: Vec<bool>,
    buffers: Vec<Vec<VertexId>>,
    limits: Limits,
    start: Instant,
    calls: u64,
    match_count: u64,
    matches: Vec<MatchMapping>,
    stopped: Option<Termination>,
}

impl<'a> Search<'a> {
    fn new(
        q: &'a LabeledGraph,
        g: &'a LabeledGraph,
        c: &'a CandidateSets,
        order: &'a MatchingOrder,
        limits: Limits,
    ) -> Self {
        let n = q.vertex_count();
        Self {
            g,
            c,
            order: order.vertices(),
            backward: order.backward_neighbors(q),
            member: c.membership(g.vertex_count()),
            mapping: vec![usize::MAX; n],
            used: vec![false; g.vertex_count()],
            buffers: vec![Vec::new(); n],
            limits,
            start: Instant::now(),
            calls: 0,
            match_count: 0,
            matches: Vec::new(),
            stopped: None,
        }
    }

    fn recurse(&mut self, depth: usize) {
        self.calls += 1;
        if self.calls.is_multiple_of(TIME_CHECK_INTERVAL) {
            if let Some(limit) = self.limits.time_limit {
                if self.start.elapsed() >= limit {
                    self.stopped = Some(Termination::TimeLimit);
                    return;
                }
            }
        }
        if depth == self.order.len() {
            self.match_count += 1;
            if self.limits.materialize {
                self.matches.push(self.mapping.clone());
            }
            if self.limits.match_limit.is_some_and(|l| self.match_count >= l) {
                self.stopped = Some(Termination::MatchLimit);
            }
            return;
        }
        let u = self.order[depth];
        let mut local = std::mem::take(&mut self.buffers[depth]);
        self.local_candidates(depth, u, &mut local);
        for &v in &local {
            if self.used[v] {
                continue;
            }
            self.mapping[u] = v;
            self.used[v] = true;
            self.recurse(depth + 1);
            self.used[v] = false;
            self.mapping[u] = usize::MAX;
            if self.stopped.is_some() {
                break;
            }
        }
        self.buffers[depth] = local;
    }

    fn local_candidates(&self, depth: usize, u: VertexId, out: &mut Vec<VertexId>) {
        out.clear();
        let backward = &self.backward[depth];
        if backward.is_empty() {
            out.extend_from_slice(self.c.get(u));
            return;
        }
        // Scan the sparsest neighborhood among the mapped backward neighbors.
        let pivot = *backward
            .iter()
            .min_by_key(|&&b| self.g.degree(self.mapping[b]))
            .unwrap();
        let member = &self.member[u];
        for &v in self.g.neighbors(self.mapping[pivot]) {
            if member[v]
                && backward
                    .iter()
                    .all(|&b| b == pivot || self.g.has_edge(self.mapping[b], v))
            {
                out.push(v);
            }
        }
    }
}

/// Reference local-candidate computation: candidates of `u` adjacent to the
/// images of every mapped neighbor of `u`. `mapping[w]` is `None` for
/// unmapped query vertices.
pub fn compute_local_candidates(
    u: VertexId,
    mapping: &[Option<VertexId>],
    c: &CandidateSets,
    q: &LabeledGraph,
    g: &LabeledGraph,
) -> Vec<VertexId> {
    c.get(u)
        .iter()
        .copied()
        .filter(|&v| {
            q.neighbors(u)
                .iter()
                .filter_map(|&w| mapping[w])
                .all(|image| g.has_edge(image, v))
        })
        .collect()
}

/// Checks the subgraph-isomorphism conditions for a total mapping.
pub fn is_valid_match(q: &LabeledGraph, g: &LabeledGraph, mapping: &[VertexId]) -> bool {
    if mapping.len() != q.vertex_count() {
        return false;
    }
    let mut images: Vec<VertexId> = mapping.to_vec();
    images.sort_unstable();
    images.dedup();
    images.len() == mapping.len()
        && mapping
            .iter()
            .enumerate()
            .all(|(u, &v)| v < g.vertex_count() && q.label(u) == g.label(v))
        && q.edges().all(|(a, b)| g.has_edge(mapping[a], mapping[b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::Strategy;

    fn complete(n: usize) -> LabeledGraph {
        let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        LabeledGraph::from_edges(vec![0; n], &edges).unwrap()
    }

    fn all_candidates(q: &LabeledGraph, g: &LabeledGraph) -> CandidateSets {
        CandidateSets::new(vec![(0..g.vertex_count()).collect(); q.vertex_count()])
    }

    #[test]
    fn single_vertex_counts_root_and_leaves() {
        let q = LabeledGraph::from_edges(vec![0], &[]).unwrap();
        let g = LabeledGraph::from_edges(vec![0, 0, 0], &[]).unwrap();
        let c = all_candidates(&q, &g);
        let order = MatchingOrder::new(&q, vec![0], Strategy::Custom).unwrap();
        let r = enumerate(&q, &g, &c, &order, Limits::unlimited());
        assert_eq!(r.match_count, 3);
        assert_eq!(r.enum_calls, 4);
        assert_eq!(r.terminated_by, Termination::Exhausted);
    }

    #[test]
    fn triangle_in_k4() {
        let q = complete(3);
        let g = complete(4);
        let c = all_candidates(&q, &g);
        let order = MatchingOrder::new(&q, vec![0, 1, 2], Strategy::Custom).unwrap();
        let r = enumerate(&q, &g, &c, &order, Limits::unlimited().materialized());
        assert_eq!(r.match_count, 24);
        assert!(r.matches.iter().all(|m| is_valid_match(&q, &g, m)));

        let limited = enumerate(&q, &g, &c, &order, Limits::unlimited().with_match_limit(5));
        assert_eq!(limited.match_count, 5);
        assert_eq!(limited.terminated_by, Termination::MatchLimit);
        assert!(limited.matches.is_empty());
    }

    #[test]
    fn zero_time_limit_stops() {
        let q = complete(4);
        let g = complete(12);
        let c = all_candidates(&q, &g);
        let order = MatchingOrder::new(&q, vec![0, 1, 2, 3], Strategy::Custom).unwrap();
        let r = enumerate(
            &q,
            &g,
            &c,
            &order,
            Limits::unlimited().with_time_limit(Duration::ZERO),
        );
        assert_eq!(r.terminated_by, Termination::TimeLimit);
        assert!(r.match_count < 12 * 11 * 10 * 9);
    }

    #[test]
    fn local_candidates_by_definition() {
        let g = LabeledGraph::from_edges(vec![0; 5], &[(0, 1), (0, 2), (1, 2), (2, 3), (1, 4)]).unwrap();
        let q = complete(3);
        let c = all_candidates(&q, &g);
        let none = vec![None; 3];
        assert_eq!(
            compute_local_candidates(0, &none, &c, &q, &g),
            vec![0, 1, 2, 3, 4]
        );
        let one = vec![None, Some(2), None];
        assert_eq!(
            compute_local_candidates(0, &one, &c, &q, &g),
            g.neighbors(2).to_vec()
        );
        let two = vec![None, Some(1), Some(2)];
        assert_eq!(compute_local_candidates(0, &two, &c, &q, &g), vec![0]);
    }

    #[test]
    fn empty_candidates_yield_no_matches() {
        let q = complete(2);
        let g = complete(3);
        let c = CandidateSets::new(vec![vec![0, 1], vec![]]);
        let order = MatchingOrder::new(&q, vec![0, 1], Strategy::Custom).unwrap();
        let r = enumerate(&q, &g, &c, &order, Limits::unlimited());
        assert_eq!(r.match_count, 0);
        assert_eq!(r.enum_calls, 3);
    }
}
