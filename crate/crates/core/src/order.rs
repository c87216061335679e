//! Matching orders and the deterministic heuristic orderings.
//!
//! Every heuristic grows the order one vertex at a time among the unordered
//! neighbors of the current prefix, so the result is connected whenever the
//! query is. All remaining ties go to the lowest vertex id.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filter::CandidateSets;
use crate::graph::{GraphStats, LabeledGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Structure-only RI ordering; the reward baseline.
    Ri,
    /// QuickSI infrequent-edge-first ordering.
    Qsi,
    /// GraphQL minimum-candidate-size ordering.
    Gql,
    /// Infrequent-label-first ordering.
    Label,
    /// Learned policy.
    Rl,
    /// Externally supplied order (tests, spectrum analysis).
    Custom,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Ri => "ri",
            Strategy::Qsi => "qsi",
            Strategy::Gql => "gql",
            Strategy::Label => "label",
            Strategy::Rl => "rl",
            Strategy::Custom => "custom",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ri" => Strategy::Ri,
            "qsi" => Strategy::Qsi,
            "gql" => Strategy::Gql,
            "label" => Strategy::Label,
            "rl" => Strategy::Rl,
            "custom" => Strategy::Custom,
            other => return Err(Error::Config(format!("unknown ordering strategy `{other}`"))),
        })
    }
}

/// A permutation of the query vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatchingOrder {
    vertices: Vec<VertexId>,
    strategy: Strategy,
}

impl MatchingOrder {
    /// Validates that `vertices` is a permutation of `q`'s vertices in which
    /// every vertex after the first has an earlier neighbor (when `q` is
    /// connected).
    pub fn new(q: &LabeledGraph, vertices: Vec<VertexId>, strategy: Strategy) -> Result<Self> {
        check_permutation(q, &vertices)?;
        if q.is_connected() && !is_connected_order(q, &vertices) {
            return Err(Error::InvalidOrder(format!("{vertices:?} is not connected")));
        }
        Ok(Self { vertices, strategy })
    }

    /// Accepts any permutation; only spectrum analysis needs disconnected orders.
    pub(crate) fn any_permutation(
        q: &LabeledGraph,
        vertices: Vec<VertexId>,
        strategy: Strategy,
    ) -> Result<Self> {
        check_permutation(q, &vertices)?;
        Ok(Self { vertices, strategy })
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// For each position `i`, the neighbors of `vertices[i]` placed before it.
    pub fn backward_neighbors(&self, q: &LabeledGraph) -> Vec<Vec<VertexId>> {
        let mut position = vec![usize::MAX; q.vertex_count()];
        for (i, &u) in self.vertices.iter().enumerate() {
            position[u] = i;
        }
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                q.neighbors(u)
                    .iter()
                    .copied()
                    .filter(|&w| position[w] < i)
                    .collect()
            })
            .collect()
    }

    pub fn to_label(&self) -> String {
        self.vertices
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for MatchingOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_label())
    }
}

fn check_permutation(q: &LabeledGraph, vertices: &[VertexId]) -> Result<()> {
    let n = q.vertex_count();
    if vertices.len() != n {
        return Err(Error::InvalidOrder(format!(
            "order has {} vertices, query has {n}",
            vertices.len()
        )));
    }
    let mut seen = vec![false; n];
    for &v in vertices {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::InvalidOrder(format!("{vertices:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Every vertex after the first has a neighbor among its predecessors.
pub fn is_connected_order(q: &LabeledGraph, vertices: &[VertexId]) -> bool {
    let mut placed = vec![false; q.vertex_count()];
    for (i, &u) in vertices.iter().enumerate() {
        if i > 0 && !q.neighbors(u).iter().any(|&w| placed[w]) {
            return false;
        }
        placed[u] = true;
    }
    true
}

fn require_connected(q: &LabeledGraph) -> Result<()> {
    if q.is_connected() {
        Ok(())
    } else {
        Err(Error::DisconnectedQuery)
    }
}

/// Grows an order from `first`, always appending the unordered vertex adjacent
/// to the prefix with the smallest `key` (then the smallest id).
fn grow_by_min_key<K: Ord>(
    q: &LabeledGraph,
    first: VertexId,
    strategy: Strategy,
    mut key: impl FnMut(VertexId, &[bool]) -> K,
) -> MatchingOrder {
    let n = q.vertex_count();
    let mut placed = vec![false; n];
    let mut adjacent = vec![false; n];
    let mut vertices = Vec::with_capacity(n);
    let mut next = first;
    loop {
        placed[next] = true;
        vertices.push(next);
        for &w in q.neighbors(next) {
            adjacent[w] = true;
        }
        if vertices.len() == n {
            break;
        }
        next = (0..n)
            .filter(|&u| !placed[u] && adjacent[u])
            .min_by_key(|&u| (key(u, &placed), u))
            .expect("connected query always has a frontier vertex");
    }
    MatchingOrder { vertices, strategy }
}

/// RI ordering: start from the maximum-degree vertex, then repeatedly take the
/// vertex with the most ordered neighbors, breaking ties by `|u_neig|` and
/// then `|u_unv|`.
pub fn order_ri(q: &LabeledGraph) -> Result<MatchingOrder> {
    require_connected(q)?;
    let n = q.vertex_count();
    if n == 0 {
        return Ok(MatchingOrder {
            vertices: Vec::new(),
            strategy: Strategy::Ri,
        });
    }
    let first = (0..n).min_by_key(|&u| (Reverse(q.degree(u)), u)).unwrap();
    Ok(grow_by_min_key(q, first, Strategy::Ri, |u, placed| {
        let ri = ri_criteria(q, u, placed);
        (Reverse(ri.0), Reverse(ri.1), Reverse(ri.2))
    }))
}

/// `(|N(u) ∩ φ|, |u_neig|, |u_unv|)` for an unordered vertex `u`.
pub(crate) fn ri_criteria(q: &LabeledGraph, u: VertexId, placed: &[bool]) -> (usize, usize, usize) {
    let ordered_neighbors = q.neighbors(u).iter().filter(|&&w| placed[w]).count();
    let neig = (0..q.vertex_count())
        .filter(|&prev| placed[prev])
        .filter(|&prev| {
            q.neighbors(prev)
                .iter()
                .any(|&out| !placed[out] && out != u && q.has_edge(u, out))
        })
        .count();
    let unv = q
        .neighbors(u)
        .iter()
        .filter(|&&w| !placed[w] && !q.neighbors(w).iter().any(|&x| placed[x]))
        .count();
    (ordered_neighbors, neig, unv)
}

/// QuickSI infrequent-edge-first ordering, with each query edge weighted by the
/// number of data edges with the same endpoint labels.
pub fn order_qsi(q: &LabeledGraph, stats: &GraphStats) -> Result<MatchingOrder> {
    order_by_edge_weight(q, |a, b| stats.edge_label_pair_frequency(q.label(a), q.label(b)))
}

/// Infrequent-edge-first growth under an arbitrary edge weight.
///
/// Starts from the minimum-weight edge (ties by endpoint ids), placing its
/// lower-degree endpoint first. Then appends the unordered vertex whose
/// lightest edge into the prefix is minimal, ties by the sum of its edge
/// weights into the prefix.
pub fn order_by_edge_weight(
    q: &LabeledGraph,
    weight: impl Fn(VertexId, VertexId) -> usize,
) -> Result<MatchingOrder> {
    require_connected(q)?;
    let n = q.vertex_count();
    if n <= 1 {
        return Ok(MatchingOrder {
            vertices: (0..n).collect(),
            strategy: Strategy::Qsi,
        });
    }
    let (a, b) = q
        .edges()
        .min_by_key(|&(a, b)| (weight(a, b), a, b))
        .expect("connected query with two or more vertices has an edge");
    let (first, second) = if (q.degree(b), b) < (q.degree(a), a) {
        (b, a)
    } else {
        (a, b)
    };
    let mut vertices = vec![first, second];
    let mut placed = vec![false; n];
    placed[first] = true;
    placed[second] = true;
    while vertices.len() < n {
        let next = (0..n)
            .filter(|&u| !placed[u])
            .filter_map(|u| {
                let into_prefix: Vec<usize> = q
                    .neighbors(u)
                    .iter()
                    .filter(|&&w| placed[w])
                    .map(|&w| weight(u, w))
                    .collect();
                let lightest = *into_prefix.iter().min()?;
                Some((lightest, into_prefix.iter().sum::<usize>(), u))
            })
            .min()
            .expect("connected query always has a frontier vertex")
            .2;
        placed[next] = true;
        vertices.push(next);
    }
    Ok(MatchingOrder {
        vertices,
        strategy: Strategy::Qsi,
    })
}

/// GraphQL ordering: smallest candidate set first, then the adjacent vertex
/// with the smallest candidate set.
pub fn order_gql(q: &LabeledGraph, c: &CandidateSets) -> Result<MatchingOrder> {
    require_connected(q)?;
    let n = q.vertex_count();
    if n == 0 {
        return Ok(MatchingOrder {
            vertices: Vec::new(),
            strategy: Strategy::Gql,
        });
    }
    let first = (0..n).min_by_key(|&u| (c.len_of(u), u)).unwrap();
    Ok(grow_by_min_key(q, first, Strategy::Gql, |u, _| c.len_of(u)))
}

/// Rarest data-graph label first, ties by larger degree.
pub fn order_infrequent_label(q: &LabeledGraph, stats: &GraphStats) -> Result<MatchingOrder> {
    require_connected(q)?;
    let n = q.vertex_count();
    if n == 0 {
        return Ok(MatchingOrder {
            vertices: Vec::new(),
            strategy: Strategy::Label,
        });
    }
    let key = |u: VertexId| (stats.label_frequency(q.label(u)), Reverse(q.degree(u)));
    let first = (0..n).min_by_key(|&u| (key(u), u)).unwrap();
    Ok(grow_by_min_key(q, first, Strategy::Label, |u, _| key(u)))
}
