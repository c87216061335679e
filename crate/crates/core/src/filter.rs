//! Candidate generation: neighborhood-profile pruning followed by
//! bipartite-matching refinement.

use crate::graph::{Label, LabeledGraph, VertexId};

/// Default number of refinement sweeps.
pub const DEFAULT_REFINE_ROUNDS: usize = 3;

/// Per-query-vertex sorted candidate lists `C(u)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSets {
    sets: Vec<Vec<VertexId>>,
}

impl CandidateSets {
    pub fn new(mut sets: Vec<Vec<VertexId>>) -> Self {
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        Self { sets }
    }

    pub fn query_vertex_count(&self) -> usize {
        self.sets.len()
    }

    pub fn get(&self, u: VertexId) -> &[VertexId] {
        &self.sets[u]
    }

    pub fn len_of(&self, u: VertexId) -> usize {
        self.sets[u].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }

    pub fn contains(&self, u: VertexId, v: VertexId) -> bool {
        self.sets[u].binary_search(&v).is_ok()
    }

    /// True when some query vertex has no candidate, i.e. there is no match.
    pub fn has_empty(&self) -> bool {
        self.sets.iter().any(Vec::is_empty)
    }

    pub fn is_subset_of(&self, other: &CandidateSets) -> bool {
        self.sets.len() == other.sets.len()
            && self
                .sets
                .iter()
                .enumerate()
                .all(|(u, s)| s.iter().all(|&v| other.contains(u, v)))
    }

    /// Dense membership table `[u][v]`.
    pub(crate) fn membership(&self, data_vertex_count: usize) -> Vec<Vec<bool>> {
        self.sets
            .iter()
            .map(|s| {
                let mut row = vec![false; data_vertex_count];
                for &v in s {
                    row[v] = true;
                }
                row
            })
            .collect()
    }
}

/// Sorted multiset of the labels of a vertex and its neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile(Vec<Label>);

impl Profile {
    pub fn of(g: &LabeledGraph, v: VertexId) -> Self {
        let mut labels = Vec::with_capacity(g.degree(v) + 1);
        labels.push(g.label(v));
        labels.extend(g.neighbors(v).iter().map(|&w| g.label(w)));
        labels.sort_unstable();
        Profile(labels)
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    /// Multiset inclusion by merging the two sorted sequences.
    pub fn is_contained_in(&self, other: &Profile) -> bool {
        let mut theirs = other.0.iter();
        'outer: for l in &self.0 {
            for m in theirs.by_ref() {
                match m.cmp(l) {
                    std::cmp::Ordering::Less => continue,
                    std::cmp::Ordering::Equal => continue 'outer,
                    std::cmp::Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }
}

/// `C(u) = { v : profile(u) ⊆ profile(v) }`.
pub fn local_prune(q: &LabeledGraph, g: &LabeledGraph) -> CandidateSets {
    let query_profiles: Vec<Profile> = (0..q.vertex_count()).map(|u| Profile::of(q, u)).collect();
    let mut sets = vec![Vec::new(); q.vertex_count()];
    for v in 0..g.vertex_count() {
        let mut profile_v: Option<Profile> = None;
        for (u, profile_u) in query_profiles.iter().enumerate() {
            if q.label(u) != g.label(v) || q.degree(u) > g.degree(v) {
                continue;
            }
            let pv = profile_v.get_or_insert_with(|| Profile::of(g, v));
            if profile_u.is_contained_in(pv) {
                sets[u].push(v);
            }
        }
    }
    CandidateSets::new(sets)
}

/// True when every neighbor of `u` can be matched to a distinct neighbor of
/// `v` that is one of its candidates.
fn has_semi_perfect_matching(
    q: &LabeledGraph,
    g: &LabeledGraph,
    member: &[Vec<bool>],
    u: VertexId,
    v: VertexId,
) -> bool {
    let query_side = q.neighbors(u);
    let data_side = g.neighbors(v);
    if query_side.len() > data_side.len() {
        return false;
    }
    let mut edges = Vec::new();
    for (i, &qu) in query_side.iter().enumerate() {
        for (j, &dv) in data_side.iter().enumerate() {
            if member[qu][dv] {
                edges.push((i, j));
            }
        }
    }
    max_bipartite_matching(query_side.len(), data_side.len(), &edges) == query_side.len()
}

/// Removes `v` from `C(u)` when no semi-perfect matching exists between
/// `N(u)` and `N(v)`.
///
/// Each sweep tests every pair against the previous sweep's sets and applies
/// removals at the end of the sweep. Stops at a fixpoint or after `rounds`
/// sweeps.
pub fn global_refine(q: &LabeledGraph, g: &LabeledGraph, c: &CandidateSets, rounds: usize) -> CandidateSets {
    let mut current = c.clone();
    for _ in 0..rounds {
        let member = current.membership(g.vertex_count());
        let next: Vec<Vec<VertexId>> = (0..q.vertex_count())
            .map(|u| {
                current
                    .get(u)
                    .iter()
                    .copied()
                    .filter(|&v| has_semi_perfect_matching(q, g, &member, u, v))
                    .collect()
            })
            .collect();
        let next = CandidateSets { sets: next };
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Refinement variant that applies each removal immediately, visiting query
/// vertices in `sweep_order`. Converges to the same fixpoint as
/// [`global_refine`] when run to completion.
pub fn global_refine_in_place(
    q: &LabeledGraph,
    g: &LabeledGraph,
    c: &CandidateSets,
    rounds: usize,
    sweep_order: &[VertexId],
) -> CandidateSets {
    let mut current = c.clone();
    let mut member = current.membership(g.vertex_count());
    for _ in 0..rounds {
        let mut changed = false;
        for &u in sweep_order {
            let mut kept = Vec::with_capacity(current.sets[u].len());
            for &v in &current.sets[u] {
                if has_semi_perfect_matching(q, g, &member, u, v) {
                    kept.push(v);
                } else {
                    member[u][v] = false;
                    changed = true;
                }
            }
            current.sets[u] = kept;
        }
        if !changed {
            break;
        }
    }
    current
}

/// Maximum-cardinality bipartite matching size by augmenting paths.
///
/// `edges` are `(left, right)` index pairs.
pub fn max_bipartite_matching(left_size: usize, right_size: usize, edges: &[(usize, usize)]) -> usize {
    let mut adjacency = vec![Vec::new(); left_size];
    for &(l, r) in edges {
        debug_assert!(l < left_size && r < right_size);
        adjacency[l].push(r);
    }
    let mut match_right: Vec<Option<usize>> = vec![None; right_size];
    let mut size = 0;
    for l in 0..left_size {
        let mut visited = vec![false; right_size];
        if augment(l, &adjacency, &mut match_right, &mut visited) {
            size += 1;
        }
    }
    size
}

fn augment(
    l: usize,
    adjacency: &[Vec<usize>],
    match_right: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for &r in &adjacency[l] {
        if visited[r] {
            continue;
        }
        visited[r] = true;
        let free = match match_right[r] {
            None => true,
            Some(other) => augment(other, adjacency, match_right, visited),
        };
        if free {
            match_right[r] = Some(l);
            return true;
        }
    }
    false
}
