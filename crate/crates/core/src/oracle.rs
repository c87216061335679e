//! Brute-force reference matcher and exhaustive order-spectrum analysis.

use std::collections::BTreeSet;
use std::str::FromStr;

use rayon::prelude::*;

use crate::enumerate::{enumerate, Limits, MatchMapping};
use crate::error::{Error, Result};
use crate::filter::CandidateSets;
use crate::graph::{LabeledGraph, VertexId};
use crate::order::{MatchingOrder, Strategy};

pub const ORACLE_MAX_QUERY_VERTICES: usize = 10;
pub const ORACLE_MAX_DATA_VERTICES: usize = 64;
pub const SPECTRUM_MAX_PERMUTATION_VERTICES: usize = 8;
pub const SPECTRUM_MAX_CONNECTED_VERTICES: usize = 10;

/// Every injective, label- and edge-preserving mapping of `q` into `g`,
/// found by trying all data vertices for each query vertex in id order.
pub fn oracle_match(q: &LabeledGraph, g: &LabeledGraph) -> Result<BTreeSet<MatchMapping>> {
    if q.vertex_count() > ORACLE_MAX_QUERY_VERTICES || g.vertex_count() > ORACLE_MAX_DATA_VERTICES {
        return Err(Error::Guard(format!(
            "oracle supports at most {ORACLE_MAX_QUERY_VERTICES} query and {ORACLE_MAX_DATA_VERTICES} data vertices, got {} and {}",
            q.vertex_count(),
            g.vertex_count()
        )));
    }
    let mut found = BTreeSet::new();
    let mut mapping = Vec::with_capacity(q.vertex_count());
    let mut used = vec![false; g.vertex_count()];
    extend(q, g, &mut mapping, &mut used, &mut found);
    Ok(found)
}

fn extend(
    q: &LabeledGraph,
    g: &LabeledGraph,
    mapping: &mut Vec<VertexId>,
    used: &mut [bool],
    found: &mut BTreeSet<MatchMapping>,
) {
    let u = mapping.len();
    if u == q.vertex_count() {
        found.insert(mapping.clone());
        return;
    }
    for v in 0..g.vertex_count() {
        if used[v] || g.label(v) != q.label(u) {
            continue;
        }
        let consistent = q
            .neighbors(u)
            .iter()
            .filter(|&&w| w < u)
            .all(|&w| g.has_edge(mapping[w], v));
        if !consistent {
            continue;
        }
        used[v] = true;
        mapping.push(v);
        extend(q, g, mapping, used, found);
        mapping.pop();
        used[v] = false;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderFamily {
    /// Orders in which every vertex after the first has an earlier neighbor.
    AllConnected,
    /// Every permutation of the query vertices.
    AllPermutations,
}

impl FromStr for OrderFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "connected" | "all_connected" => Ok(OrderFamily::AllConnected),
            "permutations" | "all_permutations" => Ok(OrderFamily::AllPermutations),
            other => Err(Error::Config(format!("unknown order family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectrumEntry {
    pub order: Vec<VertexId>,
    pub enum_calls: u64,
    pub match_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectrumReport {
    /// One entry per evaluated order, in lexicographic order.
    pub entries: Vec<SpectrumEntry>,
    pub min_enum_calls: u64,
    /// Orders attaining the minimum, lexicographically sorted.
    pub optimal: Vec<Vec<VertexId>>,
}

impl SpectrumReport {
    pub fn orders_evaluated(&self) -> usize {
        self.entries.len()
    }

    pub fn enum_calls_of(&self, order: &[VertexId]) -> Option<u64> {
        self.entries
            .iter()
            .find(|e| e.order == order)
            .map(|e| e.enum_calls)
    }
}

/// Enumerates `q` under every order of `family` with shared candidates and no
/// limits, recording the enumeration calls of each.
pub fn spectrum(
    q: &LabeledGraph,
    g: &LabeledGraph,
    c: &CandidateSets,
    family: OrderFamily,
) -> Result<SpectrumReport> {
    let n = q.vertex_count();
    let orders = match family {
        OrderFamily::AllPermutations => {
            if n > SPECTRUM_MAX_PERMUTATION_VERTICES {
                return Err(Error::Guard(format!(
                    "all-permutation spectrum supports at most {SPECTRUM_MAX_PERMUTATION_VERTICES} query vertices, got {n}"
                )));
            }
            all_permutations(n)
        }
        OrderFamily::AllConnected => {
            if n > SPECTRUM_MAX_CONNECTED_VERTICES {
                return Err(Error::Guard(format!(
                    "connected-order spectrum supports at most {SPECTRUM_MAX_CONNECTED_VERTICES} query vertices, got {n}"
                )));
            }
            connected_orders(q)
        }
    };
    let entries = orders
        .into_par_iter()
        .map(|vertices| {
            let order = MatchingOrder::any_permutation(q, vertices, Strategy::Custom)?;
            let result = enumerate(q, g, c, &order, Limits::unlimited());
            Ok(SpectrumEntry {
                order: order.vertices().to_vec(),
                enum_calls: result.enum_calls,
                match_count: result.match_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min_enum_calls = entries.iter().map(|e| e.enum_calls).min().unwrap_or(0);
    let optimal = entries
        .iter()
        .filter(|e| e.enum_calls == min_enum_calls)
        .map(|e| e.order.clone())
        .collect();
    Ok(SpectrumReport {
        entries,
        min_enum_calls,
        optimal,
    })
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n];
    permute(
        n,
        &mut current,
        &mut used,
        &mut |p| out.push(p.to_vec()),
        &|_, _| true,
    );
    out
}

/// All connected orders of `q` in lexicographic order.
pub fn connected_orders(q: &LabeledGraph) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(q.vertex_count());
    let mut used = vec![false; q.vertex_count()];
    permute(
        q.vertex_count(),
        &mut current,
        &mut used,
        &mut |p| out.push(p.to_vec()),
        &|prefix: &[VertexId], u: VertexId| prefix.is_empty() || prefix.iter().any(|&w| q.has_edge(w, u)),
    );
    out
}

fn permute(
    n: usize,
    current: &mut Vec<VertexId>,
    used: &mut [bool],
    emit: &mut impl FnMut(&[VertexId]),
    admissible: &impl Fn(&[VertexId], VertexId) -> bool,
) {
    if current.len() == n {
        emit(current);
        return;
    }
    for u in 0..n {
        if used[u] || !admissible(current, u) {
            continue;
        }
        used[u] = true;
        current.push(u);
        permute(n, current, used, emit, admissible);
        current.pop();
        used[u] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::local_prune;

    fn complete(n: usize) -> LabeledGraph {
        let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        LabeledGraph::from_edges(vec![0; n], &edges).unwrap()
    }

    #[test]
    fn triangle_into_k4() {
        assert_eq!(oracle_match(&complete(3), &complete(4)).unwrap().len(), 24);
    }

    #[test]
    fn path_into_itself() {
        let p = LabeledGraph::from_edges(vec![0, 1, 0], &[(0, 1), (1, 2)]).unwrap();
        let found = oracle_match(&p, &p).unwrap();
        assert_eq!(found, BTreeSet::from([vec![0, 1, 2], vec![2, 1, 0]]));
    }

    #[test]
    fn absent_label() {
        let q = LabeledGraph::from_edges(vec![3], &[]).unwrap();
        let g = LabeledGraph::from_edges(vec![0, 1, 2], &[(0, 1)]).unwrap();
        assert!(oracle_match(&q, &g).unwrap().is_empty());
    }

    #[test]
    fn guards() {
        assert!(matches!(
            oracle_match(&complete(11), &complete(12)),
            Err(Error::Guard(_))
        ));
        let big = complete(9);
        let c = local_prune(&big, &big);
        assert!(matches!(
            spectrum(&big, &big, &c, OrderFamily::AllPermutations),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn path_connected_family() {
        let p = LabeledGraph::from_edges(vec![0; 3], &[(0, 1), (1, 2)]).unwrap();
        let orders = connected_orders(&p);
        assert_eq!(
            orders,
            vec![vec![0, 1, 2], vec![1, 0, 2], vec![1, 2, 0], vec![2, 1, 0]]
        );
        assert_eq!(all_permutations(3).len(), 6);
    }

    #[test]
    fn single_vertex_spectrum() {
        let q = LabeledGraph::from_edges(vec![0], &[]).unwrap();
        let g = complete(3);
        let c = local_prune(&q, &g);
        let report = spectrum(&q, &g, &c, OrderFamily::AllConnected).unwrap();
        assert_eq!(report.orders_evaluated(), 1);
        assert_eq!(report.optimal, vec![vec![0]]);
        assert_eq!(report.min_enum_calls, 4);
    }
}
