//! Immutable vertex-labeled undirected graphs in CSR form, the `t/v/e` text
//! format, data-graph statistics and random connected-query extraction.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, ParseError, Result};

pub type VertexId = usize;
/// Dense label id in `0..label_universe_size`.
pub type Label = u32;

/// Bidirectional map between the labels written in a file and dense ids
/// assigned in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    to_dense: HashMap<u64, Label>,
    original: Vec<u64>,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Map where dense id `i` stands for original label `i`.
    pub fn identity(size: usize) -> Self {
        let mut map = Self::new();
        for l in 0..size as u64 {
            map.intern(l);
        }
        map
    }

    pub fn intern(&mut self, original: u64) -> Label {
        if let Some(&dense) = self.to_dense.get(&original) {
            return dense;
        }
        let dense = self.original.len() as Label;
        self.original.push(original);
        self.to_dense.insert(original, dense);
        dense
    }

    pub fn dense(&self, original: u64) -> Option<Label> {
        self.to_dense.get(&original).copied()
    }

    pub fn original(&self, dense: Label) -> u64 {
        self.original[dense as usize]
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    labels: Vec<Label>,
    offsets: Vec<usize>,
    neighbors: Vec<VertexId>,
    edge_count: usize,
    label_map: LabelMap,
}

impl LabeledGraph {
    /// Builds a graph from dense labels and an undirected edge list.
    ///
    /// The label universe is `0..=max(labels)` with the identity mapping.
    pub fn from_edges(labels: Vec<Label>, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let universe = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        Self::with_label_map(labels, edges, LabelMap::identity(universe))
    }

    pub fn with_label_map(
        labels: Vec<Label>,
        edges: &[(VertexId, VertexId)],
        label_map: LabelMap,
    ) -> Result<Self> {
        let n = labels.len();
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= label_map.len()) {
            return Err(Error::InvalidGraph(format!(
                "label {l} outside universe of size {}",
                label_map.len()
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(Self::from_adjacency(labels, adjacency, label_map))
    }

    fn from_adjacency(labels: Vec<Label>, adjacency: Vec<Vec<VertexId>>, label_map: LabelMap) -> Self {
        let mut offsets = Vec::with_capacity(labels.len() + 1);
        let mut neighbors = Vec::with_capacity(adjacency.iter().map(Vec::len).sum());
        offsets.push(0);
        for mut adj in adjacency {
            adj.sort_unstable();
            neighbors.extend_from_slice(&adj);
            offsets.push(neighbors.len());
        }
        let edge_count = neighbors.len() / 2;
        Self {
            labels,
            offsets,
            neighbors,
            edge_count,
            label_map,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn label_universe_size(&self) -> usize {
        self.label_map.len()
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.label_map
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, v: VertexId) -> Label {
        self.labels[v]
    }

    pub fn original_label(&self, v: VertexId) -> u64 {
        self.label_map.original(self.labels[v])
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Sorted neighbor list.
    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Each undirected edge once as `(min, max)`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count())
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    queue.push_back(w);
                }
            }
        }
        reached == n
    }

    /// Subgraph induced by `vertices`, re-indexed by position in the slice.
    pub fn induced_subgraph(&self, vertices: &[VertexId]) -> LabeledGraph {
        let index: HashMap<VertexId, VertexId> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let labels = vertices.iter().map(|&v| self.labels[v]).collect();
        let adjacency = vertices
            .iter()
            .map(|&v| {
                self.neighbors(v)
                    .iter()
                    .filter_map(|w| index.get(w).copied())
                    .collect()
            })
            .collect();
        Self::from_adjacency(labels, adjacency, self.label_map.clone())
    }
}

fn field<T: std::str::FromStr>(parts: &[&str], i: usize, line: usize, what: &str) -> Result<T, ParseError> {
    parts
        .get(i)
        .ok_or_else(|| ParseError::Malformed {
            line,
            reason: format!("missing {what}"),
        })?
        .parse()
        .map_err(|_| ParseError::Malformed {
            line,
            reason: format!("invalid {what} `{}`", parts[i]),
        })
}

/// Parses a graph, assigning dense labels in first-appearance order.
pub fn load_graph(reader: impl BufRead) -> Result<LabeledGraph> {
    load_graph_with_labels(reader, LabelMap::new())
}

/// Parses a query graph so that its labels share the data graph's dense ids.
/// Labels absent from the data graph receive fresh ids.
pub fn load_query(reader: impl BufRead, data: &LabeledGraph) -> Result<LabeledGraph> {
    load_graph_with_labels(reader, data.label_map.clone())
}

pub fn load_graph_str(text: &str) -> Result<LabeledGraph> {
    load_graph(text.as_bytes())
}

pub fn load_graph_file(path: impl AsRef<Path>) -> Result<LabeledGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_graph(BufReader::new(file))
}

pub fn load_query_file(path: impl AsRef<Path>, data: &LabeledGraph) -> Result<LabeledGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_query(BufReader::new(file), data)
}

pub fn load_graph_with_labels(reader: impl BufRead, mut label_map: LabelMap) -> Result<LabeledGraph> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut labels: Vec<Label> = Vec::new();
    let mut declared: Vec<(usize, usize)> = Vec::new(); // (degree, line)
    let mut adjacency: Vec<Vec<VertexId>> = Vec::new();
    let mut seen_edges = HashSet::new();
    let mut edges_read = 0usize;
    let mut last_line = 0usize;

    for (idx, raw) in reader.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let raw = raw?;
        let parts: Vec<&str> = raw.split_whitespace().collect();
        if parts.is_empty() {
            continue;
        }
        match (parts[0], header) {
            ("t", None) => {
                let n: usize = field(&parts, 1, line, "vertex count")?;
                let m: usize = field(&parts, 2, line, "edge count")?;
                header = Some((n, m, line));
                labels.reserve(n);
                adjacency = vec![Vec::new(); n];
            }
            ("t", Some(_)) => {
                return Err(ParseError::Malformed {
                    line,
                    reason: "repeated header".into(),
                }
                .into())
            }
            (_, None) => {
                return Err(ParseError::Malformed {
                    line,
                    reason: "expected `t <vertices> <edges>` header".into(),
                }
                .into())
            }
            ("v", Some((n, _, _))) => {
                if parts.len() != 4 {
                    return Err(ParseError::Malformed {
                        line,
                        reason: "expected `v <id> <label> <degree>`".into(),
                    }
                    .into());
                }
                if edges_read > 0 {
                    return Err(ParseError::Malformed {
                        line,
                        reason: "vertex record after edge records".into(),
                    }
                    .into());
                }
                let id: usize = field(&parts, 1, line, "vertex id")?;
                let label: u64 = field(&parts, 2, line, "label")?;
                let degree: usize = field(&parts, 3, line, "degree")?;
                let expected = labels.len();
                if id < expected {
                    return Err(ParseError::DuplicateVertex { line, id }.into());
                }
                if id != expected {
                    return Err(ParseError::VertexOutOfOrder {
                        line,
                        expected,
                        found: id,
                    }
                    .into());
                }
                if id >= n {
                    return Err(ParseError::CountMismatch {
                        line,
                        what: "vertices",
                        declared: n,
                        found: id + 1,
                    }
                    .into());
                }
                labels.push(label_map.intern(label));
                declared.push((degree, line));
            }
            ("e", Some((n, m, _))) => {
                if parts.len() != 3 {
                    return Err(ParseError::Malformed {
                        line,
                        reason: "expected `e <src> <dst>`".into(),
                    }
                    .into());
                }
                if labels.len() != n {
                    return Err(ParseError::CountMismatch {
                        line,
                        what: "vertices",
                        declared: n,
                        found: labels.len(),
                    }
                    .into());
                }
                let src: usize = field(&parts, 1, line, "edge source")?;
                let dst: usize = field(&parts, 2, line, "edge target")?;
                for id in [src, dst] {
                    if id >= n {
                        return Err(ParseError::UnknownVertex { line, id }.into());
                    }
                }
                if src == dst {
                    return Err(ParseError::SelfLoop { line, id: src }.into());
                }
                if !seen_edges.insert((src.min(dst), src.max(dst))) {
                    return Err(ParseError::DuplicateEdge { line, src, dst }.into());
                }
                edges_read += 1;
                if edges_read > m {
                    return Err(ParseError::CountMismatch {
                        line,
                        what: "edges",
                        declared: m,
                        found: edges_read,
                    }
                    .into());
                }
                adjacency[src].push(dst);
                adjacency[dst].push(src);
            }
            (other, Some(_)) => {
                return Err(ParseError::Malformed {
                    line,
                    reason: format!("unknown record type `{other}`"),
                }
                .into())
            }
        }
    }

    let (n, m, _) = header.ok_or(ParseError::Malformed {
        line: last_line.max(1),
        reason: "missing header".into(),
    })?;
    if labels.len() != n {
        return Err(ParseError::CountMismatch {
            line: last_line,
            what: "vertices",
            declared: n,
            found: labels.len(),
        }
        .into());
    }
    if edges_read != m {
        return Err(ParseError::CountMismatch {
            line: last_line,
            what: "edges",
            declared: m,
            found: edges_read,
        }
        .into());
    }
    for (id, (&(degree, line), adj)) in declared.iter().zip(&adjacency).enumerate() {
        if degree != adj.len() {
            return Err(ParseError::DegreeMismatch {
                line,
                id,
                declared: degree,
                actual: adj.len(),
            }
            .into());
        }
    }
    Ok(LabeledGraph::from_adjacency(labels, adjacency, label_map))
}

/// Writes the canonical text form: vertices ascending, edges ascending by `(min, max)`.
pub fn save_graph(g: &LabeledGraph, mut writer: impl Write) -> Result<()> {
    writeln!(writer, "t {} {}", g.vertex_count(), g.edge_count())?;
    for v in 0..g.vertex_count() {
        writeln!(writer, "v {} {} {}", v, g.original_label(v), g.degree(v))?;
    }
    for (u, v) in g.edges() {
        writeln!(writer, "e {u} {v}")?;
    }
    Ok(())
}

pub fn save_graph_file(g: &LabeledGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    save_graph(g, &mut writer)?;
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn graph_to_string(g: &LabeledGraph) -> String {
    let mut buf = Vec::new();
    save_graph(g, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("graph text is ASCII")
}

/// Label and degree statistics of a data graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStats {
    vertex_count: usize,
    label_frequency: Vec<usize>,
    sorted_degrees: Vec<usize>,
    edge_label_pairs: HashMap<(Label, Label), usize>,
}

impl GraphStats {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn label_frequencies(&self) -> &[usize] {
        &self.label_frequency
    }

    /// Number of data vertices carrying `label`; zero for labels the data graph lacks.
    pub fn label_frequency(&self, label: Label) -> usize {
        self.label_frequency.get(label as usize).copied().unwrap_or(0)
    }

    /// `|{v : d(v) > k}|`.
    pub fn degree_exceed_count(&self, k: usize) -> usize {
        self.sorted_degrees.len() - self.sorted_degrees.partition_point(|&d| d <= k)
    }

    /// Number of data edges whose endpoint labels are `{a, b}` (unordered).
    pub fn edge_label_pair_frequency(&self, a: Label, b: Label) -> usize {
        self.edge_label_pairs
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or(0)
    }
}

pub fn compute_stats(g: &LabeledGraph) -> GraphStats {
    let mut label_frequency = vec![0; g.label_universe_size()];
    for &l in g.labels() {
        label_frequency[l as usize] += 1;
    }
    let mut sorted_degrees: Vec<usize> = (0..g.vertex_count()).map(|v| g.degree(v)).collect();
    sorted_degrees.sort_unstable();
    let mut edge_label_pairs = HashMap::new();
    for (u, v) in g.edges() {
        let (a, b) = (g.label(u), g.label(v));
        *edge_label_pairs.entry((a.min(b), a.max(b))).or_insert(0) += 1;
    }
    GraphStats {
        vertex_count: g.vertex_count(),
        label_frequency,
        sorted_degrees,
        edge_label_pairs,
    }
}

const EXTRACTION_ATTEMPTS: usize = 64;

/// Extracts a random connected induced subgraph with `size` vertices.
///
/// Vertices are grown from a uniform start by repeatedly adding a uniform
/// member of the current frontier (unselected neighbors of the selected set).
/// The result is re-indexed in ascending source-id order and shares `g`'s
/// label map.
pub fn extract_connected_query(g: &LabeledGraph, size: usize, seed: u64) -> Result<LabeledGraph> {
    extract_connected_subgraph(g, size, seed).map(|(q, _)| q)
}

/// Like [`extract_connected_query`], also returning the source vertex of each query vertex.
pub fn extract_connected_subgraph(
    g: &LabeledGraph,
    size: usize,
    seed: u64,
) -> Result<(LabeledGraph, Vec<VertexId>)> {
    let n = g.vertex_count();
    if size == 0 || size > n {
        return Err(Error::Extraction(format!(
            "requested {size} vertices from a graph with {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..EXTRACTION_ATTEMPTS {
        let start = rng.gen_range(0..n);
        let mut selected = vec![start];
        let mut marked: HashSet<VertexId> = HashSet::from([start]);
        let mut frontier: Vec<VertexId> = Vec::new();
        for &w in g.neighbors(start) {
            if marked.insert(w) {
                frontier.push(w);
            }
        }
        while selected.len() < size && !frontier.is_empty() {
            let v = frontier.swap_remove(rng.gen_range(0..frontier.len()));
            selected.push(v);
            for &w in g.neighbors(v) {
                if marked.insert(w) {
                    frontier.push(w);
                }
            }
        }
        if selected.len() == size {
            selected.sort_unstable();
            return Ok((g.induced_subgraph(&selected), selected));
        }
    }
    Err(Error::Extraction(format!(
        "no connected {size}-vertex subgraph found after {EXTRACTION_ATTEMPTS} attempts"
    )))
}

/// Random connected graph: a random spanning tree plus uniformly added edges,
/// with labels drawn from `label_weights`.
pub fn random_connected_graph(
    vertex_count: usize,
    edge_count: usize,
    label_weights: &[f64],
    seed: u64,
) -> Result<LabeledGraph> {
    let n = vertex_count;
    if n == 0 {
        return Err(Error::InvalidGraph("empty graph requested".into()));
    }
    let max_edges = n * (n - 1) / 2;
    if edge_count + 1 < n || edge_count > max_edges {
        return Err(Error::InvalidGraph(format!(
            "{edge_count} edges cannot form a connected simple graph on {n} vertices"
        )));
    }
    let dist =
        WeightedIndex::new(label_weights).map_err(|e| Error::InvalidGraph(format!("label weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<Label> = (0..n).map(|_| dist.sample(&mut rng) as Label).collect();
    let mut edges = Vec::with_capacity(edge_count);
    let mut seen = HashSet::with_capacity(edge_count);
    for v in 1..n {
        let u = rng.gen_range(0..v);
        seen.insert((u, v));
        edges.push((u, v));
    }
    while edges.len() < edge_count {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    LabeledGraph::with_label_map(labels, &edges, LabelMap::identity(label_weights.len()))
}
