//! Undirected graph with string labels, dense indices and optional
//! categorical node attributes.
//!
//! All algorithms in this crate work on dense node indices; labels exist
//! only at the I/O boundary. Graphs are immutable once built, so shared
//! references can be read from any number of threads.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense node index, valid in `[0, node_count)`.
pub type NodeId = usize;

/// Per-node categorical attribute rows with a fixed arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attributes {
    values: Vec<Vec<String>>,
    arity: usize,
}

impl Attributes {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn row(&self, v: NodeId) -> &[String] {
        &self.values[v]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[String]> {
        self.values.iter().map(|r| r.as_slice())
    }
}

/// Immutable undirected graph without self-loops or duplicate edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    labels: Vec<String>,
    label_index: HashMap<String, NodeId>,
    attributes: Option<Attributes>,
    edge_count: usize,
}

impl Graph {
    /// Build a graph from `(u, v)` label pairs. Duplicate edges and
    /// self-loops are silently dropped; nodes are indexed by first
    /// occurrence.
    pub fn from_labeled_edges<S: AsRef<str>>(edges: impl IntoIterator<Item = (S, S)>) -> Self {
        let mut labels: Vec<String> = Vec::new();
        let mut label_index: HashMap<String, NodeId> = HashMap::new();
        let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();

        let intern = |label: &str, labels: &mut Vec<String>, index: &mut HashMap<String, NodeId>| {
            if let Some(&id) = index.get(label) {
                id
            } else {
                let id = labels.len();
                labels.push(label.to_string());
                index.insert(label.to_string(), id);
                id
            }
        };

        for (a, b) in edges {
            // Self-loops are dropped before interning, so every node of a
            // loaded graph carries at least one edge.
            if a.as_ref() == b.as_ref() {
                continue;
            }
            let u = intern(a.as_ref(), &mut labels, &mut label_index);
            let v = intern(b.as_ref(), &mut labels, &mut label_index);
            pairs.push((u.min(v), u.max(v)));
        }

        Self::from_index_edges(labels.len(), pairs, labels, label_index)
    }

    /// Build a graph over `n` nodes from index pairs, supplying labels.
    /// Self-loops and duplicates are dropped.
    pub fn from_index_edges(
        n: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        labels: Vec<String>,
        label_index: HashMap<String, NodeId>,
    ) -> Self {
        debug_assert_eq!(labels.len(), n);
        let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut pairs: Vec<(NodeId, NodeId)> = edges
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        for &(u, v) in &pairs {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Graph {
            adjacency,
            labels,
            label_index,
            attributes: None,
            edge_count: pairs.len(),
        }
    }

    /// Convenience constructor with labels `"0".."n-1"`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let label_index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Self::from_index_edges(n, edges, labels, label_index)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    /// Neighbors of `v` in ascending index order.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Maximum degree, 0 for an empty graph.
    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(label).copied()
    }

    /// Edges as `(u, v)` pairs with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn attributes(&self) -> Option<&Attributes> {
        self.attributes.as_ref()
    }

    /// Replace the attribute table. Rows must cover every node with a
    /// consistent arity.
    pub fn with_attributes(mut self, values: Vec<Vec<String>>) -> Result<Self> {
        if values.len() != self.node_count() {
            return Err(Error::invalid_parameter(
                "attributes",
                format!(
                    "expected {} rows, got {}",
                    self.node_count(),
                    values.len()
                ),
            ));
        }
        let arity = values.first().map(Vec::len).unwrap_or(0);
        for (v, row) in values.iter().enumerate() {
            if row.len() != arity {
                return Err(Error::ArityMismatch {
                    node: self.labels[v].clone(),
                    expected: arity,
                    found: row.len(),
                });
            }
        }
        self.attributes = Some(Attributes { values, arity });
        Ok(self)
    }

    /// Nodes at shortest-path distance exactly `k` from `v` (`v` excluded).
    pub fn khop_neighbors(&self, v: NodeId, k: usize) -> Result<Vec<NodeId>> {
        if v >= self.node_count() {
            return Err(Error::InvalidNode(v));
        }
        if k == 0 {
            return Err(Error::invalid_parameter("k", "hop distance must be >= 1"));
        }
        Ok(self.bfs_rings(v, k).pop().unwrap_or_default())
    }

    /// BFS rings 1..=k around `v`: `rings[i]` holds the nodes at distance
    /// `i + 1`, sorted. Trailing rings may be empty.
    pub(crate) fn bfs_rings(&self, v: NodeId, k: usize) -> Vec<Vec<NodeId>> {
        let mut visited = vec![false; self.node_count()];
        visited[v] = true;
        let mut frontier = vec![v];
        let mut rings = Vec::with_capacity(k);
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in self.neighbors(u) {
                    if !visited[w] {
                        visited[w] = true;
                        next.push(w);
                    }
                }
            }
            next.sort_unstable();
            frontier = next.clone();
            rings.push(next);
            if frontier.is_empty() {
                break;
            }
        }
        rings.resize(k, Vec::new());
        rings
    }

    /// Serialize as an edge list, one `label_u label_v` line per edge.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{} {}", self.labels[u], self.labels[v]);
        }
        out
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_edge_list_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn save_attributes(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let attrs = self
            .attributes
            .as_ref()
            .ok_or_else(|| Error::invalid_parameter("attributes", "graph has no attributes"))?;
        let mut out = String::new();
        for v in 0..self.node_count() {
            let _ = write!(out, "{}", self.labels[v]);
            for value in attrs.row(v) {
                let _ = write!(out, " {value}");
            }
            out.push('\n');
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn is_comment(line: &str) -> bool {
    line.starts_with('#') || line.starts_with('%')
}

/// Load an undirected graph from a whitespace-separated edge list.
///
/// Lines starting with `#` or `%` are comments; tokens beyond the first two
/// are ignored. Duplicate edges and self-loops are dropped. Nodes are
/// indexed by first occurrence.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut edges: Vec<(String, String)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || is_comment(trimmed) {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let u = tokens.next();
        let v = tokens.next();
        match (u, v) {
            (Some(u), Some(v)) => edges.push((u.to_string(), v.to_string())),
            _ => {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    "edge line needs at least 2 tokens",
                ))
            }
        }
    }
    Ok(Graph::from_labeled_edges(edges))
}

/// Load a node attribute file (`label value_1 .. value_F` per line) and
/// attach it to `graph`. Arity is inferred from the first data line and
/// enforced; every graph node must be covered.
pub fn load_attributes(path: impl AsRef<Path>, graph: &Graph) -> Result<Graph> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut rows: Vec<Option<Vec<String>>> = vec![None; graph.node_count()];
    let mut arity: Option<usize> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || is_comment(trimmed) {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let label = tokens
            .next()
            .ok_or_else(|| Error::parse(path, lineno + 1, "missing node label"))?;
        let values: Vec<String> = tokens.map(str::to_string).collect();
        if values.is_empty() {
            return Err(Error::parse(path, lineno + 1, "missing attribute values"));
        }
        let node = graph
            .node_by_label(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        match arity {
            None => arity = Some(values.len()),
            Some(expected) if expected != values.len() => {
                return Err(Error::ArityMismatch {
                    node: label.to_string(),
                    expected,
                    found: values.len(),
                })
            }
            _ => {}
        }
        rows[node] = Some(values);
    }

    let mut values = Vec::with_capacity(graph.node_count());
    for (v, row) in rows.into_iter().enumerate() {
        match row {
            Some(r) => values.push(r),
            None => return Err(Error::MissingAttributes(graph.label(v).to_string())),
        }
    }
    graph.clone().with_attributes(values)
}
