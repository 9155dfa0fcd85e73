//! Embedding-guided graph compression.
//!
//! A guiding list of starting points is derived per graph from the shared
//! embedding space, so that the two graphs shrink consistently: starting
//! points are paired across graphs by similarity before any merging
//! happens. Each merge collapses the minimum-degree neighbors of a
//! starting point into one supernode, and repeats until the requested
//! fraction of nodes has been eliminated.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use crate::align::similarity;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Which of the two input graphs a structure belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Ordered compression starting points for one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuidingList {
    nodes: Vec<NodeId>,
}

impl GuidingList {
    pub fn new(nodes: Vec<NodeId>) -> Self {
        GuidingList { nodes }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn embedding_row<'a>(z: &'a EmbeddingMatrix, side: Side, v: NodeId) -> ndarray::ArrayView1<'a, f64> {
    match side {
        Side::First => z.row_g1(v),
        Side::Second => z.row_g2(v),
    }
}

/// Distance to the zero vector, rounded so that only genuine embedding
/// collisions compare equal.
fn rounded_norm(z: &EmbeddingMatrix, side: Side, v: NodeId) -> i64 {
    let norm = embedding_row(z, side, v)
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    (norm * 1e9).round() as i64
}

fn candidate_list(g: &Graph, z: &EmbeddingMatrix, side: Side, eta: usize) -> Vec<(NodeId, i64)> {
    let mut list: Vec<(NodeId, i64)> = (0..g.node_count())
        .filter(|&v| g.degree(v) >= eta)
        .map(|v| (v, rounded_norm(z, side, v)))
        .collect();
    // Descending distance to zero; index breaks exact ties.
    list.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    list
}

/// Drop every node whose rounded distance collides with another node in
/// the same list; such nodes sit at indistinguishable positions and cannot
/// be paired reliably.
fn dedup_by_distance(list: Vec<(NodeId, i64)>) -> Vec<(NodeId, i64)> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &(_, d) in &list {
        *counts.entry(d).or_insert(0) += 1;
    }
    list.into_iter().filter(|&(_, d)| counts[&d] == 1).collect()
}

/// Build paired guiding lists for both graphs.
///
/// Nodes below the degree threshold `eta` are excluded; survivors are
/// ranked by embedding norm, de-duplicated on colliding norms, then
/// greedily paired: the head of the first list is matched against the top
/// `lambda` of the second, accepting the first pair whose similarity
/// reaches `omega`. Entries at the same rank of the two lists correspond.
pub fn make_guiding_lists(
    g1: &Graph,
    g2: &Graph,
    z: &EmbeddingMatrix,
    eta: usize,
    omega: f64,
    lambda: usize,
) -> (GuidingList, GuidingList) {
    let mut l1 = dedup_by_distance(candidate_list(g1, z, Side::First, eta));
    let mut l2 = dedup_by_distance(candidate_list(g2, z, Side::Second, eta));

    let mut q1 = Vec::new();
    let mut q2 = Vec::new();
    while !l1.is_empty() && !l2.is_empty() {
        let (v, _) = l1.remove(0);
        let v_row = z.row_g1(v);
        let window = lambda.min(l2.len());
        let hit = l2[..window]
            .iter()
            .position(|&(u, _)| similarity(v_row, z.row_g2(u)).unwrap_or(0.0) >= omega);
        if let Some(pos) = hit {
            let (u, _) = l2.remove(pos);
            q1.push(v);
            q2.push(u);
        }
        // No qualifying partner within the window: v is discarded.
    }
    (GuidingList::new(q1), GuidingList::new(q2))
}

/// A graph being compressed: surviving original nodes, supernodes created
/// so far, and the table mapping each supernode to the original nodes
/// merged into it.
#[derive(Debug, Clone)]
pub struct CompressedGraph {
    // Slot per node id; `None` marks a merged (removed) node. Ids below
    // `original_count` are original nodes, the rest supernodes.
    adjacency: Vec<Option<BTreeSet<NodeId>>>,
    original_count: usize,
    alive: usize,
    table: BTreeMap<NodeId, BTreeSet<NodeId>>,
    under_compressed: bool,
}

impl CompressedGraph {
    /// Start from an uncompressed graph.
    pub fn new(graph: &Graph) -> Self {
        let adjacency = (0..graph.node_count())
            .map(|v| Some(graph.neighbors(v).iter().copied().collect()))
            .collect();
        CompressedGraph {
            adjacency,
            original_count: graph.node_count(),
            alive: graph.node_count(),
            table: BTreeMap::new(),
            under_compressed: false,
        }
    }

    pub fn original_count(&self) -> usize {
        self.original_count
    }

    /// Number of nodes currently in the compressed graph.
    pub fn node_count(&self) -> usize {
        self.alive
    }

    /// Fraction of original nodes eliminated so far.
    pub fn compression_ratio(&self) -> f64 {
        if self.original_count == 0 {
            return 0.0;
        }
        1.0 - self.alive as f64 / self.original_count as f64
    }

    pub fn is_alive(&self, v: NodeId) -> bool {
        self.adjacency.get(v).map(Option::is_some).unwrap_or(false)
    }

    pub fn is_supernode(&self, v: NodeId) -> bool {
        v >= self.original_count && self.is_alive(v)
    }

    pub fn degree(&self, v: NodeId) -> Option<usize> {
        self.adjacency.get(v)?.as_ref().map(BTreeSet::len)
    }

    pub fn neighbors(&self, v: NodeId) -> Option<&BTreeSet<NodeId>> {
        self.adjacency.get(v)?.as_ref()
    }

    /// Surviving original nodes, ascending.
    pub fn uncompressed_nodes(&self) -> Vec<NodeId> {
        (0..self.original_count)
            .filter(|&v| self.is_alive(v))
            .collect()
    }

    /// Supernodes, in creation order.
    pub fn supernodes(&self) -> Vec<NodeId> {
        (self.original_count..self.adjacency.len())
            .filter(|&v| self.is_alive(v))
            .collect()
    }

    /// Supernode table: supernode id to the original nodes merged into it.
    pub fn table(&self) -> &BTreeMap<NodeId, BTreeSet<NodeId>> {
        &self.table
    }

    pub fn sub_nodes(&self, s: NodeId) -> Option<&BTreeSet<NodeId>> {
        self.table.get(&s)
    }

    /// True when the requested ratio could not be met.
    pub fn is_under_compressed(&self) -> bool {
        self.under_compressed
    }

    /// Current edges, each once with `u < v`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (u, slot) in self.adjacency.iter().enumerate() {
            if let Some(nbrs) = slot {
                for &v in nbrs.iter().filter(|&&v| v > u) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Merge the minimum-degree neighbors of `v_start` into a new
    /// supernode. Returns the supernode id, or `None` when `v_start` is
    /// gone or isolated (a skip, not an error).
    pub fn merge_step(&mut self, v_start: NodeId) -> Option<NodeId> {
        let neighbors = self.neighbors(v_start)?;
        if neighbors.is_empty() {
            return None;
        }
        let min_degree = neighbors
            .iter()
            .map(|&u| self.degree(u).expect("adjacency is symmetric"))
            .min()?;
        let merge_set: BTreeSet<NodeId> = self
            .neighbors(v_start)?
            .iter()
            .copied()
            .filter(|&u| self.degree(u) == Some(min_degree))
            .collect();

        // Frontier of the merge set, minus the set itself: these become the
        // supernode's neighbors (duplicates collapse in the set).
        let mut frontier: BTreeSet<NodeId> = BTreeSet::new();
        for &u in &merge_set {
            frontier.extend(self.adjacency[u].as_ref().unwrap().iter().copied());
        }
        for u in &merge_set {
            frontier.remove(u);
        }

        // Collect original sub-nodes, flattening any supernode members.
        let mut sub_nodes: BTreeSet<NodeId> = BTreeSet::new();
        for &u in &merge_set {
            if u >= self.original_count {
                let inner = self.table.remove(&u).expect("supernode has table entry");
                sub_nodes.extend(inner);
            } else {
                sub_nodes.insert(u);
            }
        }

        // Remove the merged nodes and their incident edges.
        for &u in &merge_set {
            let nbrs = self.adjacency[u].take().expect("merge members are alive");
            self.alive -= 1;
            for w in nbrs {
                if let Some(Some(adj)) = self.adjacency.get_mut(w) {
                    adj.remove(&u);
                }
            }
        }

        // Add the supernode with one edge to each frontier node.
        let supernode = self.adjacency.len();
        for &w in &frontier {
            self.adjacency[w]
                .as_mut()
                .expect("frontier nodes are alive")
                .insert(supernode);
        }
        self.adjacency.push(Some(frontier));
        self.alive += 1;
        self.table.insert(supernode, sub_nodes);
        Some(supernode)
    }

    /// Dump the supernode table as `supernode: sub_1 sub_2 ...` lines,
    /// using original-graph labels.
    pub fn write_table(&self, path: impl AsRef<Path>, origin: &Graph) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (s, subs) in &self.table {
            out.push_str(&supernode_label(*s, self.original_count));
            out.push(':');
            for &v in subs {
                out.push(' ');
                out.push_str(origin.label(v));
            }
            out.push('\n');
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Display label for a supernode id.
pub fn supernode_label(s: NodeId, original_count: usize) -> String {
    format!("@s{}", s - original_count)
}

/// Compress `graph` by walking the guiding list until the target ratio
/// `phi` is met. Merged entries leave the working queue and new supernodes
/// join its tail; the queue is rescanned until either the ratio is reached
/// or a full cycle makes no progress, in which case the result is flagged
/// under-compressed.
pub fn merge(graph: &Graph, guide: &GuidingList, phi: f64) -> Result<CompressedGraph> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::invalid_parameter(
            "phi",
            format!("{phi} outside (0, 1)"),
        ));
    }
    let mut cg = CompressedGraph::new(graph);
    let mut queue: Vec<NodeId> = guide.nodes().to_vec();
    let mut cursor = 0usize;
    let mut count_at_wrap = cg.node_count();
    // Consecutive merges without a node-count reduction; singleton merges
    // swap one node for one supernode and can cycle forever without this.
    let mut stale = 0usize;

    loop {
        if cg.compression_ratio() >= phi {
            return Ok(cg);
        }
        if stale > cg.node_count() {
            cg.under_compressed = true;
            return Ok(cg);
        }
        if cursor >= queue.len() {
            if cg.node_count() == count_at_wrap {
                cg.under_compressed = true;
                return Ok(cg);
            }
            count_at_wrap = cg.node_count();
            queue.retain(|&v| cg.is_alive(v));
            cursor = 0;
            if queue.is_empty() {
                cg.under_compressed = true;
                return Ok(cg);
            }
            continue;
        }
        let v_start = queue[cursor];
        cursor += 1;
        if !cg.is_alive(v_start) {
            continue;
        }
        let before = cg.node_count();
        if let Some(supernode) = cg.merge_step(v_start) {
            queue.push(supernode);
            if cg.node_count() < before {
                stale = 0;
            } else {
                stale += 1;
            }
        }
    }
}

/// A compressed graph that performed no merges at all (used when
/// compression is disabled).
pub fn uncompressed(graph: &Graph) -> CompressedGraph {
    CompressedGraph::new(graph)
}
