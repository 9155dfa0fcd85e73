//! Synthetic alignment problems with known ground truth: node permutations,
//! cumulative edge removal and attribute corruption, plus the graph and
//! attribute generators used by the evaluation harness.
//!
//! Every generator is a deterministic function of its inputs and a seed.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Known node correspondence from a first graph into a second.
///
/// The mapping is injective and may be partial: noise that deletes nodes on
/// the second side shrinks both domain and range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    map: Vec<Option<NodeId>>,
}

impl GroundTruth {
    pub fn from_map(map: Vec<Option<NodeId>>) -> Self {
        GroundTruth { map }
    }

    /// Image of node `v`, if it still has one.
    pub fn get(&self, v: NodeId) -> Option<NodeId> {
        self.map.get(v).copied().flatten()
    }

    /// Matched `(g1, g2)` index pairs in ascending `g1` order.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.map
            .iter()
            .enumerate()
            .filter_map(|(v, u)| u.map(|u| (v, u)))
    }

    /// Number of matched pairs.
    pub fn len(&self) -> usize {
        self.map.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.map.iter().all(Option::is_none)
    }

    /// Rewrite the range through a compaction map for the second graph;
    /// nodes mapped to `None` drop out of the correspondence.
    fn compose_range(&self, remap: &[Option<NodeId>]) -> Self {
        let map = self
            .map
            .iter()
            .map(|u| u.and_then(|u| remap[u]))
            .collect();
        GroundTruth { map }
    }

    /// Write matched pairs as `label1 label2` lines.
    pub fn save(&self, path: impl AsRef<Path>, g1: &Graph, g2: &Graph) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (v, u) in self.pairs() {
            out.push_str(g1.label(v));
            out.push(' ');
            out.push_str(g2.label(u));
            out.push('\n');
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Load a two-column `label1 label2` truth file.
    pub fn load(path: impl AsRef<Path>, g1: &Graph, g2: &Graph) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut map = vec![None; g1.node_count()];
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let (Some(a), Some(b)) = (tokens.next(), tokens.next()) else {
                return Err(Error::parse(path, lineno + 1, "truth line needs 2 tokens"));
            };
            let v = g1
                .node_by_label(a)
                .ok_or_else(|| Error::UnknownLabel(a.to_string()))?;
            let u = g2
                .node_by_label(b)
                .ok_or_else(|| Error::UnknownLabel(b.to_string()))?;
            map[v] = Some(u);
        }
        Ok(GroundTruth { map })
    }
}

/// Relabel `graph` through an explicit permutation: node `v` becomes node
/// `perm[v]` of the output. Labels and attributes travel with the nodes.
pub fn permute_with(graph: &Graph, perm: &[NodeId]) -> (Graph, GroundTruth) {
    let n = graph.node_count();
    assert_eq!(perm.len(), n, "permutation length must match node count");

    let mut labels = vec![String::new(); n];
    for v in 0..n {
        labels[perm[v]] = graph.label(v).to_string();
    }
    let label_index: HashMap<String, NodeId> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), i))
        .collect();
    let edges = graph.edges().map(|(u, v)| (perm[u], perm[v]));
    let mut out = Graph::from_index_edges(n, edges, labels, label_index);

    if let Some(attrs) = graph.attributes() {
        let mut rows = vec![Vec::new(); n];
        for v in 0..n {
            rows[perm[v]] = attrs.row(v).to_vec();
        }
        out = out.with_attributes(rows).expect("permuted rows cover all nodes");
    }

    let truth = GroundTruth::from_map((0..n).map(|v| Some(perm[v])).collect());
    (out, truth)
}

/// Produce an isomorphic copy of `graph` under a seeded random permutation,
/// together with the permutation as ground truth.
pub fn permute(graph: &Graph, seed: u64) -> (Graph, GroundTruth) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<NodeId> = (0..graph.node_count()).collect();
    perm.shuffle(&mut rng);
    permute_with(graph, &perm)
}

/// Remove each edge independently with probability `p`, then discard nodes
/// whose degree dropped to zero, compacting indices. The ground truth
/// (mapping into `graph`) is rewritten to the compacted indices; entries
/// pointing at removed nodes drop out.
pub fn add_edge_noise(
    graph: &Graph,
    truth: &GroundTruth,
    p: f64,
    seed: u64,
) -> Result<(Graph, GroundTruth)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid_parameter(
            "edge_noise",
            format!("probability {p} outside [0, 1]"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kept: Vec<(NodeId, NodeId)> = graph
        .edges()
        .filter(|_| rng.gen::<f64>() >= p)
        .collect();

    let mut degree = vec![0usize; graph.node_count()];
    for &(u, v) in &kept {
        degree[u] += 1;
        degree[v] += 1;
    }

    let mut remap: Vec<Option<NodeId>> = vec![None; graph.node_count()];
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for v in 0..graph.node_count() {
        if degree[v] > 0 {
            remap[v] = Some(labels.len());
            labels.push(graph.label(v).to_string());
            if let Some(attrs) = graph.attributes() {
                rows.push(attrs.row(v).to_vec());
            }
        }
    }
    let label_index: HashMap<String, NodeId> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), i))
        .collect();
    let edges = kept
        .iter()
        .map(|&(u, v)| (remap[u].unwrap(), remap[v].unwrap()));
    let mut out = Graph::from_index_edges(labels.len(), edges, labels, label_index);
    if graph.attributes().is_some() {
        out = out.with_attributes(rows)?;
    }
    Ok((out, truth.compose_range(&remap)))
}

/// With probability `p`, replace each attribute value by a different
/// category drawn uniformly from that attribute's category set.
pub fn add_attribute_noise(
    graph: &Graph,
    p: f64,
    categories: &[Vec<String>],
    seed: u64,
) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid_parameter(
            "attr_noise",
            format!("probability {p} outside [0, 1]"),
        ));
    }
    let attrs = graph
        .attributes()
        .ok_or_else(|| Error::invalid_parameter("attr_noise", "graph has no attributes"))?;
    if categories.len() != attrs.arity() {
        return Err(Error::invalid_parameter(
            "categories",
            format!("expected {} category sets, got {}", attrs.arity(), categories.len()),
        ));
    }
    for (i, set) in categories.iter().enumerate() {
        if set.len() < 2 {
            return Err(Error::invalid_parameter(
                "categories",
                format!("attribute {i} has fewer than 2 categories; replacement impossible"),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<String>> = attrs.rows().map(|r| r.to_vec()).collect();
    for row in &mut rows {
        for (i, value) in row.iter_mut().enumerate() {
            if rng.gen::<f64>() < p {
                let set = &categories[i];
                loop {
                    let candidate = &set[rng.gen_range(0..set.len())];
                    if candidate != value {
                        *value = candidate.clone();
                        break;
                    }
                }
            }
        }
    }
    graph.clone().with_attributes(rows)
}

/// Seeded preferential-attachment graph: each new node attaches to
/// `attach` distinct existing nodes chosen proportionally to degree.
pub fn preferential_attachment(n: usize, attach: usize, seed: u64) -> Graph {
    assert!(attach >= 1, "attach must be >= 1");
    assert!(n > attach, "need more nodes than attachment edges");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    // Endpoint pool: every edge endpoint appears once, so sampling from it
    // is degree-proportional.
    let mut pool: Vec<NodeId> = Vec::new();

    // Seed clique over the first attach+1 nodes.
    for u in 0..=attach {
        for v in (u + 1)..=attach {
            edges.push((u, v));
            pool.push(u);
            pool.push(v);
        }
    }

    for v in (attach + 1)..n {
        let mut targets: Vec<NodeId> = Vec::with_capacity(attach);
        while targets.len() < attach {
            let t = pool[rng.gen_range(0..pool.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((v, t));
            pool.push(v);
            pool.push(t);
        }
    }
    Graph::from_edges(n, edges)
}

/// Attach `f` synthetic categorical attributes to every node, each drawn
/// uniformly from `categories_per_attr` category names `c0..`.
pub fn random_attributes(
    graph: &Graph,
    f: usize,
    categories_per_attr: usize,
    seed: u64,
) -> Result<Graph> {
    if f == 0 || categories_per_attr < 2 {
        return Err(Error::invalid_parameter(
            "synth_attrs",
            "need at least 1 attribute with at least 2 categories",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<String>> = (0..graph.node_count())
        .map(|_| {
            (0..f)
                .map(|_| format!("c{}", rng.gen_range(0..categories_per_attr)))
                .collect()
        })
        .collect();
    graph.clone().with_attributes(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degree_multiset(g: &Graph) -> Vec<usize> {
        let mut d: Vec<usize> = (0..g.node_count()).map(|v| g.degree(v)).collect();
        d.sort_unstable();
        d
    }

    fn component_sizes(g: &Graph) -> Vec<usize> {
        let mut seen = vec![false; g.node_count()];
        let mut sizes = Vec::new();
        for start in 0..g.node_count() {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut size = 0;
            while let Some(u) = stack.pop() {
                size += 1;
                for &w in g.neighbors(u) {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable();
        sizes
    }

    #[test]
    fn identity_permutation_preserves_edges() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let perm: Vec<NodeId> = (0..4).collect();
        let (h, truth) = permute_with(&g, &perm);
        let e1: Vec<_> = g.edges().collect();
        let e2: Vec<_> = h.edges().collect();
        assert_eq!(e1, e2);
        assert_eq!(truth.get(2), Some(2));
    }

    #[test]
    fn permute_preserves_structure() {
        let g = preferential_attachment(100, 2, 9);
        let (h, truth) = permute(&g, 5);
        assert_eq!(degree_multiset(&g), degree_multiset(&h));
        assert_eq!(g.edge_count(), h.edge_count());
        assert_eq!(component_sizes(&g), component_sizes(&h));
        // Edge set is carried through the mapping.
        for (u, v) in g.edges() {
            assert!(h.has_edge(truth.get(u).unwrap(), truth.get(v).unwrap()));
        }
        // Labels travel with nodes.
        for (v, u) in truth.pairs() {
            assert_eq!(g.label(v), h.label(u));
        }
    }

    #[test]
    fn different_seeds_give_different_mappings() {
        let g = preferential_attachment(100, 2, 9);
        let (_, t1) = permute(&g, 1);
        let (_, t2) = permute(&g, 2);
        assert_ne!(
            t1.pairs().collect::<Vec<_>>(),
            t2.pairs().collect::<Vec<_>>()
        );
    }

    #[test]
    fn permute_is_deterministic() {
        let g = preferential_attachment(60, 2, 3);
        let (h1, t1) = permute(&g, 42);
        let (h2, t2) = permute(&g, 42);
        assert_eq!(h1, h2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn zero_noise_is_identity() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let truth = GroundTruth::from_map((0..4).map(Some).collect());
        let (h, t) = add_edge_noise(&g, &truth, 0.0, 7).unwrap();
        assert_eq!(g, h);
        assert_eq!(truth, t);
    }

    #[test]
    fn full_noise_removes_everything() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let truth = GroundTruth::from_map((0..4).map(Some).collect());
        let (h, t) = add_edge_noise(&g, &truth, 1.0, 7).unwrap();
        assert_eq!(h.node_count(), 0);
        assert_eq!(h.edge_count(), 0);
        assert!(t.is_empty());
    }

    #[test]
    fn noise_survivors_within_binomial_interval() {
        // 1000 edges, removal probability 0.5: survivors must land inside
        // the central 99% of Binomial(1000, 0.5).
        use statrs::distribution::{Binomial, DiscreteCDF};
        let dist = Binomial::new(0.5, 1000).unwrap();
        let lo = dist.inverse_cdf(0.005);
        let hi = dist.inverse_cdf(0.995);

        let g = preferential_attachment(502, 2, 11);
        assert_eq!(g.edge_count(), 1001);
        // Trim to exactly 1000 edges for the frozen interval.
        let edges: Vec<_> = g.edges().take(1000).collect();
        let g = Graph::from_edges(502, edges);
        let truth = GroundTruth::from_map((0..502).map(Some).collect());
        let (h, _) = add_edge_noise(&g, &truth, 0.5, 123).unwrap();
        let survivors = h.edge_count() as u64;
        assert!(
            (lo..=hi).contains(&survivors),
            "survivors {survivors} outside [{lo}, {hi}]"
        );
    }

    #[test]
    fn noise_never_maps_to_removed_nodes() {
        let g = preferential_attachment(80, 2, 4);
        let (h, truth) = permute(&g, 1);
        let (h2, t2) = add_edge_noise(&h, &truth, 0.4, 9).unwrap();
        for (_, u) in t2.pairs() {
            assert!(u < h2.node_count());
            assert!(h2.degree(u) > 0);
        }
        // Surviving edges form a subset of the original edge set, up to the
        // index compaction (checked through labels).
        for (a, b) in h2.edges() {
            let ua = h.node_by_label(h2.label(a)).unwrap();
            let ub = h.node_by_label(h2.label(b)).unwrap();
            assert!(h.has_edge(ua, ub));
        }
    }

    #[test]
    fn attribute_noise_zero_and_full() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let g = random_attributes(&g, 1, 2, 3).unwrap();
        let cats = vec![vec!["c0".to_string(), "c1".to_string()]];

        let same = add_attribute_noise(&g, 0.0, &cats, 5).unwrap();
        assert_eq!(g.attributes(), same.attributes());

        // Binary attribute at p = 1: every value flips.
        let flipped = add_attribute_noise(&g, 1.0, &cats, 5).unwrap();
        for v in 0..4 {
            assert_ne!(g.attributes().unwrap().row(v), flipped.attributes().unwrap().row(v));
        }
    }

    #[test]
    fn attribute_noise_flip_count_within_binomial_interval() {
        use statrs::distribution::{Binomial, DiscreteCDF};
        let dist = Binomial::new(0.3, 1000).unwrap();
        let lo = dist.inverse_cdf(0.005);
        let hi = dist.inverse_cdf(0.995);

        let g = preferential_attachment(500, 2, 21);
        let g = random_attributes(&g, 2, 2, 13).unwrap();
        let cats = vec![
            vec!["c0".to_string(), "c1".to_string()],
            vec!["c0".to_string(), "c1".to_string()],
        ];
        let noisy = add_attribute_noise(&g, 0.3, &cats, 77).unwrap();
        let flips: u64 = (0..500)
            .map(|v| {
                g.attributes()
                    .unwrap()
                    .row(v)
                    .iter()
                    .zip(noisy.attributes().unwrap().row(v))
                    .filter(|(a, b)| a != b)
                    .count() as u64
            })
            .sum();
        assert!(
            (lo..=hi).contains(&flips),
            "flips {flips} outside [{lo}, {hi}]"
        );
    }

    #[test]
    fn singleton_category_is_rejected() {
        let g = Graph::from_edges(2, [(0, 1)]);
        let g = g
            .clone()
            .with_attributes(vec![vec!["x".into()], vec!["x".into()]])
            .unwrap();
        let cats = vec![vec!["x".to_string()]];
        assert!(add_attribute_noise(&g, 0.5, &cats, 1).is_err());
    }

    #[test]
    fn truth_file_roundtrip() {
        let g = preferential_attachment(30, 2, 2);
        let (h, truth) = permute(&g, 8);
        let file = tempfile::NamedTempFile::new().unwrap();
        truth.save(file.path(), &g, &h).unwrap();
        let loaded = GroundTruth::load(file.path(), &g, &h).unwrap();
        assert_eq!(truth, loaded);
    }

    #[test]
    fn preferential_attachment_is_connected_and_seeded() {
        let g1 = preferential_attachment(200, 3, 5);
        let g2 = preferential_attachment(200, 3, 5);
        assert_eq!(g1, g2);
        assert_eq!(component_sizes(&g1), vec![200]);
        assert!((0..200).all(|v| g1.degree(v) >= 3));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn permute_preserves_degree_multiset(n in 5usize..40, seed in 0u64..1000) {
            let g = preferential_attachment(n.max(4), 2, seed);
            let (h, _) = permute(&g, seed.wrapping_add(7));
            let mut d1: Vec<usize> = (0..g.node_count()).map(|v| g.degree(v)).collect();
            let mut d2: Vec<usize> = (0..h.node_count()).map(|v| h.degree(v)).collect();
            d1.sort_unstable();
            d2.sort_unstable();
            prop_assert_eq!(d1, d2);
        }

        #[test]
        fn noise_output_edges_are_a_subset(p in 0.0f64..1.0, seed in 0u64..1000) {
            let g = preferential_attachment(30, 2, 3);
            let (h, truth) = permute(&g, 11);
            let (noisy, updated) = add_edge_noise(&h, &truth, p, seed).unwrap();
            for (a, b) in noisy.edges() {
                let ua = h.node_by_label(noisy.label(a)).unwrap();
                let ub = h.node_by_label(noisy.label(b)).unwrap();
                prop_assert!(h.has_edge(ua, ub));
            }
            for (_, u) in updated.pairs() {
                prop_assert!(noisy.degree(u) > 0);
            }
        }

        #[test]
        fn generators_are_seed_deterministic(p in 0.0f64..1.0, seed in 0u64..1000) {
            let g = preferential_attachment(25, 2, 5);
            let (h1, t1) = permute(&g, seed);
            let (h2, t2) = permute(&g, seed);
            prop_assert_eq!(&h1, &h2);
            prop_assert_eq!(&t1, &t2);
            let (n1, u1) = add_edge_noise(&h1, &t1, p, seed).unwrap();
            let (n2, u2) = add_edge_noise(&h2, &t2, p, seed).unwrap();
            prop_assert_eq!(n1, n2);
            prop_assert_eq!(u1, u2);
        }
    }
}
