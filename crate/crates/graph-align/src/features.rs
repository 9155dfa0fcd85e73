//! Per-node feature extraction for a pair of graphs.
//!
//! Structural features are hop-discounted histograms of neighbor degrees
//! over log2 bins; attribute features are one-hot encodings of categorical
//! values (numeric values are min-max normalized instead). Rows for both
//! graphs live in one matrix so they share a bin layout and column order.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Log2 bin of a positive degree: `ceil(log2(deg))`.
pub fn log_bin(deg: usize) -> usize {
    assert!(deg >= 1, "degree-0 nodes are excluded upstream");
    if deg == 1 {
        0
    } else {
        usize::BITS as usize - (deg - 1).leading_zeros() as usize
    }
}

/// Number of bins needed so every degree up to `max_degree` maps inside
/// `[0, m)`: one past the highest bin index, at least 1.
pub fn bin_count(max_degree: usize) -> usize {
    if max_degree == 0 {
        1
    } else {
        log_bin(max_degree) + 1
    }
}

/// Degree histogram of the neighbors exactly `k` hops from `v`, using the
/// node's degree in its own graph.
pub fn hop_degree_vector(graph: &Graph, v: NodeId, k: usize, m: usize) -> Result<Vec<f64>> {
    let ring = graph.khop_neighbors(v, k)?;
    let mut bins = vec![0.0; m];
    for u in ring {
        bins[log_bin(graph.degree(u))] += 1.0;
    }
    Ok(bins)
}

/// Hop-discounted structural feature of one node: the sum over hops
/// `k = 1..=max_hops` of `discount^(k-1)` times the hop-k degree histogram.
pub fn structural_feature(
    graph: &Graph,
    v: NodeId,
    max_hops: usize,
    discount: f64,
    m: usize,
) -> Result<Vec<f64>> {
    if max_hops < 1 {
        return Err(Error::invalid_parameter("max_hops", "must be >= 1"));
    }
    if !(discount > 0.0 && discount <= 1.0) {
        return Err(Error::invalid_parameter(
            "discount",
            format!("{discount} outside (0, 1]"),
        ));
    }
    if v >= graph.node_count() {
        return Err(Error::InvalidNode(v));
    }
    let rings = graph.bfs_rings(v, max_hops);
    let mut row = vec![0.0; m];
    let mut weight = 1.0;
    for ring in rings {
        for u in ring {
            row[log_bin(graph.degree(u))] += weight;
        }
        weight *= discount;
    }
    Ok(row)
}

/// How one attribute column is encoded across both graphs.
#[derive(Debug, Clone, PartialEq)]
pub enum AttributeEncoding {
    /// One column per category, in sorted category order.
    OneHot { categories: Vec<String> },
    /// Single column, min-max normalized to [0, 1].
    Numeric { min: f64, max: f64 },
}

impl AttributeEncoding {
    fn width(&self) -> usize {
        match self {
            AttributeEncoding::OneHot { categories } => categories.len(),
            AttributeEncoding::Numeric { .. } => 1,
        }
    }
}

/// Feature rows for every node of two graphs: first all of `g1`, then all
/// of `g2`.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    structural: Array2<f64>,
    attribute: Option<Array2<f64>>,
    encodings: Vec<AttributeEncoding>,
    n1: usize,
    n2: usize,
}

impl FeatureMatrix {
    /// Extract features for a graph pair. `max_hops` is the neighborhood
    /// radius and `discount` the per-hop geometric weight. Attribute
    /// features are built only when both graphs carry attributes of equal
    /// arity.
    pub fn build(g1: &Graph, g2: &Graph, max_hops: usize, discount: f64) -> Result<Self> {
        let m = bin_count(g1.max_degree().max(g2.max_degree()));
        let n1 = g1.node_count();
        let n2 = g2.node_count();

        let rows: Vec<Vec<f64>> = (0..n1 + n2)
            .into_par_iter()
            .map(|i| {
                if i < n1 {
                    structural_feature(g1, i, max_hops, discount, m)
                } else {
                    structural_feature(g2, i - n1, max_hops, discount, m)
                }
            })
            .collect::<Result<_>>()?;
        let mut structural = Array2::zeros((n1 + n2, m));
        for (i, row) in rows.into_iter().enumerate() {
            structural.row_mut(i).assign(&ndarray::Array1::from(row));
        }

        let (attribute, encodings) = match (g1.attributes(), g2.attributes()) {
            (Some(a1), Some(a2)) => {
                if a1.arity() != a2.arity() {
                    return Err(Error::invalid_parameter(
                        "attributes",
                        format!("arity differs between graphs: {} vs {}", a1.arity(), a2.arity()),
                    ));
                }
                let (y, enc) = encode_attributes(g1, g2)?;
                (Some(y), enc)
            }
            _ => (None, Vec::new()),
        };

        Ok(FeatureMatrix {
            structural,
            attribute,
            encodings,
            n1,
            n2,
        })
    }

    pub fn structural(&self) -> ArrayView2<'_, f64> {
        self.structural.view()
    }

    pub fn attribute(&self) -> Option<ArrayView2<'_, f64>> {
        self.attribute.as_ref().map(|a| a.view())
    }

    pub fn encodings(&self) -> &[AttributeEncoding] {
        &self.encodings
    }

    /// Number of structural columns (log-degree bins).
    pub fn bin_count(&self) -> usize {
        self.structural.ncols()
    }

    /// Number of attribute columns.
    pub fn attr_width(&self) -> usize {
        self.attribute.as_ref().map(|a| a.ncols()).unwrap_or(0)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Joint row index of a node of the first graph.
    pub fn row_of_g1(&self, v: NodeId) -> usize {
        debug_assert!(v < self.n1);
        v
    }

    /// Joint row index of a node of the second graph.
    pub fn row_of_g2(&self, v: NodeId) -> usize {
        debug_assert!(v < self.n2);
        self.n1 + v
    }

    /// Dump structural (and, when present, attribute) rows as CSV with a
    /// leading label column.
    pub fn write_csv(&self, path: impl AsRef<Path>, g1: &Graph, g2: &Graph) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("node");
        for j in 0..self.bin_count() {
            out.push_str(&format!(",x{j}"));
        }
        for j in 0..self.attr_width() {
            out.push_str(&format!(",y{j}"));
        }
        out.push('\n');
        for i in 0..self.n1 + self.n2 {
            let label = if i < self.n1 {
                g1.label(i)
            } else {
                g2.label(i - self.n1)
            };
            out.push_str(label);
            for v in self.structural.row(i) {
                out.push_str(&format!(",{v}"));
            }
            if let Some(y) = &self.attribute {
                for v in y.row(i) {
                    out.push_str(&format!(",{v}"));
                }
            }
            out.push('\n');
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Category sets per attribute over the union of both graphs, sorted for a
/// stable column order.
pub fn category_sets(g1: &Graph, g2: &Graph) -> Vec<Vec<String>> {
    let arity = g1.attributes().map(|a| a.arity()).unwrap_or(0);
    let mut sets: Vec<BTreeSet<String>> = vec![BTreeSet::new(); arity];
    for g in [g1, g2] {
        if let Some(attrs) = g.attributes() {
            for row in attrs.rows() {
                for (i, v) in row.iter().enumerate() {
                    sets[i].insert(v.clone());
                }
            }
        }
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// One-hot / min-max encode the attributes of both graphs into a joint
/// matrix (`g1` rows first). An attribute is numeric when every observed
/// value parses as a float; otherwise its values are opaque categories.
pub fn encode_attributes(g1: &Graph, g2: &Graph) -> Result<(Array2<f64>, Vec<AttributeEncoding>)> {
    let sets = category_sets(g1, g2);
    let encodings: Vec<AttributeEncoding> = sets
        .into_iter()
        .map(|categories| {
            let parsed: Option<Vec<f64>> =
                categories.iter().map(|c| c.parse::<f64>().ok()).collect();
            match parsed {
                Some(nums) if !nums.is_empty() => {
                    let min = nums.iter().cloned().fold(f64::INFINITY, f64::min);
                    let max = nums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    AttributeEncoding::Numeric { min, max }
                }
                _ => AttributeEncoding::OneHot { categories },
            }
        })
        .collect();

    let width: usize = encodings.iter().map(AttributeEncoding::width).sum();
    let n1 = g1.node_count();
    let n2 = g2.node_count();
    let mut y = Array2::zeros((n1 + n2, width));

    let mut encode_row = |row_idx: usize, values: &[String]| -> Result<()> {
        let mut col = 0;
        for (enc, value) in encodings.iter().zip(values) {
            match enc {
                AttributeEncoding::OneHot { categories } => {
                    let pos = categories
                        .binary_search(value)
                        .map_err(|_| Error::UnknownLabel(value.clone()))?;
                    y[[row_idx, col + pos]] = 1.0;
                    col += categories.len();
                }
                AttributeEncoding::Numeric { min, max } => {
                    let x: f64 = value.parse().map_err(|_| Error::UnknownLabel(value.clone()))?;
                    y[[row_idx, col]] = if max > min { (x - min) / (max - min) } else { 0.0 };
                    col += 1;
                }
            }
        }
        Ok(())
    };

    for v in 0..n1 {
        encode_row(v, g1.attributes().unwrap().row(v))?;
    }
    for v in 0..n2 {
        encode_row(n1 + v, g2.attributes().unwrap().row(v))?;
    }
    Ok((y, encodings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn log_bin_values() {
        assert_eq!(log_bin(1), 0);
        assert_eq!(log_bin(2), 1);
        assert_eq!(log_bin(3), 2);
        assert_eq!(log_bin(4), 2);
        assert_eq!(log_bin(5), 3);
        assert_eq!(log_bin(8), 3);
        assert_eq!(log_bin(9), 4);
    }

    #[test]
    fn bin_count_covers_max_degree() {
        for max_deg in 1..200 {
            let m = bin_count(max_deg);
            for d in 1..=max_deg {
                assert!(log_bin(d) < m, "degree {d} escapes {m} bins (max {max_deg})");
            }
        }
    }

    #[test]
    fn hop_degree_vector_on_path_center() {
        // a-b-c: b's 1-hop neighbors a and c both have degree 1.
        let g = Graph::from_labeled_edges([("a", "b"), ("b", "c")]);
        let b = g.node_by_label("b").unwrap();
        let m = bin_count(g.max_degree());
        let d1 = hop_degree_vector(&g, b, 1, m).unwrap();
        assert_eq!(d1[0], 2.0);
        assert_eq!(d1.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn hop_degree_vector_star_center() {
        let g = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]);
        let m = bin_count(g.max_degree());
        let d1 = hop_degree_vector(&g, 0, 1, m).unwrap();
        assert_eq!(d1[0], 4.0);
    }

    #[test]
    fn hop_degree_vector_empty_ring_is_zero() {
        let g = Graph::from_labeled_edges([("a", "b")]);
        let m = bin_count(g.max_degree());
        let d = hop_degree_vector(&g, 0, 3, m).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn structural_feature_discounts_by_hop() {
        // a-b-c from a: b (deg 2) at hop 1 -> bin 1; c (deg 1) at hop 2 -> bin 0.
        let g = Graph::from_labeled_edges([("a", "b"), ("b", "c")]);
        let a = g.node_by_label("a").unwrap();
        let m = bin_count(g.max_degree());
        let d = structural_feature(&g, a, 2, 0.01, m).unwrap();
        assert_eq!(d[1], 1.0);
        assert_eq!(d[0], 0.01);
    }

    #[test]
    fn single_hop_equals_hop_vector() {
        let g = synth::preferential_attachment(40, 2, 1);
        let m = bin_count(g.max_degree());
        for v in 0..g.node_count() {
            assert_eq!(
                structural_feature(&g, v, 1, 0.37, m).unwrap(),
                hop_degree_vector(&g, v, 1, m).unwrap()
            );
        }
    }

    #[test]
    fn unit_discount_counts_ring_union() {
        let g = synth::preferential_attachment(30, 2, 2);
        let m = bin_count(g.max_degree());
        for v in 0..g.node_count() {
            let d = structural_feature(&g, v, 2, 1.0, m).unwrap();
            let total: f64 = d.iter().sum();
            let expected = (g.khop_neighbors(v, 1).unwrap().len()
                + g.khop_neighbors(v, 2).unwrap().len()) as f64;
            assert_eq!(total, expected);
        }
    }

    #[test]
    fn l1_norm_matches_discounted_ring_sizes() {
        let g = synth::preferential_attachment(50, 3, 7);
        let m = bin_count(g.max_degree());
        let gamma = 0.3;
        for v in 0..g.node_count() {
            let d = structural_feature(&g, v, 3, gamma, m).unwrap();
            let l1: f64 = d.iter().sum();
            let expected: f64 = (1..=3)
                .map(|k| gamma.powi(k as i32 - 1) * g.khop_neighbors(v, k).unwrap().len() as f64)
                .sum();
            assert!((l1 - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn matched_pairs_have_identical_rows_at_zero_noise() {
        let g1 = synth::preferential_attachment(80, 3, 5);
        let (g2, truth) = synth::permute(&g1, 11);
        let fm = FeatureMatrix::build(&g1, &g2, 2, 0.01).unwrap();
        for (v, u) in truth.pairs() {
            let r1 = fm.structural().row(fm.row_of_g1(v)).to_owned();
            let r2 = fm.structural().row(fm.row_of_g2(u)).to_owned();
            assert_eq!(r1, r2, "rows differ for pair ({v}, {u})");
        }
    }

    #[test]
    fn one_hot_encoding_shape_and_rows() {
        let g1 = Graph::from_edges(2, [(0, 1)])
            .with_attributes(vec![
                vec!["x".into(), "p".into()],
                vec!["y".into(), "q".into()],
            ])
            .unwrap();
        let g2 = Graph::from_edges(2, [(0, 1)])
            .with_attributes(vec![
                vec!["x".into(), "r".into()],
                vec!["x".into(), "p".into()],
            ])
            .unwrap();
        let fm = FeatureMatrix::build(&g1, &g2, 1, 1.0).unwrap();
        // Attribute 0 has categories {x, y}; attribute 1 has {p, q, r}.
        assert_eq!(fm.attr_width(), 5);
        let y = fm.attribute().unwrap();
        assert_eq!(y.row(0).to_vec(), vec![1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(y.row(1).to_vec(), vec![0.0, 1.0, 0.0, 1.0, 0.0]);
        // Per-attribute blocks sum to exactly 1 in every row.
        for i in 0..4 {
            assert_eq!(y.row(i).iter().take(2).sum::<f64>(), 1.0);
            assert_eq!(y.row(i).iter().skip(2).sum::<f64>(), 1.0);
        }
        // Identical attribute rows encode identically.
        assert_eq!(y.row(0).to_vec(), y.row(3).to_vec());
    }

    #[test]
    fn numeric_attributes_are_min_max_normalized() {
        let g1 = Graph::from_edges(2, [(0, 1)])
            .with_attributes(vec![vec!["1.0".into()], vec!["3.0".into()]])
            .unwrap();
        let g2 = Graph::from_edges(2, [(0, 1)])
            .with_attributes(vec![vec!["5.0".into()], vec!["3.0".into()]])
            .unwrap();
        let fm = FeatureMatrix::build(&g1, &g2, 1, 1.0).unwrap();
        assert_eq!(fm.attr_width(), 1);
        let y = fm.attribute().unwrap();
        assert_eq!(y.row(0)[0], 0.0);
        assert_eq!(y.row(1)[0], 0.5);
        assert_eq!(y.row(2)[0], 1.0);
        assert_eq!(y.row(3)[0], 0.5);
    }
}
