//! Minimal k-d tree over dense f64 rows for k-nearest-neighbor queries in
//! squared Euclidean distance.
//!
//! Ties are broken toward the lower row index, matching the exhaustive
//! scan exactly, so callers may switch between the two search modes
//! without changing results.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::ArrayView2;

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Candidate neighbor ordered by (distance, index); the heap keeps the
/// worst candidate on top.
#[derive(Debug, PartialEq)]
struct Neighbor {
    dist: f64,
    idx: usize,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .partial_cmp(&other.dist)
            .expect("distances are finite")
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub struct KdTree<'a> {
    points: ArrayView2<'a, f64>,
    indices: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

impl<'a> KdTree<'a> {
    /// Build over all rows of `points`.
    pub fn build(points: ArrayView2<'a, f64>) -> Self {
        let mut indices: Vec<usize> = (0..points.nrows()).collect();
        let mut nodes = Vec::new();
        let dim = points.ncols().max(1);
        let root = build_node(&points, &mut indices, &mut nodes, 0, points.nrows(), 0, dim);
        KdTree {
            points,
            indices,
            nodes,
            root,
        }
    }

    /// The `k` nearest rows to `query`, ascending by (distance, index).
    pub fn nearest(&self, query: &[f64], k: usize) -> Vec<(usize, f64)> {
        if self.points.nrows() == 0 || k == 0 {
            return Vec::new();
        }
        let k = k.min(self.points.nrows());
        let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
        self.search(self.root, query, k, &mut heap);
        let mut out: Vec<(usize, f64)> = heap
            .into_sorted_vec()
            .into_iter()
            .map(|n| (n.idx, n.dist))
            .collect();
        out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        out
    }

    fn search(&self, node: usize, query: &[f64], k: usize, heap: &mut BinaryHeap<Neighbor>) {
        match &self.nodes[node] {
            Node::Leaf { start, end } => {
                for &idx in &self.indices[*start..*end] {
                    let dist = squared_distance(query, self.points.row(idx));
                    let candidate = Neighbor { dist, idx };
                    if heap.len() < k {
                        heap.push(candidate);
                    } else if candidate < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(candidate);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[*axis] - value;
                let (near, far) = if diff < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.search(near, query, k, heap);
                let plane = diff * diff;
                // The far side may still hold an equal-distance candidate
                // with a lower index, so only a strictly farther plane
                // can be pruned.
                let worst = heap.peek().map(|n| n.dist).unwrap_or(f64::INFINITY);
                if heap.len() < k || plane <= worst {
                    self.search(far, query, k, heap);
                }
            }
        }
    }
}

fn build_node(
    points: &ArrayView2<f64>,
    indices: &mut [usize],
    nodes: &mut Vec<Node>,
    start: usize,
    end: usize,
    depth: usize,
    dim: usize,
) -> usize {
    let len = end - start;
    if len <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return nodes.len() - 1;
    }
    let axis = depth % dim;
    let local = &mut indices[start..end];
    let mid = len / 2;
    local.select_nth_unstable_by(mid, |&a, &b| {
        points[[a, axis]]
            .partial_cmp(&points[[b, axis]])
            .unwrap()
            .then(a.cmp(&b))
    });
    let value = points[[local[mid], axis]];
    let left = build_node(points, indices, nodes, start, start + mid, depth + 1, dim);
    let right = build_node(points, indices, nodes, start + mid, end, depth + 1, dim);
    nodes.push(Node::Split {
        axis,
        value,
        left,
        right,
    });
    nodes.len() - 1
}

pub fn squared_distance(a: &[f64], b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}
