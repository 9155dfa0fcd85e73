//! Node alignment between two (optionally compressed) graphs.
//!
//! Similarity is `exp(-squared euclidean distance)` over embedding rows,
//! optionally extended with a weighted attribute term. Ranking by
//! similarity equals ranking by distance, so candidate retrieval can run
//! either exhaustively or through a k-d tree with identical results.

mod kdtree;

pub use kdtree::KdTree;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::compress::CompressedGraph;
use crate::embed::{self, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Structural similarity of two embedding rows:
/// `exp(-||a - b||^2)`, in `(0, 1]`.
pub fn similarity(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "similarity of rows with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let d2: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum();
    Ok((-d2).exp())
}

/// Attribute-aware similarity:
/// `exp(-g1 * ||a_emb - b_emb||^2 - g2 * ||a_attr - b_attr||^2)`.
pub fn similarity_attributed(
    a_emb: ArrayView1<f64>,
    b_emb: ArrayView1<f64>,
    a_attr: ArrayView1<f64>,
    b_attr: ArrayView1<f64>,
    gamma1: f64,
    gamma2: f64,
) -> Result<f64> {
    if a_emb.len() != b_emb.len() || a_attr.len() != b_attr.len() {
        return Err(Error::DimensionMismatch(
            "attributed similarity of unequal rows".to_string(),
        ));
    }
    let d = |x: ArrayView1<f64>, y: ArrayView1<f64>| -> f64 {
        x.iter()
            .zip(y.iter())
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum()
    };
    Ok((-gamma1 * d(a_emb, b_emb) - gamma2 * d(a_attr, b_attr)).exp())
}

/// Candidate retrieval strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    KdTree,
    Exhaustive,
}

/// Rank, for every row of `src`, the `k` most similar rows of `dst`.
///
/// Scores are `exp(-distance^2)`; both modes order by ascending distance
/// with lower row index breaking ties, so their output is identical.
pub fn align_sets(
    src: &Array2<f64>,
    dst: &Array2<f64>,
    k: usize,
    mode: SearchMode,
) -> Vec<Vec<(usize, f64)>> {
    if dst.nrows() == 0 || k == 0 {
        return vec![Vec::new(); src.nrows()];
    }
    let k = k.min(dst.nrows());
    match mode {
        SearchMode::KdTree => {
            let tree = KdTree::build(dst.view());
            (0..src.nrows())
                .into_par_iter()
                .map(|i| {
                    let query: Vec<f64> = src.row(i).to_vec();
                    tree.nearest(&query, k)
                        .into_iter()
                        .map(|(idx, d2)| (idx, (-d2).exp()))
                        .collect()
                })
                .collect()
        }
        SearchMode::Exhaustive => (0..src.nrows())
            .into_par_iter()
            .map(|i| {
                let row = src.row(i);
                let mut dists: Vec<(usize, f64)> = (0..dst.nrows())
                    .map(|j| (j, kdtree::squared_distance(row.as_slice().unwrap(), dst.row(j))))
                    .collect();
                let by_dist_then_idx = |a: &(usize, f64), b: &(usize, f64)| {
                    a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0))
                };
                if k < dists.len() {
                    dists.select_nth_unstable_by(k, by_dist_then_idx);
                    dists.truncate(k);
                }
                dists.sort_by(by_dist_then_idx);
                dists.into_iter().map(|(j, d2)| (j, (-d2).exp())).collect()
            })
            .collect(),
    }
}

/// Where a node's candidates were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Uncompressed,
    Supernode,
    Subnode,
}

/// Ranked candidates for one node.
#[derive(Debug, Clone)]
pub struct NodeMatches {
    pub stage: Stage,
    pub candidates: Vec<(NodeId, f64)>,
}

/// Wall-clock seconds spent in each alignment stage.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct StageTimings {
    pub uncompressed_s: f64,
    pub supernode_s: f64,
    pub subnode_s: f64,
}

/// Full alignment of the first graph's original nodes onto the second's,
/// plus the supernode-level matches that guided sub-node expansion.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    /// Indexed by first-graph original node id.
    pub per_node: Vec<NodeMatches>,
    /// Supernode id of the first graph with its ranked counterparts.
    pub supernode_matches: Vec<(NodeId, Vec<(NodeId, f64)>)>,
    pub timings: StageTimings,
    /// Stages that could not run (for example no supernodes on one side).
    pub skipped: Vec<String>,
}

/// Knobs for [`align_compressed`].
#[derive(Debug, Clone)]
pub struct AlignOptions {
    /// Candidate list lengths to report; the maximum sets the list length.
    pub alphas: Vec<usize>,
    /// How many counterpart supernodes contribute sub-node candidates.
    pub beta: usize,
    pub gamma1: f64,
    pub gamma2: f64,
    pub mode: SearchMode,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            alphas: vec![1, 5, 10],
            beta: 1,
            gamma1: 1.0,
            gamma2: 1.0,
            mode: SearchMode::KdTree,
        }
    }
}

/// Mean embedding per supernode of a compressed graph, using the rows of
/// the original nodes merged into it.
pub fn supernode_embeddings(
    cg: &CompressedGraph,
    z: &EmbeddingMatrix,
    side: crate::compress::Side,
) -> Result<BTreeMap<NodeId, Array1<f64>>> {
    let mut out = BTreeMap::new();
    for (&s, subs) in cg.table() {
        let rows = subs.iter().map(|&v| match side {
            crate::compress::Side::First => z.row_g1(v),
            crate::compress::Side::Second => z.row_g2(v),
        });
        out.insert(s, embed::supernode_embedding(rows, z.dim())?);
    }
    Ok(out)
}

/// Stack Eq.4-style rows (embeddings only) for a list of nodes.
fn embedding_rows(
    ids: &[NodeId],
    fetch: impl Fn(NodeId) -> Array1<f64>,
    dim: usize,
) -> Array2<f64> {
    let mut out = Array2::zeros((ids.len(), dim));
    for (i, &v) in ids.iter().enumerate() {
        out.row_mut(i).assign(&fetch(v));
    }
    out
}

struct RowSource<'a> {
    z: &'a EmbeddingMatrix,
    y: Option<&'a Array2<f64>>,
    gamma1: f64,
    gamma2: f64,
}

impl RowSource<'_> {
    fn dim(&self) -> usize {
        self.z.dim() + self.y.map(|y| y.ncols()).unwrap_or(0)
    }

    /// Row whose squared distance realizes
    /// `gamma1 * Dis_emb + gamma2 * Dis_attr` (plain embedding when no
    /// attributes are present).
    fn original_row(&self, joint_row: usize) -> Array1<f64> {
        match self.y {
            None => self.z.values().row(joint_row).to_owned(),
            Some(y) => {
                let s1 = self.gamma1.sqrt();
                let s2 = self.gamma2.sqrt();
                let mut out = Array1::zeros(self.dim());
                let zdim = self.z.dim();
                for (j, v) in self.z.values().row(joint_row).iter().enumerate() {
                    out[j] = s1 * v;
                }
                for (j, v) in y.row(joint_row).iter().enumerate() {
                    out[zdim + j] = s2 * v;
                }
                out
            }
        }
    }
}

/// Align two compressed graphs: uncompressed nodes first, then supernodes,
/// then the sub-nodes of each supernode against those of its top-`beta`
/// counterparts. Every original first-graph node ends up with one
/// candidate list.
#[allow(clippy::too_many_arguments)]
pub fn align_compressed(
    cg1: &CompressedGraph,
    cg2: &CompressedGraph,
    z: &EmbeddingMatrix,
    y: Option<&Array2<f64>>,
    sup1: &BTreeMap<NodeId, Array1<f64>>,
    sup2: &BTreeMap<NodeId, Array1<f64>>,
    opts: &AlignOptions,
) -> Result<AlignmentResult> {
    let alpha_max = opts.alphas.iter().copied().max().unwrap_or(1).max(1);
    let n1 = z.n1();
    let mut per_node = vec![
        NodeMatches {
            stage: Stage::Uncompressed,
            candidates: Vec::new(),
        };
        n1
    ];
    let mut skipped = Vec::new();
    let mut timings = StageTimings::default();

    let rows = RowSource {
        z,
        y,
        gamma1: opts.gamma1,
        gamma2: opts.gamma2,
    };

    // Uncompressed originals against uncompressed originals.
    let c1 = cg1.uncompressed_nodes();
    let c2 = cg2.uncompressed_nodes();
    let start = Instant::now();
    if c1.is_empty() || c2.is_empty() {
        skipped.push("uncompressed".to_string());
    } else {
        let src = embedding_rows(&c1, |v| rows.original_row(v), rows.dim());
        let dst = embedding_rows(&c2, |v| rows.original_row(n1 + v), rows.dim());
        let ranked = align_sets(&src, &dst, alpha_max, opts.mode);
        for (i, list) in ranked.into_iter().enumerate() {
            per_node[c1[i]] = NodeMatches {
                stage: Stage::Uncompressed,
                candidates: list.into_iter().map(|(j, s)| (c2[j], s)).collect(),
            };
        }
    }
    timings.uncompressed_s = start.elapsed().as_secs_f64();

    // Mark nodes merged on the first side so they report the right stage
    // even when expansion is impossible.
    for subs in cg1.table().values() {
        for &v in subs {
            per_node[v].stage = Stage::Subnode;
        }
    }

    // Supernodes against supernodes, structural similarity only.
    let u1 = cg1.supernodes();
    let u2 = cg2.supernodes();
    let mut supernode_matches: Vec<(NodeId, Vec<(NodeId, f64)>)> = Vec::new();
    let start = Instant::now();
    if u1.is_empty() || u2.is_empty() {
        skipped.push("supernode".to_string());
        if !u1.is_empty() {
            skipped.push("subnode".to_string());
        }
    } else {
        let k = alpha_max.max(opts.beta);
        let src = embedding_rows(&u1, |s| sup1[&s].clone(), z.dim());
        let dst = embedding_rows(&u2, |s| sup2[&s].clone(), z.dim());
        let ranked = align_sets(&src, &dst, k, opts.mode);
        for (i, list) in ranked.into_iter().enumerate() {
            supernode_matches.push((
                u1[i],
                list.into_iter().map(|(j, s)| (u2[j], s)).collect(),
            ));
        }
    }
    timings.supernode_s = start.elapsed().as_secs_f64();

    // Sub-nodes of each supernode against the pooled sub-nodes of its
    // top-beta counterparts. Pools are small, so this runs exhaustively.
    let start = Instant::now();
    for (s1, counterparts) in &supernode_matches {
        let members: Vec<NodeId> = cg1
            .sub_nodes(*s1)
            .expect("supernode has sub-nodes")
            .iter()
            .copied()
            .collect();
        let mut pool: BTreeSet<NodeId> = BTreeSet::new();
        for (s2, _) in counterparts.iter().take(opts.beta) {
            pool.extend(cg2.sub_nodes(*s2).expect("supernode has sub-nodes"));
        }
        let pool: Vec<NodeId> = pool.into_iter().collect();
        if pool.is_empty() {
            continue;
        }
        let src = embedding_rows(&members, |v| rows.original_row(v), rows.dim());
        let dst = embedding_rows(&pool, |v| rows.original_row(n1 + v), rows.dim());
        let ranked = align_sets(&src, &dst, alpha_max, SearchMode::Exhaustive);
        for (i, list) in ranked.into_iter().enumerate() {
            per_node[members[i]] = NodeMatches {
                stage: Stage::Subnode,
                candidates: list.into_iter().map(|(j, s)| (pool[j], s)).collect(),
            };
        }
    }
    timings.subnode_s = start.elapsed().as_secs_f64();

    Ok(AlignmentResult {
        per_node,
        supernode_matches,
        timings,
        skipped,
    })
}

/// Alignment quality against a ground truth.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Metrics {
    /// Fraction of ground-truth nodes whose top candidate is correct.
    pub accuracy: f64,
    /// `(alpha, fraction correct within the top alpha)` pairs.
    pub top_alpha: Vec<(usize, f64)>,
    /// Ground-truth domain size (the denominator).
    pub truth_size: usize,
}

/// Score a result against ground truth: top-1 accuracy plus top-alpha
/// accuracy for each requested alpha.
pub fn score(
    result: &AlignmentResult,
    truth: &crate::synth::GroundTruth,
    alphas: &[usize],
) -> Result<Metrics> {
    let total = truth.len();
    if total == 0 {
        return Err(Error::invalid_parameter(
            "truth",
            "ground truth is empty",
        ));
    }
    let mut top1 = 0usize;
    let mut correct: Vec<usize> = vec![0; alphas.len()];
    for (v, u) in truth.pairs() {
        let candidates = result
            .per_node
            .get(v)
            .map(|m| m.candidates.as_slice())
            .unwrap_or(&[]);
        if candidates.first().map(|&(c, _)| c) == Some(u) {
            top1 += 1;
        }
        for (ai, &a) in alphas.iter().enumerate() {
            if candidates.iter().take(a).any(|&(c, _)| c == u) {
                correct[ai] += 1;
            }
        }
    }
    Ok(Metrics {
        accuracy: top1 as f64 / total as f64,
        top_alpha: alphas
            .iter()
            .zip(correct)
            .map(|(&a, c)| (a, c as f64 / total as f64))
            .collect(),
        truth_size: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::{self, GuidingList};
    use crate::features::FeatureMatrix;
    use crate::graph::Graph;
    use crate::synth;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    #[test]
    fn similarity_closed_forms() {
        let a = array![1.0, 2.0];
        assert_eq!(similarity(a.view(), a.view()).unwrap(), 1.0);

        let b = array![0.0, 0.0];
        let c = array![1.0, 0.0];
        assert_abs_diff_eq!(
            similarity(b.view(), c.view()).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );

        let d = array![3.0, 4.0];
        assert_abs_diff_eq!(
            similarity(b.view(), d.view()).unwrap(),
            (-25.0f64).exp(),
            epsilon = 1e-20
        );
    }

    #[test]
    fn similarity_is_symmetric_and_checked() {
        let a = array![0.3, -1.2, 0.8];
        let b = array![1.1, 0.2, -0.4];
        assert_eq!(
            similarity(a.view(), b.view()).unwrap(),
            similarity(b.view(), a.view()).unwrap()
        );
        let short = array![1.0];
        assert!(similarity(a.view(), short.view()).is_err());
    }

    #[test]
    fn attributed_similarity_closed_forms() {
        let e = array![1.0, 0.0];
        let f = array![1.0, 0.0];
        assert_eq!(
            similarity_attributed(e.view(), f.view(), e.view(), f.view(), 1.0, 1.0).unwrap(),
            1.0
        );

        // Dis1 = Dis2 = 0.5 with unit weights: exponent sums to -1.
        let a_emb = array![0.0];
        let b_emb = array![0.5f64.sqrt()];
        assert_abs_diff_eq!(
            similarity_attributed(
                a_emb.view(),
                b_emb.view(),
                a_emb.view(),
                b_emb.view(),
                1.0,
                1.0
            )
            .unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );

        // gamma2 = 0 degenerates to the structural form.
        let x = array![0.2, 0.4];
        let y = array![-0.1, 0.9];
        let attr_a = array![1.0, 0.0];
        let attr_b = array![0.0, 1.0];
        assert_abs_diff_eq!(
            similarity_attributed(x.view(), y.view(), attr_a.view(), attr_b.view(), 1.0, 0.0)
                .unwrap(),
            similarity(x.view(), y.view()).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn align_sets_finds_exact_copy() {
        let src = array![[0.5, 0.5]];
        let dst = array![[9.0, 9.0], [0.5, 0.5], [1.0, 0.0]];
        for mode in [SearchMode::Exhaustive, SearchMode::KdTree] {
            let ranked = align_sets(&src, &dst, 2, mode);
            assert_eq!(ranked[0][0].0, 1);
            assert_eq!(ranked[0][0].1, 1.0);
        }
    }

    #[test]
    fn align_sets_truncates_large_alpha() {
        let src = array![[0.0, 0.0]];
        let dst = array![[1.0, 0.0], [2.0, 0.0]];
        let ranked = align_sets(&src, &dst, 10, SearchMode::Exhaustive);
        assert_eq!(ranked[0].len(), 2);
    }

    #[test]
    fn kd_tree_and_exhaustive_agree_on_random_rows() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let src = Array2::from_shape_fn((200, 8), |_| rng.gen_range(-1.0..1.0));
        let dst = Array2::from_shape_fn((200, 8), |_| rng.gen_range(-1.0..1.0));
        let a = align_sets(&src, &dst, 3, SearchMode::KdTree);
        let b = align_sets(&src, &dst, 3, SearchMode::Exhaustive);
        assert_eq!(a, b);
    }

    fn full_pipeline(
        g1: &Graph,
        g2: &Graph,
        phi: f64,
        opts: &AlignOptions,
    ) -> (AlignmentResult, FeatureMatrix) {
        let fm = FeatureMatrix::build(g1, g2, 2, 0.01).unwrap();
        let (z, _) = crate::embed::embed_pair(
            g1,
            g2,
            &fm,
            16,
            None,
            2,
            7,
            crate::embed::Activation::Tanh,
        )
        .unwrap();
        let (cg1, cg2) = if phi > 0.0 {
            let (q1, q2) = compress::make_guiding_lists(g1, g2, &z, 3, 0.98, 100);
            (
                compress::merge(g1, &q1, phi).unwrap(),
                compress::merge(g2, &q2, phi).unwrap(),
            )
        } else {
            (compress::uncompressed(g1), compress::uncompressed(g2))
        };
        let sup1 = supernode_embeddings(&cg1, &z, compress::Side::First).unwrap();
        let sup2 = supernode_embeddings(&cg2, &z, compress::Side::Second).unwrap();
        let y = fm.attribute().map(|v| v.to_owned());
        let result =
            align_compressed(&cg1, &cg2, &z, y.as_ref(), &sup1, &sup2, opts).unwrap();
        (result, fm)
    }

    #[test]
    fn zero_noise_pair_aligns_perfectly_without_compression() {
        // attach = 3 keeps this instance free of automorphic twins, which
        // no structural method can tell apart.
        let g1 = synth::preferential_attachment(50, 3, 33);
        let (g2, truth) = synth::permute(&g1, 44);
        let opts = AlignOptions::default();
        let (result, _) = full_pipeline(&g1, &g2, 0.0, &opts);
        assert!(result.skipped.contains(&"supernode".to_string()));
        let metrics = score(&result, &truth, &[1, 5]).unwrap();
        assert_eq!(metrics.accuracy, 1.0);
    }

    #[test]
    fn no_compression_reduces_to_plain_align_sets() {
        let g1 = synth::preferential_attachment(30, 2, 3);
        let (g2, _) = synth::permute(&g1, 9);
        let opts = AlignOptions {
            alphas: vec![1, 3],
            ..Default::default()
        };
        let (result, fm) = full_pipeline(&g1, &g2, 0.0, &opts);

        let (z, _) = crate::embed::embed_pair(
            &g1,
            &g2,
            &fm,
            16,
            None,
            2,
            7,
            crate::embed::Activation::Tanh,
        )
        .unwrap();
        let (z1, z2) = z.split();
        let direct = align_sets(&z1.to_owned(), &z2.to_owned(), 3, SearchMode::KdTree);
        for v in 0..30 {
            let got: Vec<(usize, f64)> = result.per_node[v].candidates.clone();
            assert_eq!(got, direct[v]);
        }
    }

    #[test]
    fn compressed_alignment_covers_every_node_once() {
        let g1 = synth::preferential_attachment(120, 3, 1);
        let (g2, truth) = synth::permute(&g1, 2);
        let opts = AlignOptions::default();
        let (result, _) = full_pipeline(&g1, &g2, 0.2, &opts);
        assert_eq!(result.per_node.len(), 120);
        // Merged nodes are tagged subnode, the rest uncompressed.
        let subnode_count = result
            .per_node
            .iter()
            .filter(|m| m.stage == Stage::Subnode)
            .count();
        assert!(subnode_count > 0, "expected some compression");
        let metrics = score(&result, &truth, &[1, 5, 10]).unwrap();
        // Nesting of top-alpha accuracy.
        assert!(metrics.top_alpha[0].1 <= metrics.top_alpha[1].1);
        assert!(metrics.top_alpha[1].1 <= metrics.top_alpha[2].1);
        assert_eq!(metrics.accuracy, metrics.top_alpha[0].1);
    }

    #[test]
    fn score_trivial_cases() {
        let truth = synth::GroundTruth::from_map(vec![Some(0), Some(1)]);
        let perfect = AlignmentResult {
            per_node: vec![
                NodeMatches {
                    stage: Stage::Uncompressed,
                    candidates: vec![(0, 1.0)],
                },
                NodeMatches {
                    stage: Stage::Uncompressed,
                    candidates: vec![(1, 0.9)],
                },
            ],
            supernode_matches: Vec::new(),
            timings: StageTimings::default(),
            skipped: Vec::new(),
        };
        assert_eq!(score(&perfect, &truth, &[1]).unwrap().accuracy, 1.0);

        let empty = AlignmentResult {
            per_node: vec![
                NodeMatches {
                    stage: Stage::Uncompressed,
                    candidates: Vec::new(),
                },
                NodeMatches {
                    stage: Stage::Uncompressed,
                    candidates: Vec::new(),
                },
            ],
            supernode_matches: Vec::new(),
            timings: StageTimings::default(),
            skipped: Vec::new(),
        };
        assert_eq!(score(&empty, &truth, &[1]).unwrap().accuracy, 0.0);

        let no_truth = synth::GroundTruth::from_map(vec![None, None]);
        assert!(score(&perfect, &no_truth, &[1]).is_err());
    }
}
