//! Shared-space node embeddings from an untrained graph-convolution
//! forward pass.
//!
//! Both graphs are joined into one block-diagonal adjacency matrix, self
//! loops are added, and the symmetric normalization `D^-1/2 (A+I) D^-1/2`
//! is propagated through a few tanh layers with fixed random weights. No
//! training takes place; the seed is part of the run configuration.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Sparse symmetric matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    n: usize,
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Right-multiply by a dense matrix. Rows of the output are computed
    /// independently (and in parallel); within a row the nonzeros are
    /// accumulated in column order, so the result does not depend on the
    /// thread count.
    pub fn mul_dense(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(self.n, x.nrows(), "dimension mismatch in sparse product");
        let p = x.ncols();
        let mut out = Array2::zeros((self.n, p));
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut row)| {
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let a = self.vals[k];
                    let src = x.row(self.cols[k]);
                    for (o, &s) in row.iter_mut().zip(src.iter()) {
                        *o += a * s;
                    }
                }
            });
        out
    }

    pub fn mul_vec(&self, x: &ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(self.n, x.len());
        let mut out = Array1::zeros(self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            out[i] = acc;
        }
        out
    }
}

/// Symmetrically normalized adjacency of the disjoint union of two graphs,
/// with self-loops: entry `(i, j)` is `1 / sqrt((deg(i)+1)(deg(j)+1))` for
/// `i = j` or `i ~ j`, and 0 otherwise. The first graph occupies rows
/// `0..n1`, the second `n1..n1+n2`.
pub fn normalized_joint_adjacency(g1: &Graph, g2: &Graph) -> CsrMatrix {
    let n1 = g1.node_count();
    let n = n1 + g2.node_count();

    let degree = |i: usize| -> f64 {
        let d = if i < n1 {
            g1.degree(i)
        } else {
            g2.degree(i - n1)
        };
        (d + 1) as f64
    };

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        let di = degree(i);
        let neighbors: &[NodeId] = if i < n1 {
            g1.neighbors(i)
        } else {
            g2.neighbors(i - n1)
        };
        let offset = if i < n1 { 0 } else { n1 };
        // Neighbor lists are sorted; weave the diagonal entry in place.
        let mut diagonal_written = false;
        for &u in neighbors {
            let j = u + offset;
            if !diagonal_written && i < j {
                cols.push(i);
                vals.push(1.0 / di);
                diagonal_written = true;
            }
            cols.push(j);
            vals.push(1.0 / (di * degree(j)).sqrt());
        }
        if !diagonal_written {
            cols.push(i);
            vals.push(1.0 / di);
        }
        row_ptr.push(cols.len());
    }
    CsrMatrix {
        row_ptr,
        cols,
        vals,
        n,
    }
}

/// Uniform Glorot initialization: samples in
/// `[-sqrt(6/(d_in+d_out)), +sqrt(6/(d_in+d_out))]`, deterministic per
/// `(d_in, d_out, seed)`.
pub fn glorot_init(d_in: usize, d_out: usize, seed: u64) -> Array2<f64> {
    assert!(d_in >= 1 && d_out >= 1);
    let bound = (6.0 / (d_in + d_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Array2::zeros((d_in, d_out));
    for i in 0..d_in {
        for j in 0..d_out {
            w[[i, j]] = dist.sample(&mut rng);
        }
    }
    w
}

/// Activation applied after every graph-convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: &mut Array2<f64>) {
        match self {
            Activation::Tanh => x.mapv_inplace(f64::tanh),
            Activation::Relu => x.mapv_inplace(|v| v.max(0.0)),
        }
    }
}

/// Fixed random layer weights for the forward pass: `m -> h` for the first
/// layer, `h -> h` in between, `h -> p` for the last.
#[derive(Debug, Clone)]
pub struct GcnWeights {
    layers: Vec<Array2<f64>>,
    seed: u64,
}

impl GcnWeights {
    pub fn new(m: usize, h: usize, p: usize, n_layers: usize, seed: u64) -> Result<Self> {
        if n_layers < 1 {
            return Err(Error::invalid_parameter("layers", "must be >= 1"));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let d_in = if l == 0 { m } else { h };
            let d_out = if l == n_layers - 1 { p } else { h };
            layers.push(glorot_init(d_in, d_out, seed.wrapping_add(l as u64)));
        }
        Ok(GcnWeights { layers, seed })
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, l: usize) -> ArrayView2<'_, f64> {
        self.layers[l].view()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().ncols()
    }
}

/// Embedding rows for every node of both graphs, first graph first.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    values: Array2<f64>,
    n1: usize,
    n2: usize,
}

impl EmbeddingMatrix {
    pub fn from_parts(values: Array2<f64>, n1: usize, n2: usize) -> Self {
        assert_eq!(values.nrows(), n1 + n2);
        EmbeddingMatrix { values, n1, n2 }
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row_g1(&self, v: NodeId) -> ArrayView1<'_, f64> {
        debug_assert!(v < self.n1);
        self.values.row(v)
    }

    pub fn row_g2(&self, v: NodeId) -> ArrayView1<'_, f64> {
        debug_assert!(v < self.n2);
        self.values.row(self.n1 + v)
    }

    /// Views of the first and second graph's blocks.
    pub fn split(&self) -> (ArrayView2<'_, f64>, ArrayView2<'_, f64>) {
        self.values.view().split_at(Axis(0), self.n1)
    }

    /// Dump as CSV: node label followed by the embedding row.
    pub fn write_csv(&self, path: impl AsRef<Path>, g1: &Graph, g2: &Graph) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for i in 0..self.n1 + self.n2 {
            let label = if i < self.n1 {
                g1.label(i)
            } else {
                g2.label(i - self.n1)
            };
            out.push_str(label);
            for v in self.values.row(i) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Default embedding width for a given joint maximum degree: twice the
/// structural bin count.
pub fn default_embedding_dim(max_degree: usize) -> usize {
    2 * crate::features::bin_count(max_degree)
}

/// Run the layered forward pass `H <- act(A (H W))` over the joint
/// normalized adjacency and split the result into per-graph blocks.
pub fn gcn_forward(
    adj: &CsrMatrix,
    features: &ArrayView2<f64>,
    weights: &GcnWeights,
    activation: Activation,
    n1: usize,
) -> Result<EmbeddingMatrix> {
    if features.ncols() != weights.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature width {} vs first layer input {}",
            features.ncols(),
            weights.input_dim()
        )));
    }
    if features.nrows() != adj.n() {
        return Err(Error::DimensionMismatch(format!(
            "feature rows {} vs adjacency size {}",
            features.nrows(),
            adj.n()
        )));
    }
    let mut h = features.to_owned();
    for l in 0..weights.n_layers() {
        let projected = h.dot(&weights.layer(l));
        let mut next = adj.mul_dense(&projected.view());
        activation.apply(&mut next);
        h = next;
    }
    let n2 = adj.n() - n1;
    Ok(EmbeddingMatrix::from_parts(h, n1, n2))
}

/// Embed a graph pair end to end: features -> joint adjacency -> forward
/// pass. `p` defaults to twice the bin count when not given.
pub fn embed_pair(
    g1: &Graph,
    g2: &Graph,
    features: &crate::features::FeatureMatrix,
    hidden: usize,
    p: Option<usize>,
    layers: usize,
    seed: u64,
    activation: Activation,
) -> Result<(EmbeddingMatrix, GcnWeights)> {
    let adj = normalized_joint_adjacency(g1, g2);
    let m = features.bin_count();
    let p = p.unwrap_or_else(|| default_embedding_dim(g1.max_degree().max(g2.max_degree())));
    let weights = GcnWeights::new(m, hidden, p, layers, seed)?;
    let z = gcn_forward(&adj, &features.structural(), &weights, activation, g1.node_count())?;
    Ok((z, weights))
}

/// Mean of the embedding rows of a supernode's members.
pub fn supernode_embedding<'a>(
    sub_rows: impl IntoIterator<Item = ArrayView1<'a, f64>>,
    dim: usize,
) -> Result<Array1<f64>> {
    let mut acc = Array1::<f64>::zeros(dim);
    let mut count = 0usize;
    for row in sub_rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "embedding row of length {} vs {}",
                row.len(),
                dim
            )));
        }
        acc += &row;
        count += 1;
    }
    if count == 0 {
        return Err(Error::invalid_parameter(
            "sub_nodes",
            "supernode must contain at least one sub-node",
        ));
    }
    Ok(acc / count as f64)
}
