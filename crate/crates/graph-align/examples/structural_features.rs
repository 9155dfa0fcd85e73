//! Structural node features: log-binned degree histograms of each node's
//! neighborhood, discounted by hop distance.
//!
//! Run: cargo run --example structural_features

use graph_align::features::{self, FeatureMatrix};
use graph_align::graph::Graph;
use graph_align::synth;

fn main() -> graph_align::Result<()> {
    // Degrees bin logarithmically: bin i holds neighbors whose degree d
    // satisfies ceil(log2(d)) == i.
    for d in [1usize, 2, 3, 4, 5, 8, 9, 100] {
        println!("degree {d:>3} -> bin {}", features::log_bin(d));
    }

    // A path a-b-c seen from a: b (degree 2) sits one hop away, c
    // (degree 1) two hops away and is discounted.
    let path = Graph::from_labeled_edges([("a", "b"), ("b", "c")]);
    let m = features::bin_count(path.max_degree());
    let row = features::structural_feature(&path, 0, 2, 0.01, m)?;
    println!("\npath feature of a (discount 0.01): {row:?}");

    // For a graph pair the rows of both graphs share one bin layout, so
    // matched nodes get comparable vectors. On a permuted copy they are
    // identical.
    let g1 = synth::preferential_attachment(60, 2, 5);
    let (g2, truth) = synth::permute(&g1, 6);
    let fm = FeatureMatrix::build(&g1, &g2, 2, 0.01)?;
    println!(
        "\njoint feature matrix: {} rows x {} bins",
        fm.structural().nrows(),
        fm.bin_count()
    );
    let (v, u) = truth.pairs().next().unwrap();
    println!("row of g1 node {v}:     {:?}", fm.structural().row(fm.row_of_g1(v)).to_vec());
    println!("row of its g2 image {u}: {:?}", fm.structural().row(fm.row_of_g2(u)).to_vec());
    Ok(())
}
