//! Embed two graphs in one space with an untrained graph-convolution
//! forward pass over their disjoint union.
//!
//! Run: cargo run --example joint_embeddings

use graph_align::embed::{self, Activation};
use graph_align::features::FeatureMatrix;
use graph_align::synth;

fn main() -> graph_align::Result<()> {
    let g1 = synth::preferential_attachment(80, 3, 11);
    let (g2, truth) = synth::permute(&g1, 12);

    // Both graphs enter one block-diagonal normalized adjacency, so a
    // single forward pass embeds them into the same coordinate system.
    let adj = embed::normalized_joint_adjacency(&g1, &g2);
    println!(
        "joint operator: {} rows, {} nonzeros (includes self-loops)",
        adj.n(),
        adj.nnz()
    );

    let fm = FeatureMatrix::build(&g1, &g2, 2, 0.01)?;
    // Weights are random but fixed by the seed; no training happens.
    let (z, weights) = embed::embed_pair(&g1, &g2, &fm, 16, None, 2, 99, Activation::Tanh)?;
    println!(
        "embeddings: {} x {} ({} layers, hidden 16, weight seed {})",
        z.n1() + z.n2(),
        z.dim(),
        weights.n_layers(),
        weights.seed()
    );

    // Matched nodes land on (numerically) the same point.
    let mut worst = 0.0f64;
    for (v, u) in truth.pairs() {
        let dev = z
            .row_g1(v)
            .iter()
            .zip(z.row_g2(u).iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev);
    }
    println!("largest coordinate gap over matched pairs: {worst:.2e}");

    let (v, u) = truth.pairs().next().unwrap();
    println!("g1 node {v}: {:?}", z.row_g1(v).to_vec());
    println!("g2 node {u}: {:?}", z.row_g2(u).to_vec());
    Ok(())
}
