//! Build an alignment benchmark with known ground truth: permute a graph,
//! remove edges at a chosen rate, and write the three files a benchmark
//! run needs (two edge lists and a truth file).
//!
//! Run: cargo run --example synthetic_pair

use graph_align::synth;

fn main() -> graph_align::Result<()> {
    let g1 = synth::preferential_attachment(300, 3, 7);
    println!("source graph: {} nodes, {} edges", g1.node_count(), g1.edge_count());

    // The permuted copy is isomorphic; the truth records node -> image.
    let (g2, truth) = synth::permute(&g1, 42);
    println!("permuted copy has the same degree sequence; truth pairs: {}", truth.len());

    // Remove 5% of the edges; nodes that lose every edge drop out of the
    // graph and out of the ground truth.
    let (g2, truth) = synth::add_edge_noise(&g2, &truth, 0.05, 43)?;
    println!(
        "after 5% edge noise: {} nodes, {} edges, {} truth pairs",
        g2.node_count(),
        g2.edge_count(),
        truth.len()
    );

    let dir = std::env::temp_dir().join("graph-align-synthetic-pair");
    std::fs::create_dir_all(&dir).expect("create output dir");
    g1.save_edge_list(dir.join("g1.edges"))?;
    g2.save_edge_list(dir.join("g2.edges"))?;
    truth.save(dir.join("truth.txt"), &g1, &g2)?;
    println!("wrote g1.edges, g2.edges, truth.txt under {}", dir.display());
    println!(
        "try: graph-align --edgelist1 {0}/g1.edges --edgelist2 {0}/g2.edges --truth {0}/truth.txt",
        dir.display()
    );
    Ok(())
}
