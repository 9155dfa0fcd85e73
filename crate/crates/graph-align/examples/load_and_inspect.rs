//! Load a graph from an edge list and query its neighborhoods.
//!
//! Run: cargo run --example load_and_inspect

use std::io::Write;

use graph_align::graph::{self, Graph};

fn main() -> graph_align::Result<()> {
    // Edge lists are whitespace separated, one edge per line; `#` and `%`
    // start comments, extra tokens (weights, timestamps) are ignored.
    let mut file = tempfile::NamedTempFile::new().expect("temp file");
    write!(
        file,
        "# a small communication network\n\
         alice bob 17\n\
         bob carol\n\
         carol dave\n\
         dave alice\n\
         alice carol\n\
         eve dave\n"
    )
    .unwrap();

    let g: Graph = graph::load_edge_list(file.path())?;
    println!("nodes: {}, edges: {}", g.node_count(), g.edge_count());
    println!("max degree: {}", g.max_degree());

    for v in 0..g.node_count() {
        println!(
            "  {:<6} degree {} neighbors {:?}",
            g.label(v),
            g.degree(v),
            g.neighbors(v).iter().map(|&u| g.label(u)).collect::<Vec<_>>()
        );
    }

    // Exact-distance rings around a node.
    let alice = g.node_by_label("alice").unwrap();
    for k in 1..=3 {
        let ring = g.khop_neighbors(alice, k)?;
        println!(
            "nodes exactly {k} hops from alice: {:?}",
            ring.iter().map(|&u| g.label(u)).collect::<Vec<_>>()
        );
    }
    Ok(())
}
