//! Command-line front end: one flag set drives either a single alignment
//! run (JSON report) or a cumulative noise grid (CSV), backed entirely by
//! the library pipeline.

use std::error::Error as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use graph_align::embed::Activation;
use graph_align::pipeline::{self, MatchMode, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "graph-align",
    version,
    about = "Align the nodes of two networks via shared embeddings and compression"
)]
struct Cli {
    /// Edge list of the first graph (one `u v` pair per line).
    #[arg(long)]
    edgelist1: PathBuf,

    /// Edge list of the second graph.
    #[arg(long, conflicts_with = "synth_permute")]
    edgelist2: Option<PathBuf>,

    /// Attribute file for the first graph (`label v1 .. vF` per line).
    #[arg(long)]
    attrs1: Option<PathBuf>,

    /// Attribute file for the second graph.
    #[arg(long)]
    attrs2: Option<PathBuf>,

    /// Ground-truth file (`label1 label2` per line) for scoring.
    #[arg(long)]
    truth: Option<PathBuf>,

    /// Build the second graph as a seeded permutation of the first.
    #[arg(long)]
    synth_permute: bool,

    /// Edge-removal probability applied to the permuted graph.
    #[arg(long, visible_alias = "noise", default_value_t = 0.0)]
    edge_noise: f64,

    /// Attribute-corruption probability applied to the permuted graph.
    #[arg(long, default_value_t = 0.0)]
    attr_noise: f64,

    /// Generate this many synthetic categorical attributes per node.
    #[arg(long)]
    synth_attrs: Option<usize>,

    /// Categories per synthetic attribute.
    #[arg(long, default_value_t = 2)]
    synth_attr_categories: usize,

    /// Neighborhood radius for structural features.
    #[arg(short = 'k', long = "k", default_value_t = 2)]
    max_hops: usize,

    /// Per-hop discount factor in (0, 1].
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,

    /// Target compression ratio in [0, 1); 0 disables compression.
    #[arg(long, default_value_t = 0.2)]
    phi: f64,

    /// Degree threshold for compression starting points.
    #[arg(long, default_value_t = 15)]
    eta: usize,

    /// Scan width of the guiding-list pairing.
    #[arg(long, default_value_t = 100)]
    lambda: usize,

    /// Similarity threshold of the guiding-list pairing.
    #[arg(long, default_value_t = 0.98)]
    omega: f64,

    /// Hidden width of the forward pass.
    #[arg(long, default_value_t = 16)]
    hidden: usize,

    /// Embedding width (defaults to twice the structural bin count).
    #[arg(long)]
    dim: Option<usize>,

    /// Graph-convolution layers.
    #[arg(long, default_value_t = 2)]
    layers: usize,

    /// Weight of the structural distance in attributed similarity.
    #[arg(long, default_value_t = 1.0)]
    gamma1: f64,

    /// Weight of the attribute distance in attributed similarity.
    #[arg(long, default_value_t = 1.0)]
    gamma2: f64,

    /// Candidate list lengths to report, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    alpha: Vec<usize>,

    /// Counterpart supernodes consulted per sub-node expansion.
    #[arg(long, default_value_t = 1)]
    beta: usize,

    /// Force a global exhaustive comparison instead of the k-d tree.
    #[arg(long)]
    exhaustive: bool,

    /// Use ReLU instead of tanh activations.
    #[arg(long)]
    relu: bool,

    /// Seed for the forward-pass weights.
    #[arg(long, default_value_t = 1)]
    seed_weights: u64,

    /// Seed for the synthetic permutation.
    #[arg(long, default_value_t = 2)]
    seed_perm: u64,

    /// Seed for edge and attribute noise.
    #[arg(long, default_value_t = 3)]
    seed_noise: u64,

    /// Master seed: sets the three seeds above to seed, seed+1, seed+2.
    #[arg(long)]
    seed: Option<u64>,

    /// Trials per grid cell.
    #[arg(long, default_value_t = 5)]
    trials: usize,

    /// Cumulative edge-noise levels; presence switches to grid mode (CSV).
    #[arg(long, value_delimiter = ',')]
    noise_levels: Option<Vec<f64>>,

    /// Report destination (JSON for single runs, CSV for grids); stdout
    /// when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Dump the joint feature matrix as CSV.
    #[arg(long)]
    dump_features: Option<PathBuf>,

    /// Dump the joint embedding matrix as CSV.
    #[arg(long)]
    dump_embeddings: Option<PathBuf>,

    /// Dump the supernode tables (suffixed .g1/.g2).
    #[arg(long)]
    dump_supernodes: Option<PathBuf>,
}

impl Cli {
    fn into_config(self) -> (RunConfig, Option<Vec<f64>>) {
        let (seed_weights, seed_perm, seed_noise) = match self.seed {
            Some(s) => (s, s.wrapping_add(1), s.wrapping_add(2)),
            None => (self.seed_weights, self.seed_perm, self.seed_noise),
        };
        let config = RunConfig {
            edgelist1: self.edgelist1,
            edgelist2: self.edgelist2,
            attrs1: self.attrs1,
            attrs2: self.attrs2,
            truth: self.truth,
            synth_permute: self.synth_permute,
            edge_noise: self.edge_noise,
            attr_noise: self.attr_noise,
            synth_attrs: self.synth_attrs,
            synth_attr_categories: self.synth_attr_categories,
            max_hops: self.max_hops,
            discount: self.gamma,
            phi: self.phi,
            eta: self.eta,
            lambda: self.lambda,
            omega: self.omega,
            hidden: self.hidden,
            dim: self.dim,
            layers: self.layers,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            alphas: self.alpha,
            beta: self.beta,
            mode: if self.exhaustive {
                MatchMode::Exhaustive
            } else {
                MatchMode::Auto
            },
            activation: if self.relu {
                Activation::Relu
            } else {
                Activation::Tanh
            },
            seed_weights,
            seed_perm,
            seed_noise,
            trials: self.trials,
            out: self.out,
            dump_features: self.dump_features,
            dump_embeddings: self.dump_embeddings,
            dump_supernodes: self.dump_supernodes,
        };
        (config, self.noise_levels)
    }
}

fn run(cli: Cli) -> graph_align::Result<()> {
    let (config, levels) = cli.into_config();
    match levels {
        Some(levels) => {
            let report = pipeline::run_grid(&config, &levels)?;
            if config.out.is_none() {
                print!("{}", report.to_csv());
            }
            for row in &report.rows {
                eprintln!(
                    "noise {:.3}: accuracy {:.4} over {} trials ({:.2}s mean)",
                    row.noise, row.accuracy, row.trials, row.runtime_s
                );
            }
        }
        None => {
            let report = pipeline::run_align(&config)?;
            if config.out.is_none() {
                println!("{}", report.to_json());
            }
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            if let Some(metrics) = &report.metrics {
                eprintln!(
                    "accuracy {:.4} over {} ground-truth nodes",
                    metrics.accuracy, metrics.truth_size
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprint!("error: {err}");
            let mut source = err.source();
            while let Some(cause) = source {
                eprint!(": {cause}");
                source = cause.source();
            }
            eprintln!();
            ExitCode::FAILURE
        }
    }
}
