//! End-to-end runs: load or synthesize a graph pair, extract features,
//! embed, compress, align, score, and report.
//!
//! [`run_align`] performs one full run and can write a JSON report that
//! echoes the complete effective configuration, so any result file is
//! reproducible from itself. [`run_grid`] sweeps cumulative edge-noise
//! levels with repeated trials and reports per-level means as CSV.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use ndarray::Array1;
use serde::Serialize;

use crate::align::{
    self, AlignOptions, AlignmentResult, Metrics, SearchMode, Stage, StageTimings,
};
use crate::compress::{self, supernode_label, CompressedGraph, Side};
use crate::embed::{self, Activation, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::features::{self, FeatureMatrix};
use crate::graph::{self, Graph, NodeId};
use crate::synth::{self, GroundTruth};

/// Candidate retrieval policy: `Auto` uses a k-d tree for structural runs
/// and a global exhaustive comparison when attributes are involved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Auto,
    KdTree,
    Exhaustive,
}

impl MatchMode {
    fn resolve(self, has_attributes: bool) -> SearchMode {
        match self {
            MatchMode::Auto => {
                if has_attributes {
                    SearchMode::Exhaustive
                } else {
                    SearchMode::KdTree
                }
            }
            MatchMode::KdTree => SearchMode::KdTree,
            MatchMode::Exhaustive => SearchMode::Exhaustive,
        }
    }
}

/// Complete configuration of one run. Defaults follow the reference
/// hyper-parameters: `max_hops = 2`, `discount = 0.01`, `phi = 0.2`,
/// `hidden = 16`, `eta = 15`, `lambda = 100`, `omega = 0.98`,
/// `gamma1 = gamma2 = 1`, embedding width twice the structural bin count.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub edgelist1: PathBuf,
    pub edgelist2: Option<PathBuf>,
    pub attrs1: Option<PathBuf>,
    pub attrs2: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    /// Build the second graph as a seeded permutation of the first.
    pub synth_permute: bool,
    /// Edge-removal probability applied to the permuted graph.
    pub edge_noise: f64,
    /// Attribute-corruption probability applied to the permuted graph.
    pub attr_noise: f64,
    /// Generate this many synthetic categorical attributes per node.
    pub synth_attrs: Option<usize>,
    /// Categories per synthetic attribute (2 = binary).
    pub synth_attr_categories: usize,
    /// Neighborhood radius for structural features.
    pub max_hops: usize,
    /// Per-hop geometric discount in (0, 1].
    pub discount: f64,
    /// Target compression ratio in [0, 1); 0 disables compression.
    pub phi: f64,
    /// Degree threshold for compression starting points.
    pub eta: usize,
    /// Scan width of the guiding-list pairing.
    pub lambda: usize,
    /// Similarity threshold of the guiding-list pairing.
    pub omega: f64,
    /// Hidden width of the forward pass.
    pub hidden: usize,
    /// Embedding width; defaults to twice the bin count when absent.
    pub dim: Option<usize>,
    pub layers: usize,
    /// Weight of the structural distance in attributed similarity.
    pub gamma1: f64,
    /// Weight of the attribute distance in attributed similarity.
    pub gamma2: f64,
    /// Candidate list lengths to report.
    pub alphas: Vec<usize>,
    /// Counterpart supernodes consulted per sub-node expansion.
    pub beta: usize,
    pub mode: MatchMode,
    pub activation: Activation,
    pub seed_weights: u64,
    pub seed_perm: u64,
    pub seed_noise: u64,
    /// Trials per grid cell.
    pub trials: usize,
    pub out: Option<PathBuf>,
    pub dump_features: Option<PathBuf>,
    pub dump_embeddings: Option<PathBuf>,
    pub dump_supernodes: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            edgelist1: PathBuf::new(),
            edgelist2: None,
            attrs1: None,
            attrs2: None,
            truth: None,
            synth_permute: false,
            edge_noise: 0.0,
            attr_noise: 0.0,
            synth_attrs: None,
            synth_attr_categories: 2,
            max_hops: 2,
            discount: 0.01,
            phi: 0.2,
            eta: 15,
            lambda: 100,
            omega: 0.98,
            hidden: 16,
            dim: None,
            layers: 2,
            gamma1: 1.0,
            gamma2: 1.0,
            alphas: vec![1, 5, 10],
            beta: 1,
            mode: MatchMode::Auto,
            activation: Activation::Tanh,
            seed_weights: 1,
            seed_perm: 2,
            seed_noise: 3,
            trials: 5,
            out: None,
            dump_features: None,
            dump_embeddings: None,
            dump_supernodes: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.phi) {
            return Err(Error::invalid_parameter(
                "phi",
                format!("{} outside [0, 1)", self.phi),
            ));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::invalid_parameter(
                "discount",
                format!("{} outside (0, 1]", self.discount),
            ));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::invalid_parameter(
                "omega",
                format!("{} outside (0, 1]", self.omega),
            ));
        }
        if !(0.0..=1.0).contains(&self.edge_noise) {
            return Err(Error::invalid_parameter(
                "edge_noise",
                format!("{} outside [0, 1]", self.edge_noise),
            ));
        }
        if !(0.0..=1.0).contains(&self.attr_noise) {
            return Err(Error::invalid_parameter(
                "attr_noise",
                format!("{} outside [0, 1]", self.attr_noise),
            ));
        }
        if self.max_hops == 0 {
            return Err(Error::invalid_parameter("max_hops", "must be >= 1"));
        }
        if self.layers == 0 {
            return Err(Error::invalid_parameter("layers", "must be >= 1"));
        }
        if self.beta == 0 {
            return Err(Error::invalid_parameter("beta", "must be >= 1"));
        }
        if self.alphas.is_empty() {
            return Err(Error::invalid_parameter("alphas", "must be non-empty"));
        }
        if self.synth_permute == self.edgelist2.is_some() {
            return Err(Error::invalid_parameter(
                "inputs",
                "exactly one of --edgelist2 and --synth-permute is required",
            ));
        }
        Ok(())
    }
}

/// Compression outcome of one graph.
#[derive(Debug, Clone, Serialize)]
pub struct CompressionReport {
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_after: usize,
    pub uncompressed_nodes: usize,
    pub supernodes: usize,
    pub ratio: f64,
    pub under_compressed: bool,
}

impl CompressionReport {
    fn of(cg: &CompressedGraph) -> Self {
        CompressionReport {
            nodes_before: cg.original_count(),
            nodes_after: cg.node_count(),
            edges_after: cg.edges().len(),
            uncompressed_nodes: cg.uncompressed_nodes().len(),
            supernodes: cg.supernodes().len(),
            ratio: cg.compression_ratio(),
            under_compressed: cg.is_under_compressed(),
        }
    }
}

/// One node's ranked candidates, by label.
#[derive(Debug, Clone, Serialize)]
pub struct NodeReport {
    pub node: String,
    pub stage: Stage,
    pub candidates: Vec<(String, f64)>,
}

/// Everything time-related, grouped so reports can be compared for
/// determinism by dropping this one field.
#[derive(Debug, Clone, Default, Serialize)]
pub struct TimingReport {
    pub total_s: f64,
    pub stages_s: BTreeMap<&'static str, f64>,
    pub align_stages: StageTimings,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub graph1_nodes: usize,
    pub graph2_nodes: usize,
    pub compression: Option<(CompressionReport, CompressionReport)>,
    pub metrics: Option<Metrics>,
    pub skipped_stages: Vec<String>,
    pub warnings: Vec<String>,
    pub alignment: Vec<NodeReport>,
    pub supernode_alignment: Vec<NodeReport>,
    pub timings: TimingReport,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_json().as_bytes())
            .map_err(|e| Error::io(path, e))?;
        file.write_all(b"\n").map_err(|e| Error::io(path, e))
    }
}

/// Back-to-back stage timer: each lap ends exactly where the next begins,
/// so the recorded stages tile the elapsed wall-clock.
struct Laps {
    mark: Instant,
}

impl Laps {
    fn start() -> Self {
        Laps {
            mark: Instant::now(),
        }
    }

    fn lap(&mut self, timings: &mut TimingReport, name: &'static str) {
        let now = Instant::now();
        timings
            .stages_s
            .insert(name, now.duration_since(self.mark).as_secs_f64());
        self.mark = now;
    }
}

/// Prepared inputs of one run.
struct ProblemInstance {
    g1: Graph,
    g2: Graph,
    truth: Option<GroundTruth>,
}

fn load_first_graph(config: &RunConfig) -> Result<Graph> {
    let mut g1 = graph::load_edge_list(&config.edgelist1)?;
    if let Some(path) = &config.attrs1 {
        g1 = graph::load_attributes(path, &g1)?;
    }
    if let Some(f) = config.synth_attrs {
        if g1.attributes().is_some() {
            return Err(Error::invalid_parameter(
                "synth_attrs",
                "cannot combine generated attributes with an attribute file",
            ));
        }
        // Attribute generation is part of instance construction, so it
        // draws on the permutation seed, not the noise seed.
        g1 = synth::random_attributes(
            &g1,
            f,
            config.synth_attr_categories,
            config.seed_perm.wrapping_add(1),
        )?;
    }
    Ok(g1)
}

fn synthesize_pair(config: &RunConfig, g1: &Graph) -> Result<(Graph, GroundTruth)> {
    let (mut g2, mut truth) = synth::permute(g1, config.seed_perm);
    if config.edge_noise > 0.0 {
        let (noisy, updated) = synth::add_edge_noise(&g2, &truth, config.edge_noise, config.seed_noise)?;
        g2 = noisy;
        truth = updated;
    }
    if config.attr_noise > 0.0 && g2.attributes().is_some() {
        let categories = features::category_sets(g1, &g2);
        g2 = synth::add_attribute_noise(
            &g2,
            config.attr_noise,
            &categories,
            config.seed_noise.wrapping_add(1),
        )?;
    }
    Ok((g2, truth))
}

fn load_instance(config: &RunConfig, timings: &mut TimingReport) -> Result<ProblemInstance> {
    let mut laps = Laps::start();
    let g1 = load_first_graph(config).map_err(|e| e.in_stage("load"))?;
    laps.lap(timings, "load");

    let (g2, truth) = if config.synth_permute {
        let (g2, truth) = synthesize_pair(config, &g1).map_err(|e| e.in_stage("synth"))?;
        (g2, Some(truth))
    } else {
        let path = config.edgelist2.as_ref().expect("validated");
        let mut g2 = graph::load_edge_list(path).map_err(|e| e.in_stage("load"))?;
        if let Some(attrs) = &config.attrs2 {
            g2 = graph::load_attributes(attrs, &g2).map_err(|e| e.in_stage("load"))?;
        }
        let truth = match &config.truth {
            Some(path) => {
                Some(GroundTruth::load(path, &g1, &g2).map_err(|e| e.in_stage("load"))?)
            }
            None => None,
        };
        (g2, truth)
    };
    laps.lap(timings, "synth");

    Ok(ProblemInstance { g1, g2, truth })
}

struct PairOutcome {
    result: AlignmentResult,
    metrics: Option<Metrics>,
    cg1: CompressedGraph,
    cg2: CompressedGraph,
    compressed: bool,
    warnings: Vec<String>,
}

/// The core pipeline on prepared inputs; fills `timings` per stage.
fn run_pair(
    config: &RunConfig,
    instance: &ProblemInstance,
    timings: &mut TimingReport,
) -> Result<PairOutcome> {
    let ProblemInstance { g1, g2, truth } = instance;
    let mut warnings = Vec::new();

    if g1.node_count() == 0 || g2.node_count() == 0 {
        return Err(Error::invalid_parameter("inputs", "graphs must be non-empty")
            .in_stage("features"));
    }

    let mut laps = Laps::start();
    let fm = FeatureMatrix::build(g1, g2, config.max_hops, config.discount)
        .map_err(|e| e.in_stage("features"))?;
    if let Some(path) = &config.dump_features {
        fm.write_csv(path, g1, g2).map_err(|e| e.in_stage("features"))?;
    }
    laps.lap(timings, "features");

    let (z, _weights) = embed::embed_pair(
        g1,
        g2,
        &fm,
        config.hidden,
        config.dim,
        config.layers,
        config.seed_weights,
        config.activation,
    )
    .map_err(|e| e.in_stage("embed"))?;
    if let Some(path) = &config.dump_embeddings {
        z.write_csv(path, g1, g2).map_err(|e| e.in_stage("embed"))?;
    }
    laps.lap(timings, "embed");

    let guides = if config.phi > 0.0 {
        Some(compress::make_guiding_lists(
            g1,
            g2,
            &z,
            config.eta,
            config.omega,
            config.lambda,
        ))
    } else {
        None
    };
    laps.lap(timings, "guide");

    let compressed = guides.is_some();
    let (cg1, cg2) = match &guides {
        Some((q1, q2)) => {
            let (r1, r2) = rayon::join(
                || compress::merge(g1, q1, config.phi),
                || compress::merge(g2, q2, config.phi),
            );
            let cg1 = r1.map_err(|e| e.in_stage("compress"))?;
            let cg2 = r2.map_err(|e| e.in_stage("compress"))?;
            for (name, cg) in [("graph1", &cg1), ("graph2", &cg2)] {
                if cg.is_under_compressed() {
                    warnings.push(format!(
                        "{name}: compression stopped at ratio {:.4} (target {})",
                        cg.compression_ratio(),
                        config.phi
                    ));
                }
            }
            (cg1, cg2)
        }
        None => (compress::uncompressed(g1), compress::uncompressed(g2)),
    };
    if let Some(path) = &config.dump_supernodes {
        let base = path.to_string_lossy();
        cg1.write_table(format!("{base}.g1"), g1)
            .map_err(|e| e.in_stage("compress"))?;
        cg2.write_table(format!("{base}.g2"), g2)
            .map_err(|e| e.in_stage("compress"))?;
    }
    laps.lap(timings, "compress");

    let sup1 = align::supernode_embeddings(&cg1, &z, Side::First)
        .map_err(|e| e.in_stage("supernode_embed"))?;
    let sup2 = align::supernode_embeddings(&cg2, &z, Side::Second)
        .map_err(|e| e.in_stage("supernode_embed"))?;
    laps.lap(timings, "supernode_embed");

    let has_attrs = fm.attribute().is_some();
    let opts = AlignOptions {
        alphas: config.alphas.clone(),
        beta: config.beta,
        gamma1: config.gamma1,
        gamma2: config.gamma2,
        mode: config.mode.resolve(has_attrs),
    };
    let y = fm.attribute().map(|v| v.to_owned());
    let result = align::align_compressed(&cg1, &cg2, &z, y.as_ref(), &sup1, &sup2, &opts)
        .map_err(|e| e.in_stage("align"))?;
    timings.align_stages = result.timings;
    laps.lap(timings, "align");

    let metrics = match truth {
        Some(truth) => {
            Some(align::score(&result, truth, &config.alphas).map_err(|e| e.in_stage("score"))?)
        }
        None => None,
    };
    laps.lap(timings, "score");

    Ok(PairOutcome {
        result,
        metrics,
        cg1,
        cg2,
        compressed,
        warnings,
    })
}

fn node_reports(
    result: &AlignmentResult,
    g1: &Graph,
    g2: &Graph,
    cg1: &CompressedGraph,
    cg2: &CompressedGraph,
) -> (Vec<NodeReport>, Vec<NodeReport>) {
    let per_node = result
        .per_node
        .iter()
        .enumerate()
        .map(|(v, m)| NodeReport {
            node: g1.label(v).to_string(),
            stage: m.stage,
            candidates: m
                .candidates
                .iter()
                .map(|&(u, s)| (g2.label(u).to_string(), s))
                .collect(),
        })
        .collect();

    let supernodes = result
        .supernode_matches
        .iter()
        .map(|(s1, list)| NodeReport {
            node: supernode_label(*s1, cg1.original_count()),
            stage: Stage::Supernode,
            candidates: list
                .iter()
                .map(|&(s2, score)| (supernode_label(s2, cg2.original_count()), score))
                .collect(),
        })
        .collect();
    (per_node, supernodes)
}

/// Run the full pipeline once according to `config`, writing the JSON
/// report to `config.out` when set.
pub fn run_align(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let mut timings = TimingReport::default();
    let total = Instant::now();

    let instance = load_instance(config, &mut timings)?;
    let outcome = run_pair(config, &instance, &mut timings)?;
    timings.total_s = total.elapsed().as_secs_f64();

    let (alignment, supernode_alignment) = node_reports(
        &outcome.result,
        &instance.g1,
        &instance.g2,
        &outcome.cg1,
        &outcome.cg2,
    );

    let report = RunReport {
        config: config.clone(),
        graph1_nodes: instance.g1.node_count(),
        graph2_nodes: instance.g2.node_count(),
        compression: outcome
            .compressed
            .then(|| (CompressionReport::of(&outcome.cg1), CompressionReport::of(&outcome.cg2))),
        metrics: outcome.metrics,
        skipped_stages: outcome.result.skipped.clone(),
        warnings: outcome.warnings,
        alignment,
        supernode_alignment,
        timings,
    };
    if let Some(path) = &config.out {
        report.write(path)?;
    }
    Ok(report)
}

/// One grid cell: trial means at a cumulative noise level.
#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub noise: f64,
    pub accuracy: f64,
    pub top_alpha: Vec<(usize, f64)>,
    pub runtime_s: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub config: RunConfig,
    pub levels: Vec<f64>,
    pub rows: Vec<GridRow>,
}

impl GridReport {
    /// CSV with one row per noise level.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("noise,accuracy");
        for (a, _) in &self.rows.first().map(|r| r.top_alpha.clone()).unwrap_or_default() {
            out.push_str(&format!(",top_{a}"));
        }
        out.push_str(",runtime_s,trials\n");
        for row in &self.rows {
            out.push_str(&format!("{},{}", row.noise, row.accuracy));
            for (_, acc) in &row.top_alpha {
                out.push_str(&format!(",{acc}"));
            }
            out.push_str(&format!(",{},{}\n", row.runtime_s, row.trials));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Sweep cumulative edge-noise levels with `config.trials` seeded trials
/// each, reporting per-level mean accuracy and runtime.
///
/// Levels state the total expected fraction of original edges removed, so
/// each step applies the incremental removal probability that takes the
/// accumulated noise from the previous level to the next.
pub fn run_grid(config: &RunConfig, levels: &[f64]) -> Result<GridReport> {
    config.validate()?;
    if !config.synth_permute {
        return Err(Error::invalid_parameter(
            "noise_levels",
            "the noise grid requires --synth-permute",
        ));
    }
    if levels.is_empty() {
        return Err(Error::invalid_parameter("noise_levels", "need at least one level"));
    }
    for window in levels.windows(2) {
        if window[1] < window[0] {
            return Err(Error::invalid_parameter(
                "noise_levels",
                format!("levels must be nondecreasing, got {} after {}", window[1], window[0]),
            ));
        }
    }
    if levels.iter().any(|&l| !(0.0..1.0).contains(&l)) {
        return Err(Error::invalid_parameter(
            "noise_levels",
            "levels must lie in [0, 1)",
        ));
    }

    let trials = config.trials.max(1);
    let mut per_level: Vec<Vec<(Metrics, f64)>> = vec![Vec::new(); levels.len()];

    for trial in 0..trials as u64 {
        let trial_config = RunConfig {
            seed_perm: config.seed_perm.wrapping_add(trial),
            seed_weights: config.seed_weights.wrapping_add(trial),
            seed_noise: config.seed_noise.wrapping_add(trial.wrapping_mul(1000)),
            edge_noise: 0.0,
            attr_noise: 0.0,
            out: None,
            dump_features: None,
            dump_embeddings: None,
            dump_supernodes: None,
            ..config.clone()
        };
        let mut timings = TimingReport::default();
        let base = load_instance(&trial_config, &mut timings)?;
        let g1 = base.g1;
        let mut g2 = base.g2;
        let mut truth = base.truth.expect("synth instances carry truth");

        let mut accumulated = 0.0;
        for (i, &level) in levels.iter().enumerate() {
            // Incremental probability lifting accumulated noise to `level`.
            let p_inc = if level > accumulated {
                (level - accumulated) / (1.0 - accumulated)
            } else {
                0.0
            };
            if p_inc > 0.0 {
                let (noisy, updated) = synth::add_edge_noise(
                    &g2,
                    &truth,
                    p_inc,
                    trial_config.seed_noise.wrapping_add(i as u64),
                )
                .map_err(|e| e.in_stage("synth"))?;
                g2 = noisy;
                truth = updated;
                accumulated = level;
            }

            let eval_g2 = if config.attr_noise > 0.0 && g2.attributes().is_some() {
                let categories = features::category_sets(&g1, &g2);
                synth::add_attribute_noise(
                    &g2,
                    config.attr_noise,
                    &categories,
                    trial_config.seed_noise.wrapping_add(500 + i as u64),
                )
                .map_err(|e| e.in_stage("synth"))?
            } else {
                g2.clone()
            };

            let instance = ProblemInstance {
                g1: g1.clone(),
                g2: eval_g2,
                truth: Some(truth.clone()),
            };
            let mut cell_timings = TimingReport::default();
            let cell_start = Instant::now();
            let outcome = run_pair(&trial_config, &instance, &mut cell_timings)?;
            let elapsed = cell_start.elapsed().as_secs_f64();
            let metrics = outcome.metrics.expect("truth is present");
            per_level[i].push((metrics, elapsed));
        }
    }

    let rows = levels
        .iter()
        .zip(&per_level)
        .map(|(&noise, cells)| {
            let n = cells.len() as f64;
            let accuracy = cells.iter().map(|(m, _)| m.accuracy).sum::<f64>() / n;
            let runtime_s = cells.iter().map(|(_, t)| *t).sum::<f64>() / n;
            let top_alpha = config
                .alphas
                .iter()
                .enumerate()
                .map(|(ai, &a)| {
                    (
                        a,
                        cells.iter().map(|(m, _)| m.top_alpha[ai].1).sum::<f64>() / n,
                    )
                })
                .collect();
            GridRow {
                noise,
                accuracy,
                top_alpha,
                runtime_s,
                trials: cells.len(),
            }
        })
        .collect();

    let report = GridReport {
        config: config.clone(),
        levels: levels.to_vec(),
        rows,
    };
    if let Some(path) = &config.out {
        report.write_csv(path)?;
    }
    Ok(report)
}

/// Mean of the rows a supernode aggregates, recomputed from the table;
/// exposed for consistency checks.
pub fn expected_supernode_mean(
    cg: &CompressedGraph,
    z: &EmbeddingMatrix,
    side: Side,
    s: NodeId,
) -> Option<Array1<f64>> {
    let subs = cg.sub_nodes(s)?;
    let mut acc = Array1::zeros(z.dim());
    for &v in subs {
        let row = match side {
            Side::First => z.row_g1(v),
            Side::Second => z.row_g2(v),
        };
        acc += &row;
    }
    Some(acc / subs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn temp_edge_list(g: &Graph) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(g.to_edge_list_string().as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn base_config(edgelist: &std::path::Path) -> RunConfig {
        RunConfig {
            edgelist1: edgelist.to_path_buf(),
            synth_permute: true,
            eta: 3,
            ..Default::default()
        }
    }

    #[test]
    fn run_align_zero_noise_small_graph() {
        let g = synth::preferential_attachment(120, 3, 41);
        let file = temp_edge_list(&g);
        let config = base_config(file.path());
        let report = run_align(&config).unwrap();
        let metrics = report.metrics.unwrap();
        assert!(metrics.accuracy > 0.9, "accuracy {}", metrics.accuracy);
        assert_eq!(report.graph1_nodes, 120);
        assert!(report.compression.is_some());
    }

    #[test]
    fn run_align_phi_zero_skips_supernode_stage() {
        let g = synth::preferential_attachment(60, 2, 42);
        let file = temp_edge_list(&g);
        let config = RunConfig {
            phi: 0.0,
            ..base_config(file.path())
        };
        let report = run_align(&config).unwrap();
        assert!(report.compression.is_none());
        assert!(report
            .skipped_stages
            .contains(&"supernode".to_string()));
        assert!(report.supernode_alignment.is_empty());
    }

    #[test]
    fn run_align_is_deterministic_modulo_timings() {
        let g = synth::preferential_attachment(80, 3, 43);
        let file = temp_edge_list(&g);
        let config = base_config(file.path());
        let a = run_align(&config).unwrap();
        let b = run_align(&config).unwrap();
        let strip = |r: &RunReport| {
            let mut v = serde_json::to_value(r).unwrap();
            v.as_object_mut().unwrap().remove("timings");
            v
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn stage_timings_cover_total() {
        let g = synth::preferential_attachment(300, 3, 44);
        let file = temp_edge_list(&g);
        let config = base_config(file.path());
        let report = run_align(&config).unwrap();
        let sum: f64 = report.timings.stages_s.values().sum();
        let total = report.timings.total_s;
        assert!(
            (sum - total).abs() <= 0.05 * total,
            "stage sum {sum} vs total {total}"
        );
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let config = RunConfig {
            phi: 1.0,
            ..Default::default()
        };
        assert!(config.validate().is_err());

        let config = RunConfig {
            edgelist2: Some(PathBuf::from("x")),
            synth_permute: true,
            ..Default::default()
        };
        assert!(config.validate().is_err());

        let config = RunConfig::default();
        assert!(config.validate().is_err(), "needs a second graph source");
    }

    #[test]
    fn grid_rejects_non_monotone_levels() {
        let g = synth::preferential_attachment(30, 2, 45);
        let file = temp_edge_list(&g);
        let config = base_config(file.path());
        assert!(run_grid(&config, &[0.02, 0.01]).is_err());
    }

    #[test]
    fn grid_single_level_matches_single_run() {
        let g = synth::preferential_attachment(80, 3, 46);
        let file = temp_edge_list(&g);
        let config = RunConfig {
            trials: 1,
            ..base_config(file.path())
        };
        let grid = run_grid(&config, &[0.0]).unwrap();
        let single = run_align(&config).unwrap();
        let row = &grid.rows[0];
        let metrics = single.metrics.unwrap();
        assert_eq!(row.accuracy, metrics.accuracy);
        assert_eq!(row.top_alpha, metrics.top_alpha);
    }

    #[test]
    fn grid_csv_has_one_row_per_level() {
        let g = synth::preferential_attachment(60, 3, 47);
        let file = temp_edge_list(&g);
        let config = RunConfig {
            trials: 2,
            ..base_config(file.path())
        };
        let grid = run_grid(&config, &[0.0, 0.05]).unwrap();
        let csv = grid.to_csv();
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("noise,accuracy,top_1,top_5,top_10"));
    }
}
