//! Ablation and SNR-sweep orchestration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fft::{fft_baseline_classify, FftTemplates};
use super::metrics::MetricsReport;
use super::train::{predict, train, TrainConfig, TrainLog};
use super::variants::{node_set, restrict_graph, AblationVariant, VariantKind};
use super::voting::voting_ensemble;
use crate::graph::{build_adjacency, split_dataset, DatasetSplit, GraphSample, RadarGraph};
use crate::nn::ModelParams;
use crate::sim::seeds::{derive_seed, TAG_INIT};
use crate::sim::{default_radar_layout, generate_dataset, AircraftProfile, RadarConfig, SimConfig, Snr};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

impl Scale {
    pub fn count_per_class(&self) -> usize {
        match self {
            Scale::Desk => 100,
            Scale::Paper => 1000,
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            Scale::Desk => 16,
            Scale::Paper => 64,
        }
    }

    pub fn max_epochs(&self) -> usize {
        match self {
            Scale::Desk => 30,
            Scale::Paper => 100,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(Error::InvalidConfig(format!("unknown scale '{s}' (desk or paper)"))),
        }
    }
}

/// Everything a run needs besides the SNR and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSetup {
    pub radars: Vec<RadarConfig>,
    pub profiles: Vec<AircraftProfile>,
    pub sim: SimConfig,
    pub count_per_class: usize,
    pub hidden: usize,
    pub decoder_channels: usize,
    pub train: TrainConfig,
}

pub const DEFAULT_DECODER_CHANNELS: usize = 4;

impl ExperimentSetup {
    pub fn at_scale(scale: Scale) -> Self {
        Self {
            radars: default_radar_layout(),
            profiles: AircraftProfile::defaults(),
            sim: SimConfig::default(),
            count_per_class: scale.count_per_class(),
            hidden: scale.hidden(),
            decoder_channels: DEFAULT_DECODER_CHANNELS,
            train: TrainConfig { max_epochs: scale.max_epochs(), ..TrainConfig::default() },
        }
    }

    pub fn graph(&self) -> Result<RadarGraph> {
        build_adjacency(&self.radars)
    }

    pub fn dataset(&self, snr: Snr, seed: u64) -> Result<DatasetSplit> {
        let raw = generate_dataset(&self.radars, &self.profiles, self.count_per_class, snr, seed, &self.sim)?;
        split_dataset(&raw, seed)
    }
}

/// One trained network and the nodes it reads.
#[derive(Clone, Debug)]
pub struct NodeModel {
    pub params: ModelParams<f64>,
    pub nodes: Vec<usize>,
    pub graph: RadarGraph,
    pub log: TrainLog,
}

/// A trained variant: one graph model, or one model per radar.
#[derive(Clone, Debug)]
pub struct TrainedVariant {
    pub variant: AblationVariant,
    pub models: Vec<NodeModel>,
}

fn pick(v: &[GraphSample], nodes: &[usize]) -> Vec<GraphSample> {
    v.iter().map(|s| s.select_nodes(nodes)).collect()
}

/// Trains the model of a variant on the node subset `nodes` (one radar for
/// single-radar variants).
pub fn train_on_nodes(
    variant: AblationVariant,
    nodes: &[usize],
    split: &DatasetSplit,
    graph: &RadarGraph,
    setup: &ExperimentSetup,
    seed: u64,
) -> Result<NodeModel> {
    let (spec, default_nodes) = variant
        .model_spec(graph, setup.hidden, setup.decoder_channels)
        .ok_or_else(|| Error::InvalidConfig(format!("{variant} has no trainable network of its own")))?;
    if nodes.len() != default_nodes.len() {
        return Err(Error::InvalidConfig(format!("{variant} reads {} radars, got {}", default_nodes.len(), nodes.len())));
    }
    let tag = [TAG_INIT, variant.index() as u64, nodes[0] as u64];
    let cfg = TrainConfig { seed: derive_seed(seed, &tag), ..setup.train.clone() };
    let init = ModelParams::init(&spec, cfg.seed)?;
    let sub_graph = restrict_graph(graph, nodes)?;
    let (params, log) = train(init, &pick(&split.train, nodes), &pick(&split.validation, nodes), &sub_graph, &cfg)?;
    Ok(NodeModel { params, nodes: nodes.to_vec(), graph: sub_graph, log })
}

/// Trains the network(s) behind a neural variant; a vote trains its
/// single-radar base, one model per radar.
pub fn train_variant(
    variant: AblationVariant,
    split: &DatasetSplit,
    graph: &RadarGraph,
    setup: &ExperimentSetup,
    seed: u64,
) -> Result<TrainedVariant> {
    let base = match variant.kind() {
        VariantKind::Vote(b) => b,
        _ => variant,
    };
    let node_sets: Vec<Vec<usize>> = match base.kind() {
        VariantKind::SingleRadar(_) => (0..graph.num_nodes()).map(|r| vec![r]).collect(),
        VariantKind::Graph { first_subnet_only, .. } => vec![node_set(graph, first_subnet_only)],
        _ => return Err(Error::InvalidConfig(format!("{variant} has no trainable network"))),
    };
    let models = node_sets
        .par_iter()
        .map(|nodes| train_on_nodes(base, nodes, split, graph, setup, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainedVariant { variant: base, models })
}

/// Test-set predictions: one label per test sample for a graph model, one per
/// (sample, radar) in sample-major order for per-radar models.
pub fn test_predictions(tv: &TrainedVariant, test: &[GraphSample]) -> Result<Vec<u8>> {
    let per_model = tv
        .models
        .iter()
        .map(|m| predict(&m.params, &pick(test, &m.nodes), &m.graph))
        .collect::<Result<Vec<_>>>()?;
    let k = per_model.len();
    Ok((0..test.len() * k).map(|i| per_model[i % k][i / k]).collect())
}

fn fft_predictions(split: &DatasetSplit) -> Result<Vec<u8>> {
    let rows = split
        .train
        .iter()
        .flat_map(|s| (0..s.signals.rows()).map(move |r| (s.signals.row(r), s.label)));
    let templates = FftTemplates::fit(rows, 2)?;
    Ok(split
        .test
        .iter()
        .flat_map(|s| (0..s.signals.rows()).map(|r| fft_baseline_classify(s.signals.row(r), &templates)).collect::<Vec<_>>())
        .collect())
}

fn vote(per_radar: &[u8], radars: usize) -> Vec<u8> {
    per_radar.chunks(radars).map(voting_ensemble).collect()
}

/// Outcome of one variant on one split.
#[derive(Clone, Debug)]
pub struct VariantOutcome {
    pub variant: AblationVariant,
    pub result: std::result::Result<MetricsReport, String>,
    /// Training logs, one per trained network.
    pub logs: Vec<TrainLog>,
}

/// Runs every variant on the same split. Per-radar models and FFT templates
/// are shared with their voting counterparts. A failing variant is recorded
/// and the rest continue.
pub fn run_ablation(
    split: &DatasetSplit,
    graph: &RadarGraph,
    setup: &ExperimentSetup,
    variants: &[AblationVariant],
    seed: u64,
) -> Vec<VariantOutcome> {
    let n_radars = graph.num_nodes();
    let test_labels: Vec<u8> = split.test.iter().map(|s| s.label).collect();
    let radar_labels: Vec<u8> = test_labels.iter().flat_map(|&l| std::iter::repeat(l).take(n_radars)).collect();
    let mut cache: BTreeMap<AblationVariant, std::result::Result<(Vec<u8>, Vec<TrainLog>), String>> = BTreeMap::new();
    let mut base_predictions = |base: AblationVariant| {
        cache
            .entry(base)
            .or_insert_with(|| {
                let r = if base.kind() == VariantKind::Fft {
                    fft_predictions(split).map(|p| (p, Vec::new()))
                } else {
                    train_variant(base, split, graph, setup, seed)
                        .and_then(|tv| {
                            let logs = tv.models.iter().map(|m| m.log.clone()).collect();
                            Ok((test_predictions(&tv, &split.test)?, logs))
                        })
                };
                r.map_err(|e| e.to_string())
            })
            .clone()
    };
    variants
        .iter()
        .map(|&variant| {
            let (base, voting) = match variant.kind() {
                VariantKind::Vote(b) => (b, true),
                _ => (variant, false),
            };
            let outcome = base_predictions(base);
            let (result, logs) = match outcome {
                Err(e) => (Err(e), Vec::new()),
                Ok((pred, logs)) => {
                    let per_radar = matches!(base.kind(), VariantKind::SingleRadar(_) | VariantKind::Fft);
                    let r = if voting {
                        MetricsReport::from_predictions(&vote(&pred, n_radars), &test_labels)
                    } else if per_radar {
                        MetricsReport::from_predictions(&pred, &radar_labels)
                    } else {
                        MetricsReport::from_predictions(&pred, &test_labels)
                    };
                    (r.map_err(|e| e.to_string()), logs)
                }
            };
            VariantOutcome { variant, result, logs }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub variant: AblationVariant,
    pub snr: Snr,
    pub seed: u64,
    pub result: std::result::Result<MetricsReport, String>,
}

/// Every (snr, seed) group generates one dataset shared by all variants.
/// Groups run on a pool of `jobs` threads; rows come back in grid order
/// (SNR, then seed, then variant) whatever the scheduling.
pub fn run_snr_sweep(
    setup: &ExperimentSetup,
    variants: &[AblationVariant],
    snrs: &[Snr],
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    let graph = setup.graph()?;
    let groups: Vec<(Snr, u64)> = snrs.iter().flat_map(|&s| seeds.iter().map(move |&seed| (s, seed))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let per_group: Vec<Vec<SweepRow>> = pool.install(|| {
        groups
            .par_iter()
            .map(|&(snr, seed)| {
                let outcomes = match setup.dataset(snr, seed) {
                    Ok(split) => run_ablation(&split, &graph, setup, variants, seed),
                    Err(e) => variants
                        .iter()
                        .map(|&variant| VariantOutcome { variant, result: Err(e.to_string()), logs: Vec::new() })
                        .collect(),
                };
                outcomes
                    .into_iter()
                    .map(|o| SweepRow { variant: o.variant, snr, seed, result: o.result })
                    .collect()
            })
            .collect()
    });
    Ok(per_group.into_iter().flatten().collect())
}

pub const RESULTS_HEADER: &str = "variant,snr_db,seed,accuracy,precision,recall,f1";
pub const ABLATION_HEADER: &str = "variant,accuracy,precision,recall,f1";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{RESULTS_HEADER}\n");
    for r in rows {
        if let Ok(m) = &r.result {
            let _ = writeln!(s, "{},{},{},{},{},{},{}", r.variant, r.snr, r.seed, m.accuracy, m.precision, m.recall, m.f1);
        }
    }
    s
}

pub fn failures_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("variant,snr_db,seed,error\n");
    for r in rows {
        if let Err(e) = &r.result {
            let _ = writeln!(s, "{},{},{},\"{}\"", r.variant, r.snr, r.seed, e.replace('"', "'"));
        }
    }
    s
}

pub fn ablation_csv(outcomes: &[VariantOutcome]) -> String {
    let mut s = format!("{ABLATION_HEADER}\n");
    for o in outcomes {
        if let Ok(m) = &o.result {
            let _ = writeln!(s, "{},{},{},{},{}", o.variant, m.accuracy, m.precision, m.recall, m.f1);
        }
    }
    s
}

/// One parsed row of a results CSV.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ResultRecord {
    pub variant: String,
    pub snr_db: String,
    pub seed: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::InvalidConfig(format!("results csv: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != RESULTS_HEADER {
        return Err(Error::InvalidConfig(format!("results csv header must be '{RESULTS_HEADER}'")));
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| Error::InvalidConfig(format!("results csv: {e}"))))
        .collect()
}

/// Mean accuracy per variant and SNR, variants and SNRs in first-seen order.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyTable {
    pub variants: Vec<String>,
    pub snrs: Vec<String>,
    /// `means[v][s]`, `None` where no seed succeeded.
    pub means: Vec<Vec<Option<f64>>>,
}

impl AccuracyTable {
    pub fn from_records(records: &[ResultRecord]) -> Self {
        let mut variants: Vec<String> = Vec::new();
        let mut snrs: Vec<String> = Vec::new();
        for r in records {
            if !variants.contains(&r.variant) {
                variants.push(r.variant.clone());
            }
            if !snrs.contains(&r.snr_db) {
                snrs.push(r.snr_db.clone());
            }
        }
        let mut sums = vec![vec![(0.0, 0usize); snrs.len()]; variants.len()];
        for r in records {
            let v = variants.iter().position(|x| *x == r.variant).expect("seen");
            let s = snrs.iter().position(|x| *x == r.snr_db).expect("seen");
            sums[v][s].0 += r.accuracy;
            sums[v][s].1 += 1;
        }
        let means = sums
            .iter()
            .map(|row| row.iter().map(|&(t, n)| (n > 0).then(|| t / n as f64)).collect())
            .collect();
        Self { variants, snrs, means }
    }

    pub fn mean(&self, variant: &str, snr: &str) -> Option<f64> {
        let v = self.variants.iter().position(|x| x == variant)?;
        let s = self.snrs.iter().position(|x| x == snr)?;
        self.means[v][s]
    }
}

pub fn sweep_records(rows: &[SweepRow]) -> Vec<ResultRecord> {
    rows.iter()
        .filter_map(|r| {
            r.result.as_ref().ok().map(|m| ResultRecord {
                variant: r.variant.to_string(),
                snr_db: r.snr.to_string(),
                seed: r.seed,
                accuracy: m.accuracy,
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
            })
        })
        .collect()
}
