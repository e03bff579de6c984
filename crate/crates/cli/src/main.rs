mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stfgacn::experiment::{
    ablation_csv, accuracy_vs_snr_svg, evaluate, failures_csv, parse_results_csv, run_ablation, run_snr_sweep, sweep_csv,
    sweep_records, train_on_nodes, AblationVariant, AccuracyTable, ExperimentSetup, MetricsReport, Scale, VariantKind,
};
use stfgacn::graph::{
    build_adjacency, read_split_manifest, split_dataset, split_from_manifest, write_graph_csv, write_split_manifest, DatasetSplit,
    GraphSample, GRAPH_FILE, SPLIT_FILE,
};
use stfgacn::nn::Checkpoint;
use stfgacn::sim::io::{read_dataset, write_dataset, DatasetManifest, DATASET_FORMAT_VERSION, MANIFEST_FILE, SEGMENTS_FILE};
use stfgacn::sim::{generate_dataset, RawSample, Snr};

use config::RunConfig;
use output::Staged;

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const ABLATION_FILE: &str = "ablation.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const PLOT_FILE: &str = "accuracy_vs_snr.svg";
pub const METRICS_HEADER: &str = "split,accuracy,precision,recall,f1,tp,tn,fp,fn";

/// Exit code 1 for usage and configuration problems, 2 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Failure::Runtime(msg.into())
    }
}

#[derive(Parser, Debug)]
#[command(name = "stfgacn", version, about = "Radar-network aircraft recognition: simulate, train, evaluate, sweep")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; must not exist unless --force is given.
    #[arg(long)]
    out: PathBuf,
    /// desk or paper.
    #[arg(long)]
    scale: Option<Scale>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset directory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// SNR in dB, or `clean`.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<Snr>,
        #[arg(long)]
        count_per_class: Option<usize>,
    },
    /// Train one variant on a dataset and write a checkpoint and log.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        variant: Option<AblationVariant>,
        /// Radar read by a single-radar variant.
        #[arg(long)]
        radar: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate a checkpoint on dataset splits.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// train, validation, test or all; repeatable.
        #[arg(long = "split", default_values_t = vec!["test".to_string()])]
        splits: Vec<String>,
    },
    /// Run every requested variant on one dataset.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Existing dataset; simulated from the config when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<Snr>,
        #[arg(long = "variant")]
        variants: Vec<AblationVariant>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        count_per_class: Option<usize>,
    },
    /// Accuracy against SNR for every variant over a grid of SNRs and seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "snr", allow_hyphen_values = true)]
        snrs: Vec<Snr>,
        #[arg(long = "seeds", value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long = "variant")]
        variants: Vec<AblationVariant>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        count_per_class: Option<usize>,
    },
    /// Redraw the accuracy plot from a results CSV.
    Plot {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        results: PathBuf,
    },
}

fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(s) = common.scale {
        cfg.scale = s;
    }
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::runtime(format!("thread pool: {e}")))
}

fn runtime(e: stfgacn::Error) -> Failure {
    Failure::runtime(e.to_string())
}

fn require_dataset(dir: &Path) -> Result<(), Failure> {
    for f in [MANIFEST_FILE, SEGMENTS_FILE] {
        if !dir.join(f).is_file() {
            return Err(Failure::usage(format!("dataset {} has no {f}", dir.display())));
        }
    }
    Ok(())
}

fn require_file(p: &Path, what: &str) -> Result<(), Failure> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("{what} {} not found", p.display())))
    }
}

/// Reads a dataset and its split; the split manifest inside the directory
/// wins, otherwise the split is drawn from `seed`.
fn load_split(dir: &Path, seed: u64) -> Result<(DatasetManifest, DatasetSplit), Failure> {
    let (manifest, raw) = read_dataset(dir).map_err(|e| Failure::usage(e.to_string()))?;
    let split_path = dir.join(SPLIT_FILE);
    let split = if split_path.is_file() {
        let m = read_split_manifest(&split_path).map_err(|e| Failure::usage(e.to_string()))?;
        split_from_manifest(&raw, &m)
    } else {
        split_dataset(&raw, seed)
    }
    .map_err(runtime)?;
    Ok((manifest, split))
}

fn write_dataset_dir(out: &Staged, setup: &ExperimentSetup, snr: Snr, seed: u64, raw: &[RawSample]) -> Result<DatasetSplit, Failure> {
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        master_seed: seed,
        snr_db: snr,
        count_per_class: setup.count_per_class,
        num_samples: raw.len(),
        samples_per_segment: raw.first().map_or(0, |s| s.segments[0].samples.len()),
        sim: setup.sim.clone(),
        radars: setup.radars.clone(),
        profiles: setup.profiles.clone(),
    };
    write_dataset(&out.path(""), &manifest, raw).map_err(runtime)?;
    let graph = setup.graph().map_err(runtime)?;
    write_graph_csv(&out.path(GRAPH_FILE), &graph).map_err(runtime)?;
    let split = split_dataset(raw, seed).map_err(runtime)?;
    write_split_manifest(&out.path(SPLIT_FILE), &split).map_err(runtime)?;
    Ok(split)
}

fn cmd_simulate(common: &Common, snr: Option<Snr>, count: Option<usize>) -> Result<(), Failure> {
    let mut cfg = resolve(common)?;
    if let Some(s) = snr {
        cfg.snr_db = s;
    }
    if count.is_some() {
        cfg.count_per_class = count;
    }
    let setup = cfg.setup()?;
    let out = Staged::create(&common.out, common.force, &[])?;
    let raw = generate_dataset(&setup.radars, &setup.profiles, setup.count_per_class, cfg.snr_db, cfg.seed, &setup.sim)
        .map_err(runtime)?;
    let split = write_dataset_dir(&out, &setup, cfg.snr_db, cfg.seed, &raw)?;
    out.write_manifest("simulate", &cfg, &[])?;
    let dir = out.commit()?;
    let subnets = setup.radars.iter().map(|r| r.subnet_id).max().map_or(0, |m| m + 1);
    let sizes: Vec<usize> = (0..subnets).map(|s| setup.radars.iter().filter(|r| r.subnet_id == s).count()).collect();
    println!(
        "wrote {} graph samples ({} per class) x {} radars (subnets {:?}) at SNR {} dB, seed {}: train {} / validation {} / test {} -> {}",
        raw.len(),
        setup.count_per_class,
        setup.radars.len(),
        sizes,
        cfg.snr_db,
        cfg.seed,
        split.train.len(),
        split.validation.len(),
        split.test.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_train(common: &Common, data: &Path, variant: Option<AblationVariant>, radar: Option<usize>, epochs: Option<usize>) -> Result<(), Failure> {
    let mut cfg = resolve(common)?;
    if let Some(v) = variant {
        cfg.variant = v;
    }
    if let Some(r) = radar {
        cfg.radar = r;
    }
    if epochs.is_some() {
        cfg.train.max_epochs = epochs;
    }
    require_dataset(data)?;
    let (manifest, split) = load_split(data, cfg.seed)?;
    let mut setup = cfg.setup()?;
    setup.radars = manifest.radars.clone();
    let graph = build_adjacency(&setup.radars).map_err(|e| Failure::usage(e.to_string()))?;
    let nodes = match cfg.variant.kind() {
        VariantKind::SingleRadar(_) => {
            if cfg.radar >= graph.num_nodes() {
                return Err(Failure::usage(format!("radar {} not in a {}-radar dataset", cfg.radar, graph.num_nodes())));
            }
            vec![cfg.radar]
        }
        VariantKind::Graph { first_subnet_only, .. } => stfgacn::experiment::variants::node_set(&graph, first_subnet_only),
        _ => {
            return Err(Failure::usage(format!(
                "{} has no network of its own to train; use `ablate` or `sweep`",
                cfg.variant
            )))
        }
    };
    let out = Staged::create(&common.out, common.force, &[data])?;
    let model = pool(cfg.jobs)?
        .install(|| train_on_nodes(cfg.variant, &nodes, &split, &graph, &setup, cfg.seed))
        .map_err(|e| match e {
            stfgacn::Error::NonFiniteLoss { epoch, batch } => Failure::runtime(format!(
                "non-finite loss at epoch {epoch}, batch {batch}; last good epoch {}",
                epoch.saturating_sub(1)
            )),
            e => runtime(e),
        })?;

    let mut hyper = setup.train.to_table();
    hyper.insert("hidden".into(), toml::Value::Integer(setup.hidden as i64));
    hyper.insert("decoder_channels".into(), toml::Value::Integer(setup.decoder_channels as i64));
    hyper.insert("variant".into(), toml::Value::String(cfg.variant.to_string()));
    hyper.insert("scale".into(), toml::Value::String(format!("{:?}", cfg.scale).to_lowercase()));
    hyper.insert("nodes".into(), toml::Value::Array(nodes.iter().map(|&n| toml::Value::Integer(n as i64)).collect()));
    let ckpt = Checkpoint::new(&model.params, cfg.seed, model.log.best_epoch, hyper);
    out.write(CHECKPOINT_FILE, ckpt.to_bytes().map_err(runtime)?)?;
    out.write(TRAIN_LOG_FILE, model.log.to_csv())?;
    out.write_manifest("train", &cfg, &[("data", data)])?;
    let dir = out.commit()?;
    println!(
        "trained {} on radars {:?}: {} epochs, best epoch {} (validation loss {:.6}) -> {}",
        cfg.variant,
        nodes,
        model.log.epochs.len(),
        model.log.best_epoch,
        model.log.best_val_loss,
        dir.display()
    );
    Ok(())
}

fn metrics_row(name: &str, m: &MetricsReport) -> String {
    format!(
        "{name},{:.6},{:.6},{:.6},{:.6},{},{},{},{}",
        m.accuracy, m.precision, m.recall, m.f1, m.tp, m.tn, m.fp, m.fn_
    )
}

/// Nodes a checkpoint reads: recorded at training time, or all of them.
fn checkpoint_nodes(ckpt: &Checkpoint) -> Result<Vec<usize>, Failure> {
    match ckpt.header.hyperparameters.get("nodes") {
        Some(toml::Value::Array(a)) => a
            .iter()
            .map(|v| match v {
                toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                _ => Err(Failure::usage("checkpoint has a malformed node list")),
            })
            .collect(),
        Some(_) => Err(Failure::usage("checkpoint has a malformed node list")),
        None => Ok((0..ckpt.header.spec.num_nodes()).collect()),
    }
}

fn cmd_eval(common: &Common, data: &Path, checkpoint: &Path, splits: &[String]) -> Result<(), Failure> {
    let cfg = resolve(common)?;
    require_dataset(data)?;
    require_file(checkpoint, "checkpoint")?;
    let ckpt = Checkpoint::load(checkpoint).map_err(|e| Failure::usage(e.to_string()))?;
    let (manifest, split) = load_split(data, cfg.seed)?;
    let nodes = checkpoint_nodes(&ckpt)?;
    let n_radars = manifest.radars.len();
    let k = manifest.samples_per_segment;
    if nodes.len() != ckpt.header.spec.num_nodes() || nodes.iter().any(|&n| n >= n_radars) {
        return Err(Failure::usage(format!(
            "shape mismatch: checkpoint expects {} nodes {:?} (hidden {}), dataset has {} radars x {} samples",
            ckpt.header.spec.num_nodes(),
            nodes,
            ckpt.header.spec.hidden,
            n_radars,
            k
        )));
    }
    let graph = stfgacn::experiment::variants::restrict_graph(
        &build_adjacency(&manifest.radars).map_err(|e| Failure::usage(e.to_string()))?,
        &nodes,
    )
    .map_err(runtime)?;

    let mut names: Vec<&str> = Vec::new();
    for s in splits {
        match s.as_str() {
            "all" => names.extend(["train", "validation", "test"]),
            "train" | "validation" | "test" => names.push(s.as_str()),
            other => return Err(Failure::usage(format!("unknown split '{other}' (train, validation, test, all)"))),
        }
    }
    names.dedup();
    let out = Staged::create(&common.out, common.force, &[data, checkpoint])?;
    let pick = |v: &[GraphSample]| v.iter().map(|s| s.select_nodes(&nodes)).collect::<Vec<_>>();
    let mut csv = format!("{METRICS_HEADER}\n");
    for name in &names {
        let samples = match *name {
            "train" => pick(&split.train),
            "validation" => pick(&split.validation),
            _ => pick(&split.test),
        };
        let m = pool(cfg.jobs)?.install(|| evaluate(&ckpt.params, &samples, &graph)).map_err(runtime)?;
        csv.push_str(&metrics_row(name, &m));
        csv.push('\n');
    }
    out.write(METRICS_FILE, &csv)?;
    out.write_manifest("eval", &cfg, &[("data", data), ("checkpoint", checkpoint)])?;
    out.commit()?;
    print!("{csv}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_ablate(
    common: &Common,
    data: Option<&Path>,
    snr: Option<Snr>,
    variants: &[AblationVariant],
    epochs: Option<usize>,
    count: Option<usize>,
) -> Result<(), Failure> {
    let mut cfg = resolve(common)?;
    if let Some(s) = snr {
        cfg.snr_db = s;
    }
    if !variants.is_empty() {
        cfg.variants = variants.to_vec();
    }
    if epochs.is_some() {
        cfg.train.max_epochs = epochs;
    }
    if count.is_some() {
        cfg.count_per_class = count;
    }
    let mut setup = cfg.setup()?;
    let inputs: Vec<&Path> = data.into_iter().collect();
    let (split, out) = match data {
        Some(dir) => {
            require_dataset(dir)?;
            let (manifest, split) = load_split(dir, cfg.seed)?;
            setup.radars = manifest.radars;
            (split, Staged::create(&common.out, common.force, &inputs)?)
        }
        None => {
            let out = Staged::create(&common.out, common.force, &[])?;
            let split = setup.dataset(cfg.snr_db, cfg.seed).map_err(runtime)?;
            (split, out)
        }
    };
    let graph = setup.graph().map_err(|e| Failure::usage(e.to_string()))?;
    let outcomes = pool(cfg.jobs)?.install(|| run_ablation(&split, &graph, &setup, &cfg.variants, cfg.seed));
    out.write(ABLATION_FILE, ablation_csv(&outcomes))?;
    // Voting variants reuse the logs of their base variant.
    for o in outcomes.iter().filter(|o| !matches!(o.variant.kind(), VariantKind::Vote(_))) {
        for (i, log) in o.logs.iter().enumerate() {
            out.write(&format!("logs/{}_{i}.csv", file_stem(o.variant)), log.to_csv())?;
        }
    }
    let input_list: Vec<(&str, &Path)> = data.map(|d| ("data", d)).into_iter().collect();
    out.write_manifest("ablate", &cfg, &input_list)?;
    out.commit()?;
    print!("{}", ablation_csv(&outcomes));
    let failed: Vec<String> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().err().map(|e| format!("{}: {e}", o.variant)))
        .collect();
    report_failures(&failed);
    Ok(())
}

fn file_stem(v: AblationVariant) -> String {
    v.name().chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect()
}

fn report_failures(failed: &[String]) {
    if !failed.is_empty() {
        eprintln!("{} cell(s) failed:", failed.len());
        for f in failed {
            eprintln!("  {f}");
        }
    }
}

fn plot_svg(csv: &str) -> Result<String, Failure> {
    let records = parse_results_csv(csv).map_err(|e| Failure::usage(e.to_string()))?;
    let table = AccuracyTable::from_records(&records);
    Ok(accuracy_vs_snr_svg(&table, "Accuracy versus SNR"))
}

fn cmd_sweep(
    common: &Common,
    snrs: &[Snr],
    seeds: &[u64],
    variants: &[AblationVariant],
    epochs: Option<usize>,
    count: Option<usize>,
) -> Result<(), Failure> {
    let mut cfg = resolve(common)?;
    if !snrs.is_empty() {
        cfg.sweep.snr_db = snrs.to_vec();
    }
    if !seeds.is_empty() {
        cfg.sweep.seeds = seeds.to_vec();
    }
    if !variants.is_empty() {
        cfg.variants = variants.to_vec();
    }
    if epochs.is_some() {
        cfg.train.max_epochs = epochs;
    }
    if count.is_some() {
        cfg.count_per_class = count;
    }
    if cfg.sweep.snr_db.is_empty() || cfg.sweep.seeds.is_empty() || cfg.variants.is_empty() {
        return Err(Failure::usage("sweep grid needs at least one SNR, seed and variant"));
    }
    let setup = cfg.setup()?;
    let out = Staged::create(&common.out, common.force, &[])?;
    let rows = run_snr_sweep(&setup, &cfg.variants, &cfg.sweep.snr_db, &cfg.sweep.seeds, cfg.jobs).map_err(runtime)?;
    let csv = sweep_csv(&rows);
    out.write(RESULTS_FILE, &csv)?;
    out.write(FAILURES_FILE, failures_csv(&rows))?;
    let table = AccuracyTable::from_records(&sweep_records(&rows));
    out.write(PLOT_FILE, accuracy_vs_snr_svg(&table, "Accuracy versus SNR"))?;
    out.write_manifest("sweep", &cfg, &[])?;
    let dir = out.commit()?;
    let failed: Vec<String> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().err().map(|e| format!("{} at {} dB, seed {}: {e}", r.variant, r.snr, r.seed)))
        .collect();
    println!("{} result rows -> {}", rows.len() - failed.len(), dir.display());
    report_failures(&failed);
    Ok(())
}

fn cmd_plot(common: &Common, results: &Path) -> Result<(), Failure> {
    let cfg = resolve(common)?;
    require_file(results, "results CSV")?;
    let csv = std::fs::read_to_string(results).map_err(|e| Failure::usage(format!("cannot read {}: {e}", results.display())))?;
    let svg = plot_svg(&csv)?;
    let out = Staged::create(&common.out, common.force, &[results])?;
    out.write(PLOT_FILE, svg)?;
    out.write_manifest("plot", &cfg, &[("results", results)])?;
    let dir = out.commit()?;
    println!("wrote {}", dir.join(PLOT_FILE).display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate { common, snr, count_per_class } => cmd_simulate(common, *snr, *count_per_class),
        Command::Train { common, data, variant, radar, epochs } => cmd_train(common, data, *variant, *radar, *epochs),
        Command::Eval { common, data, checkpoint, splits } => cmd_eval(common, data, checkpoint, splits),
        Command::Ablate { common, data, snr, variants, epochs, count_per_class } => {
            cmd_ablate(common, data.as_deref(), *snr, variants, *epochs, *count_per_class)
        }
        Command::Sweep { common, snrs, seeds, variants, epochs, count_per_class } => {
            cmd_sweep(common, snrs, seeds, variants, *epochs, *count_per_class)
        }
        Command::Plot { common, results } => cmd_plot(common, results),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
