use std::path::Path;
use std::process::{Command, Output};

use stfgacn::experiment::{AblationVariant, ExperimentSetup, Scale};
use stfgacn::graph::build_adjacency;
use stfgacn::nn::{Checkpoint, ModelParams};
use stfgacn::sim::default_radar_layout;
use tempfile::TempDir;

fn stfgacn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stfgacn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = stfgacn(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn simulate(dir: &Path, out: &str, count: &str) {
    ok(dir, &["simulate", "--count-per-class", count, "--snr", "10", "--out", out]);
}

#[test]
fn simulate_writes_the_default_network() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "data", "10");
    let manifest: toml::Table = toml::from_str(&read(tmp.path().join("data/manifest.toml"))).unwrap();
    let radars = manifest["radars"].as_array().unwrap();
    assert_eq!(radars.len(), 9);
    let subnet0 = radars.iter().filter(|r| r["subnet_id"].as_integer() == Some(0)).count();
    assert_eq!((subnet0, radars.len() - subnet0), (5, 4));
    assert_eq!(manifest["num_samples"].as_integer(), Some(20));

    let segments = read(tmp.path().join("data/segments.csv"));
    assert_eq!(segments.lines().count(), 1 + 20 * 9);
    assert_eq!(segments.lines().next().unwrap().split(',').count(), 4 + 200);
    assert_eq!(read(tmp.path().join("data/graph.csv")).lines().count(), 9);
    assert!(tmp.path().join("data/split_manifest.toml").exists());
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "a", "6");
    simulate(tmp.path(), "b", "6");
    for f in ["manifest.toml", "segments.csv", "graph.csv", "split_manifest.toml"] {
        assert_eq!(read(tmp.path().join("a").join(f)), read(tmp.path().join("b").join(f)), "{f}");
    }
}

#[test]
fn train_logs_each_epoch_and_records_the_scale() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "data", "5");
    ok(tmp.path(), &["train", "--data", "data", "--epochs", "1", "--out", "desk"]);
    let log = read(tmp.path().join("desk/train_log.csv"));
    assert_eq!(log.lines().count(), 2, "{log}");

    ok(tmp.path(), &["train", "--data", "data", "--epochs", "1", "--scale", "paper", "--out", "paper"]);
    let ckpt = Checkpoint::load(&tmp.path().join("paper/checkpoint.bin")).unwrap();
    let h = &ckpt.header.hyperparameters;
    assert_eq!(h["hidden"].as_integer(), Some(64));
    assert_eq!(h["initial_lr"].as_float(), Some(0.001));
    assert_eq!(h["batch_size"].as_integer(), Some(5));
    assert_eq!(ckpt.header.spec.hidden, 64);
}

#[test]
fn missing_dataset_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = stfgacn(tmp.path(), &["train", "--data", "nowhere", "--out", "model"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!tmp.path().join("model").exists());
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0, "no staging left behind");
}

fn zero_checkpoint(dir: &Path, nodes: usize) -> String {
    let setup = ExperimentSetup::at_scale(Scale::Desk);
    let graph = build_adjacency(&default_radar_layout()).unwrap();
    let (mut spec, _) = AblationVariant::Stfgacn2F.model_spec(&graph, setup.hidden, setup.decoder_channels).unwrap();
    spec.subnet_of = (0..nodes).map(|i| usize::from(i >= 5)).collect();
    let params = ModelParams::<f64>::zeros(&spec).unwrap();
    let path = dir.join(format!("zero{nodes}.bin"));
    Checkpoint::new(&params, 0, 0, Default::default()).save(&path).unwrap();
    path.file_name().unwrap().to_string_lossy().into_owned()
}

#[test]
fn zero_checkpoint_scores_chance_and_eval_repeats() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "data", "10");
    let ckpt = zero_checkpoint(tmp.path(), 9);
    ok(tmp.path(), &["eval", "--data", "data", "--checkpoint", &ckpt, "--split", "all", "--out", "e1"]);
    ok(tmp.path(), &["eval", "--data", "data", "--checkpoint", &ckpt, "--split", "all", "--out", "e2"]);
    let csv = read(tmp.path().join("e1/metrics.csv"));
    assert_eq!(csv, read(tmp.path().join("e2/metrics.csv")));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("split,accuracy,precision,recall,f1,tp,tn,fp,fn"));
    for line in lines {
        let acc: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(acc, 0.5, "{line}");
    }
}

#[test]
fn shape_mismatch_names_both_shapes() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "data", "5");
    let ckpt = zero_checkpoint(tmp.path(), 12);
    let out = stfgacn(tmp.path(), &["eval", "--data", "data", "--checkpoint", &ckpt, "--out", "e"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("12 nodes") && err.contains("9 radars"), "{err}");
    assert!(!tmp.path().join("e").exists());
}

#[test]
fn sweep_rows_and_plot_legend() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "sweep", "--count-per-class", "5", "--epochs", "1", "--snr", "-10", "--snr", "0", "--snr", "10", "--seeds", "1,2",
        "--variant", "GRU", "--variant", "FFT", "--out", "sweep",
    ];
    ok(tmp.path(), &args);
    let csv = read(tmp.path().join("sweep/results.csv"));
    assert_eq!(csv.lines().count(), 1 + 12, "{csv}");
    assert_eq!(read(tmp.path().join("sweep/failures.csv")).lines().count(), 1);

    ok(tmp.path(), &["plot", "--results", "sweep/results.csv", "--out", "plot"]);
    let svg = read(tmp.path().join("plot/accuracy_vs_snr.svg"));
    let legend = stfgacn::experiment::legend_entries(&svg);
    for v in ["GRU", "FFT"] {
        assert!(legend.iter().any(|l| l == v), "{v} missing from {legend:?}");
    }
    assert_eq!(svg, read(tmp.path().join("sweep/accuracy_vs_snr.svg")));
}

#[test]
fn existing_output_needs_force() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "data", "5");
    std::fs::write(tmp.path().join("data/marker"), "x").unwrap();
    let out = stfgacn(tmp.path(), &["simulate", "--count-per-class", "5", "--out", "data"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(tmp.path().join("data/marker").exists());

    ok(tmp.path(), &["simulate", "--count-per-class", "5", "--out", "data", "--force"]);
    assert!(!tmp.path().join("data/marker").exists());

    let out = stfgacn(tmp.path(), &["ablate", "--data", "data", "--out", "data", "--force"]);
    assert_eq!(out.status.code(), Some(1), "output over its own input");
    assert!(tmp.path().join("data/segments.csv").exists());
}

#[test]
fn config_file_is_strict() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(tmp.path().join("bad.toml"), "seed = 3\nlearning_rate = 0.1\n").unwrap();
    let out = stfgacn(tmp.path(), &["simulate", "--config", "bad.toml", "--out", "data"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));

    std::fs::write(tmp.path().join("good.toml"), "seed = 3\ncount_per_class = 5\n").unwrap();
    ok(tmp.path(), &["simulate", "--config", "good.toml", "--out", "data"]);
    let manifest: toml::Table = toml::from_str(&read(tmp.path().join("data/manifest.toml"))).unwrap();
    assert_eq!(manifest["master_seed"].as_integer(), Some(3));
}

#[test]
fn bad_invocations_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(stfgacn(tmp.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(stfgacn(tmp.path(), &["simulate"]).status.code(), Some(1), "--out is required");
    assert_eq!(stfgacn(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn diverging_training_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "data", "5");
    std::fs::write(tmp.path().join("hot.toml"), "[train]\ninitial_lr = 1e300\n").unwrap();
    let out = stfgacn(tmp.path(), &["train", "--config", "hot.toml", "--data", "data", "--epochs", "3", "--out", "m"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("last good epoch"));
    assert!(!tmp.path().join("m").exists());
}
