//! Training, evaluation, baselines, ablations and SNR sweeps.

pub mod fft;
pub mod metrics;
pub mod plot;
pub mod sweep;
pub mod train;
pub mod variants;
pub mod voting;

pub use fft::{fft_baseline_classify, spectral_peaks, FftTemplates};
pub use metrics::MetricsReport;
pub use plot::{accuracy_vs_snr_svg, legend_entries};
pub use sweep::{
    ablation_csv, failures_csv, parse_results_csv, run_ablation, run_snr_sweep, sweep_csv, sweep_records, test_predictions, train_on_nodes, train_variant,
    AccuracyTable, ExperimentSetup, NodeModel, ResultRecord, Scale, SweepRow, TrainedVariant, VariantOutcome,
};
pub use train::{evaluate, predict, train, EarlyStopping, EpochRecord, TrainConfig, TrainLog};
pub use variants::{AblationVariant, VariantKind};
pub use voting::voting_ensemble;
