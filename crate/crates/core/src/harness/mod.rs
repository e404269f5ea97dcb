//! Monte Carlo experiments, scenario files and plot-data output.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod noise;
pub mod output;
pub mod rng;
pub mod scenarios;

pub use config::ScenarioConfig;
pub use experiment::{
    default_pfa_grid, empirical_auc, empirical_roc, ks_distance, noise_power, run_roc_experiment, run_selection_experiment,
    ExperimentConfig, ExperimentCurve, ReceiverSpec, RocExperiment, SelectionConfig, SelectionOutcome,
};
pub use noise::{ar1_covariance, sample_noise, NoiseSampler};
pub use rng::RngStream;
pub use scenarios::{run_random_source_batch, scale_to_snr, scenario_s1, scenario_s2, snr_db_of, QuadrupoleScenario, RandomScenario};
