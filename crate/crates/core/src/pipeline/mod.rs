//! End-to-end orchestration: simulation experiments with training and
//! evaluation, price ingestion and the asset-clustering application.
//!
//! Every random stream is derived from the configuration's master seed, so a
//! report is a pure function of its configuration. Wall-clock timings and the
//! training loss trace are kept out of the report and written separately.

mod application;
mod collection_io;
mod config;
mod experiment;
mod ingest;

pub use application::{run_application, run_application_on, write_elbow_csv, AppOutcome, AppReport, ClusterMembers};
pub use collection_io::{load_collection, save_collection, Manifest, ManifestEntry, StoredCollection};
pub use config::{AppConfig, ElbowMethod, EvalConfig, ExperimentConfig, Method};
pub use experiment::{
    effective_config, elbow_seed, eval_collection_seed, experiment_train_seed, method_seed,
    partition_with, run_scenario_experiment, train_model, training_data_seed, training_stream,
    CollectionInfo, ExperimentReport, MethodComparison, MethodResult, ModelSummary, Timings,
};
pub use ingest::{ingest_prices, load_returns, ReturnsMatrix};
