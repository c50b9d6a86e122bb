use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureDataset, FeatureSpec};
use crate::metrics::{ari, pairwise_compare, summarize, ComparisonStats, Summary};
use crate::network::{
    affinity_matrix, load_model, save_model, train, AffinityModel, NetworkParams, TrainConfig,
    TrainOutcome,
};
use crate::partition::{elbow_wcss, kmeans, kmedoids, louvain, spectral_cluster, ward_hierarchical, Partition};
use crate::scenario::{generate, ScenarioConfig};
use crate::{item_seed, seeded_rng, stream_seed};

/// Datasets simulated together before being fed, in order, to the optimizer.
const PREFETCH: usize = 16;

/// Seed of training dataset `index` for a training seed.
pub fn training_data_seed(train_seed: u64, index: usize) -> u64 {
    item_seed(stream_seed(train_seed, "train-data"), index)
}

/// Training seed used by an experiment with the given master seed.
pub fn experiment_train_seed(master: u64) -> u64 {
    stream_seed(master, "train")
}

/// Seed of evaluation collection `index`.
pub fn eval_collection_seed(master: u64, index: usize) -> u64 {
    item_seed(stream_seed(master, "eval-data"), index)
}

/// Seed of the generator handed to `method` on evaluation collection `index`.
pub fn method_seed(master: u64, method: Method, index: usize) -> u64 {
    item_seed(stream_seed(master, &format!("eval-{}", method.name())), index)
}

/// Seed of the elbow run used when the true `K` is withheld.
pub fn elbow_seed(master: u64, index: usize) -> u64 {
    item_seed(stream_seed(master, "eval-elbow"), index)
}

fn simulate_features(scenario: &ScenarioConfig, features: &FeatureSpec, seed: u64) -> Result<FeatureDataset> {
    let collection = generate(scenario, &mut seeded_rng(seed))?;
    extract_features(&collection, features)
}

/// Lazily simulated training datasets. Small blocks are generated in
/// parallel; the order (and so the result) never depends on thread count.
pub fn training_stream<'a>(
    scenario: &'a ScenarioConfig,
    features: &'a FeatureSpec,
    train_seed: u64,
    count: usize,
) -> impl Iterator<Item = Result<FeatureDataset>> + 'a {
    (0..count.div_ceil(PREFETCH)).flat_map(move |block| {
        let start = block * PREFETCH;
        let end = (start + PREFETCH).min(count);
        let batch: Vec<Result<FeatureDataset>> = (start..end)
            .into_par_iter()
            .map(|i| {
                simulate_features(scenario, features, training_data_seed(train_seed, i))
                    .map_err(|e| e.at_stage("simulate", i))
            })
            .collect();
        batch
    })
}

/// Trains a network on `train.datasets` simulated collections.
pub fn train_model(scenario: &ScenarioConfig, features: &FeatureSpec, train_config: &TrainConfig) -> Result<TrainOutcome> {
    scenario.validate()?;
    features
        .validate_for_len(scenario.len)
        .map_err(|e| Error::Config(e.to_string()))?;
    train(
        training_stream(scenario, features, train_config.seed, train_config.datasets),
        train_config,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub input_dim: usize,
    pub parameters: usize,
    /// CRC-32 of the serialized model.
    pub checksum: u32,
}

impl ModelSummary {
    pub fn of(model: &AffinityModel) -> Self {
        let bytes = model.to_bytes();
        Self {
            input_dim: model.params.dims().input,
            parameters: model.params.values().len(),
            checksum: crc32fast::hash(&bytes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub summary: Summary,
    /// ARI against the ground truth, one per evaluation collection.
    pub aris: Vec<f64>,
    /// Number of clusters returned, one per evaluation collection.
    pub clusters: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub a: Method,
    pub b: Method,
    pub stats: ComparisonStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionInfo {
    pub n: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub train_seconds: f64,
    pub eval_seconds: f64,
    pub total_seconds: f64,
}

/// Result of a simulation experiment. Everything except `timings` and
/// `loss_trace` is a pure function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    /// Effective configuration (output directory omitted).
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSummary>,
    pub collections: Vec<CollectionInfo>,
    pub methods: Vec<MethodResult>,
    pub comparisons: Vec<MethodComparison>,
    #[serde(skip)]
    pub timings: Timings,
    /// Per-step training loss when the model was trained in this run.
    #[serde(skip)]
    pub loss_trace: Vec<f64>,
}

impl ExperimentReport {
    pub fn method(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Writes `report.json`, `aris.csv`, `timings.json` and, after training,
    /// `train_loss.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        let mut w = csv::Writer::from_path(dir.join("aris.csv"))?;
        let mut header = vec!["collection".to_string(), "n".to_string(), "k".to_string()];
        header.extend(self.methods.iter().map(|m| m.method.name().to_string()));
        w.write_record(&header)?;
        for (i, info) in self.collections.iter().enumerate() {
            let mut row = vec![i.to_string(), info.n.to_string(), info.k.to_string()];
            row.extend(self.methods.iter().map(|m| format!("{:?}", m.aris[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        std::fs::write(
            dir.join("timings.json"),
            serde_json::to_string_pretty(&self.timings)? + "\n",
        )?;
        if !self.loss_trace.is_empty() {
            let mut w = csv::Writer::from_path(dir.join("train_loss.csv"))?;
            w.write_record(["step", "loss"])?;
            for (i, l) in self.loss_trace.iter().enumerate() {
                w.write_record([i.to_string(), format!("{l:?}")])?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

/// Obtains the model for an experiment: loads `model_path` when it exists,
/// otherwise trains (and saves when a path is configured).
fn obtain_model(config: &ExperimentConfig, loss_trace: &mut Vec<f64>) -> Result<AffinityModel> {
    if let Some(path) = config.model_path.as_ref().filter(|p| p.exists()) {
        let model = load_model(path)?;
        if model.layout != config.features {
            return Err(Error::LayoutMismatch {
                index: 0,
                detail: format!(
                    "model {} expects {:?}, config asks for {:?}",
                    path.display(),
                    model.layout,
                    config.features
                ),
            });
        }
        return Ok(model);
    }
    let outcome = train_model(&config.train_scenario, &config.features, &config.train)?;
    *loss_trace = outcome.loss_trace;
    let model = AffinityModel::new(outcome.layout, outcome.params)?;
    if let Some(path) = &config.model_path {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        save_model(&model, path)?;
    }
    Ok(model)
}

struct CollectionOutcome {
    info: CollectionInfo,
    aris: Vec<f64>,
    clusters: Vec<usize>,
}

/// Partition of one evaluation dataset by one method.
pub fn partition_with(
    method: Method,
    features: &FeatureDataset,
    params: Option<&NetworkParams>,
    k: usize,
    kmeans_restarts: usize,
    seed: u64,
) -> Result<Partition> {
    let mut rng = seeded_rng(seed);
    let points = features.vectors();
    match method {
        Method::Spectral | Method::Louvain => {
            let params = params.ok_or_else(|| Error::Config("network method without a model".into()))?;
            let a = affinity_matrix(params, features)?;
            if method == Method::Spectral {
                spectral_cluster(&a, k, &mut rng)
            } else {
                louvain(&a, &mut rng)
            }
        }
        Method::KMeans => Ok(kmeans(points, k, kmeans_restarts, &mut rng)?.partition),
        Method::KMedoids => Ok(kmedoids(points, k, &mut rng)?.partition),
        Method::Ward => ward_hierarchical(points, k),
    }
}

fn evaluate_collection(
    config: &ExperimentConfig,
    params: Option<&NetworkParams>,
    index: usize,
) -> Result<CollectionOutcome> {
    let master = config.seed;
    let dataset = simulate_features(config.eval_scenario(), &config.features, eval_collection_seed(master, index))
        .map_err(|e| e.at_stage("simulate", index))?;
    let truth = dataset.labels().expect("simulated data is labeled").to_vec();
    let true_k = truth.iter().copied().max().map_or(0, |m| m + 1);
    let k = if config.eval.supply_true_k {
        true_k
    } else {
        let k_max = config.eval.k_max.min(truth.len());
        elbow_wcss(
            dataset.vectors(),
            k_max,
            config.eval.kmeans_restarts,
            &mut seeded_rng(elbow_seed(master, index)),
        )
        .map_err(|e| e.at_stage("elbow", index))?
        .suggested_k
    };
    let mut aris = Vec::with_capacity(config.eval.methods.len());
    let mut clusters = Vec::with_capacity(config.eval.methods.len());
    for &method in &config.eval.methods {
        let p = partition_with(
            method,
            &dataset,
            params,
            k,
            config.eval.kmeans_restarts,
            method_seed(master, method, index),
        )
        .map_err(|e| e.at_stage(method.name(), index))?;
        aris.push(ari(p.labels(), &truth)?);
        clusters.push(p.k());
    }
    Ok(CollectionOutcome {
        info: CollectionInfo { n: truth.len(), k: true_k },
        aris,
        clusters,
    })
}

/// The configuration actually run: the training seed is derived from the
/// master seed and the output directory is dropped.
pub fn effective_config(config: &ExperimentConfig) -> ExperimentConfig {
    let mut effective = config.clone();
    effective.train.seed = experiment_train_seed(config.seed);
    effective.out_dir = None;
    effective
}

/// Trains (or loads) the network, evaluates every method on fresh simulated
/// collections and aggregates ARI summaries and paired comparisons.
///
/// Runs restricted to baselines never read or write a model file.
pub fn run_scenario_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    config.validate()?;
    let config = effective_config(config);

    let mut loss_trace = Vec::new();
    let model = if config.uses_network() {
        Some(obtain_model(&config, &mut loss_trace)?)
    } else {
        None
    };
    let train_seconds = started.elapsed().as_secs_f64();

    let eval_started = Instant::now();
    let params = model.as_ref().map(|m| &m.params);
    let outcomes: Vec<Result<CollectionOutcome>> = (0..config.eval.collections)
        .into_par_iter()
        .map(|i| evaluate_collection(&config, params, i))
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let eval_seconds = eval_started.elapsed().as_secs_f64();

    let methods = config
        .eval
        .methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let aris: Vec<f64> = outcomes.iter().map(|o| o.aris[m]).collect();
            Ok(MethodResult {
                method,
                summary: summarize(&aris)?,
                aris,
                clusters: outcomes.iter().map(|o| o.clusters[m]).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut comparisons = Vec::new();
    for a in methods.iter().filter(|r| r.method.uses_network()) {
        for b in methods.iter().filter(|r| r.method != a.method) {
            if b.method.uses_network() && b.method < a.method {
                continue;
            }
            comparisons.push(MethodComparison {
                a: a.method,
                b: b.method,
                stats: pairwise_compare(&a.aris, &b.aris, config.eval.tie_tol)?,
            });
        }
    }

    Ok(ExperimentReport {
        seed: config.seed,
        model: model.as_ref().map(ModelSummary::of),
        collections: outcomes.iter().map(|o| o.info).collect(),
        methods,
        comparisons,
        timings: Timings {
            train_seconds,
            eval_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
        },
        loss_trace,
        config,
    })
}
