use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::metrics::DEFAULT_TIE_TOL;
use crate::network::TrainConfig;
use crate::scenario::ScenarioConfig;

/// Partitioning methods compared in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Spectral clustering of the learned affinity matrix (true `K`).
    Spectral,
    /// Louvain communities of the learned affinity matrix (`K` inferred).
    Louvain,
    KMeans,
    KMedoids,
    Ward,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Spectral,
        Method::Louvain,
        Method::KMeans,
        Method::KMedoids,
        Method::Ward,
    ];

    /// Whether the method consumes the learned affinity matrix.
    pub fn uses_network(self) -> bool {
        matches!(self, Method::Spectral | Method::Louvain)
    }

    pub fn needs_k(self) -> bool {
        self != Method::Louvain
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::Louvain => "louvain",
            Method::KMeans => "kmeans",
            Method::KMedoids => "kmedoids",
            Method::Ward => "ward",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (expected spectral, louvain, kmeans, kmedoids or ward)"
                ))
            })
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_collections() -> usize {
    200
}

fn default_restarts() -> usize {
    200
}

fn default_true() -> bool {
    true
}

fn default_tie_tol() -> f64 {
    DEFAULT_TIE_TOL
}

fn default_k_max() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Number of fresh evaluation collections.
    #[serde(default = "default_collections")]
    pub collections: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Give the true `K` to every method that needs one. When false, those
    /// methods use the K-means elbow suggestion instead.
    #[serde(default = "default_true")]
    pub supply_true_k: bool,
    #[serde(default = "default_restarts")]
    pub kmeans_restarts: usize,
    /// Largest `K` tried by the elbow when the true `K` is withheld.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_tie_tol")]
    pub tie_tol: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            collections: default_collections(),
            methods: default_methods(),
            supply_true_k: true,
            kmeans_restarts: default_restarts(),
            k_max: default_k_max(),
            tie_tol: DEFAULT_TIE_TOL,
        }
    }
}

/// A complete simulation experiment: training, evaluation and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream of the run derives from it.
    pub seed: u64,
    /// Scenario of the training stream.
    pub train_scenario: ScenarioConfig,
    /// Scenario of the evaluation collections; the training scenario when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_scenario: Option<ScenarioConfig>,
    pub features: FeatureSpec,
    /// Training settings. Its `seed` field is overwritten by a value derived
    /// from the master seed.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Model file to load if present, or to write after training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_path: Option<PathBuf>,
    /// Directory for the report, ARI table and timings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn eval_scenario(&self) -> &ScenarioConfig {
        self.eval_scenario.as_ref().unwrap_or(&self.train_scenario)
    }

    pub fn uses_network(&self) -> bool {
        self.eval.methods.iter().any(|m| m.uses_network())
    }

    pub fn validate(&self) -> Result<()> {
        self.train_scenario.validate()?;
        self.eval_scenario().validate()?;
        self.features
            .validate_for_len(self.train_scenario.len.min(self.eval_scenario().len))
            .map_err(|e| Error::Config(e.to_string()))?;
        self.train.validate()?;
        if self.eval.collections == 0 {
            return Err(Error::Config("eval.collections must be at least 1".into()));
        }
        if self.eval.methods.is_empty() {
            return Err(Error::Config("eval.methods must not be empty".into()));
        }
        let mut seen = self.eval.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.eval.methods.len() {
            return Err(Error::Config("eval.methods lists a method twice".into()));
        }
        if self.eval.kmeans_restarts == 0 {
            return Err(Error::Config("eval.kmeans_restarts must be at least 1".into()));
        }
        if !self.eval.supply_true_k && self.eval.k_max < 2 {
            return Err(Error::Config("eval.k_max must be at least 2".into()));
        }
        if !(self.eval.tie_tol >= 0.0) {
            return Err(Error::Config("eval.tie_tol must be non-negative".into()));
        }
        if self.uses_network() && self.train.datasets == 0 {
            let present = self.model_path.as_ref().is_some_and(|p| p.exists());
            if !present {
                return Err(Error::Config(
                    "network methods need a model file or train.datasets > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// How the application picks `K` when it is not given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElbowMethod {
    /// WCSS of the spectral partitions of the learned affinity, measured on
    /// the feature vectors.
    Spectral,
    /// WCSS of K-means partitions of the feature vectors.
    KMeans,
}

fn default_elbow_method() -> ElbowMethod {
    ElbowMethod::Spectral
}

fn default_app_features() -> FeatureSpec {
    FeatureSpec::default_qaf()
}

fn default_app_restarts() -> usize {
    50
}

/// Clustering a panel of asset prices with a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    pub seed: u64,
    /// CSV of prices: header of tickers, one row per date.
    pub prices: PathBuf,
    pub model_path: PathBuf,
    #[serde(default = "default_app_features")]
    pub features: FeatureSpec,
    /// Fixed number of clusters; skips the elbow when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_elbow_method")]
    pub elbow_method: ElbowMethod,
    /// Restarts for K-means when it is the elbow method.
    #[serde(default = "default_app_restarts")]
    pub kmeans_restarts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl AppConfig {
    pub fn new(seed: u64, prices: PathBuf, model_path: PathBuf) -> Self {
        Self {
            seed,
            prices,
            model_path,
            features: default_app_features(),
            k: None,
            k_max: default_k_max(),
            elbow_method: default_elbow_method(),
            kmeans_restarts: default_app_restarts(),
            out_dir: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !self.prices.exists() {
            return Err(Error::Config(format!("prices file {} not found", self.prices.display())));
        }
        if !self.model_path.exists() {
            return Err(Error::Config(format!(
                "model file {} not found",
                self.model_path.display()
            )));
        }
        if self.k == Some(0) {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.k.is_none() && self.k_max < 2 {
            return Err(Error::Config("k_max must be at least 2".into()));
        }
        if self.kmeans_restarts == 0 {
            return Err(Error::Config("kmeans_restarts must be at least 1".into()));
        }
        Ok(())
    }
}
