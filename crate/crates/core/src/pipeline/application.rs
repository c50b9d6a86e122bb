use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{AppConfig, ElbowMethod};
use super::experiment::ModelSummary;
use super::ingest::{ingest_prices, ReturnsMatrix};
use crate::error::{Error, Result};
use crate::features::{extract_unlabeled, FeatureDataset};
use crate::network::{affinity_matrix, load_model, AffinityMatrix, AffinityModel};
use crate::partition::{elbow_curve, kmeans, spectral_cluster, ElbowResult, Partition};
use crate::{seeded_rng, stream_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMembers {
    pub cluster: usize,
    pub assets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppReport {
    pub seed: u64,
    pub config: AppConfig,
    pub model: ModelSummary,
    pub assets: usize,
    pub returns: usize,
    /// WCSS curve and suggestion; absent when `k` was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elbow: Option<ElbowResult>,
    pub k: usize,
    pub labels: Vec<usize>,
    pub clusters: Vec<ClusterMembers>,
}

/// Everything produced by the application run, including the artifacts
/// written next to the report.
#[derive(Debug, Clone)]
pub struct AppOutcome {
    pub report: AppReport,
    pub partition: Partition,
    pub features: FeatureDataset,
    pub affinity: AffinityMatrix,
}

impl AppOutcome {
    /// Writes `app_report.json`, `membership.csv`, `features.csv` and
    /// `affinity.csv` (plus `elbow.csv` when the elbow ran) into `dir`.
    pub fn write(&self, dir: &Path, asset_names: &[String]) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(&self.report)?;
        text.push('\n');
        std::fs::write(dir.join("app_report.json"), text)?;
        let mut w = csv::Writer::from_path(dir.join("membership.csv"))?;
        w.write_record(["asset", "cluster"])?;
        for (name, l) in asset_names.iter().zip(self.partition.labels()) {
            w.write_record([name.as_str(), &l.to_string()])?;
        }
        w.flush()?;
        self.features.save_csv(&dir.join("features.csv"))?;
        self.affinity.write_csv(std::fs::File::create(dir.join("affinity.csv"))?)?;
        if let Some(elbow) = &self.report.elbow {
            write_elbow_csv(elbow, &dir.join("elbow.csv"))?;
        }
        Ok(())
    }
}

/// `k,wcss` rows for `K = 1..=K_max`.
pub fn write_elbow_csv(elbow: &ElbowResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "wcss"])?;
    for (i, v) in elbow.wcss.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{v:?}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads prices and the model named in `config`, then clusters the assets.
pub fn run_application(config: &AppConfig) -> Result<(AppOutcome, ReturnsMatrix)> {
    config.validate()?;
    let returns = ingest_prices(&config.prices)?;
    let model = load_model(&config.model_path)?;
    let outcome = run_application_on(&returns, &model, config)?;
    Ok((outcome, returns))
}

/// Features, affinity, elbow (unless `k` is fixed) and spectral partition of
/// a returns panel.
pub fn run_application_on(returns: &ReturnsMatrix, model: &AffinityModel, config: &AppConfig) -> Result<AppOutcome> {
    if model.layout != config.features {
        return Err(Error::LayoutMismatch {
            index: 0,
            detail: format!(
                "model expects {:?}, config asks for {:?}",
                model.layout, config.features
            ),
        });
    }
    let series = returns.to_series()?;
    config
        .features
        .validate_for_len(returns.rows())
        .map_err(|e| Error::Config(e.to_string()))?;
    let features = extract_unlabeled(&series, &config.features).map_err(|e| e.at_stage("features", 0))?;
    let affinity = affinity_matrix(&model.params, &features)?;
    let n = features.len();

    let (elbow, k) = match config.k {
        Some(k) => {
            if k > n {
                return Err(Error::Config(format!("k = {k} exceeds the {n} assets")));
            }
            (None, k)
        }
        None => {
            let k_max = config.k_max.min(n);
            let mut rng = seeded_rng(stream_seed(config.seed, "app-elbow"));
            let points = features.vectors();
            let elbow = match config.elbow_method {
                ElbowMethod::Spectral => {
                    elbow_curve(points, k_max, |k| spectral_cluster(&affinity, k, &mut rng))?
                }
                ElbowMethod::KMeans => elbow_curve(points, k_max, |k| {
                    kmeans(points, k, config.kmeans_restarts, &mut rng).map(|r| r.partition)
                })?,
            };
            let k = elbow.suggested_k;
            (Some(elbow), k)
        }
    };
    let partition = spectral_cluster(&affinity, k, &mut seeded_rng(stream_seed(config.seed, "app-spectral")))?;
    let clusters = (0..partition.k())
        .map(|c| ClusterMembers {
            cluster: c,
            assets: returns
                .assets()
                .iter()
                .zip(partition.labels())
                .filter(|(_, &l)| l == c)
                .map(|(a, _)| a.clone())
                .collect(),
        })
        .collect();
    let mut echo = config.clone();
    echo.out_dir = None;
    Ok(AppOutcome {
        report: AppReport {
            seed: config.seed,
            config: echo,
            model: ModelSummary::of(model),
            assets: n,
            returns: returns.rows(),
            elbow,
            k,
            labels: partition.labels().to_vec(),
            clusters,
        },
        partition,
        features,
        affinity,
    })
}
