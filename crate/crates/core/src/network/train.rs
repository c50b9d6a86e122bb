use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, AdamConfig, AdamState, NetworkParams};
use crate::error::{Error, Result};
use crate::features::{FeatureDataset, FeatureSpec};
use crate::{seeded_rng, stream_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Number of simulated datasets in the single training pass.
    pub datasets: usize,
    pub adam: AdamConfig,
    /// Collections with at most this many series contribute all pairs.
    pub all_pairs_max_n: usize,
    /// Pairs sampled from larger collections, split evenly between
    /// same-cluster and different-cluster pairs where possible.
    pub pairs_per_dataset: usize,
    /// Pairs per Adam step; `None` takes one step per dataset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            datasets: 2000,
            adam: AdamConfig::default(),
            all_pairs_max_n: 32,
            pairs_per_dataset: 512,
            batch_size: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.pairs_per_dataset == 0 {
            return Err(Error::Config("pairs_per_dataset must be at least 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub layout: FeatureSpec,
    /// Mean batch loss of every Adam step, in order.
    pub loss_trace: Vec<f64>,
}

/// Labeled pairs `(i, j, same_cluster)` with `i < j` used for one dataset.
pub fn sample_pairs<R: Rng + ?Sized>(
    labels: &[usize],
    config: &TrainConfig,
    rng: &mut R,
) -> Vec<(usize, usize, bool)> {
    let n = labels.len();
    let all = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, labels[i] == labels[j])));
    if n <= config.all_pairs_max_n {
        return all.collect();
    }
    let (mut pos, mut neg): (Vec<_>, Vec<_>) = all.partition(|p| p.2);
    let budget = config.pairs_per_dataset;
    let half = budget / 2;
    let take_pos = pos.len().min(half.max(budget.saturating_sub(neg.len())));
    let take_neg = neg.len().min(budget - take_pos);
    let (pos, _) = pos.partial_shuffle(rng, take_pos);
    let (neg, _) = neg.partial_shuffle(rng, take_neg);
    let mut pairs: Vec<_> = pos.iter().chain(neg.iter()).copied().collect();
    pairs.sort_unstable();
    pairs
}

/// Trains a freshly initialized network over a stream of labeled datasets.
pub fn train<I>(stream: I, config: &TrainConfig) -> Result<TrainOutcome>
where
    I: IntoIterator<Item = Result<FeatureDataset>>,
{
    config.validate()?;
    let mut stream = stream.into_iter().peekable();
    let layout = match stream.peek() {
        Some(Ok(first)) => first.layout().clone(),
        Some(Err(_)) => return Err(stream.next().unwrap().unwrap_err()),
        None => return Err(Error::InvalidParameter("training stream is empty".into())),
    };
    let mut init_rng = seeded_rng(stream_seed(config.seed, "network-init"));
    let params = NetworkParams::init(layout.dim(), &mut init_rng)?;
    train_from(params, &layout, stream, config)
}

/// Continues training `params` on `stream`; every dataset must use `layout`.
pub fn train_from<I>(
    mut params: NetworkParams,
    layout: &FeatureSpec,
    stream: I,
    config: &TrainConfig,
) -> Result<TrainOutcome>
where
    I: IntoIterator<Item = Result<FeatureDataset>>,
{
    config.validate()?;
    if layout.dim() != params.dims().input {
        return Err(Error::DimensionMismatch {
            expected: params.dims().input,
            got: layout.dim(),
        });
    }
    let mut state = AdamState::new(&params);
    let mut pair_rng = seeded_rng(stream_seed(config.seed, "pair-sampling"));
    let mut loss_trace = Vec::new();
    for (index, dataset) in stream.into_iter().enumerate() {
        let dataset = dataset.map_err(|e| e.at_stage("training-data", index))?;
        if dataset.layout() != layout {
            return Err(Error::LayoutMismatch {
                index,
                detail: format!("expected {:?}, got {:?}", layout, dataset.layout()),
            });
        }
        let labels = dataset.labels().ok_or_else(|| Error::LayoutMismatch {
            index,
            detail: "training dataset has no labels".into(),
        })?;
        let mut pairs = sample_pairs(labels, config, &mut pair_rng);
        if pairs.is_empty() {
            continue;
        }
        let batch = config.batch_size.unwrap_or(pairs.len());
        if batch < pairs.len() {
            // Sorted pairs would give each minibatch a single anchor series.
            pairs.shuffle(&mut pair_rng);
        }
        for chunk in pairs.chunks(batch) {
            let (loss, grads) = params.batch_gradient(dataset.vectors(), chunk)?;
            adam_step(&mut params, &grads, &mut state, &config.adam)?;
            loss_trace.push(loss);
        }
        if !params.is_finite() {
            return Err(Error::Numeric(format!(
                "network parameters diverged after dataset {index}"
            )));
        }
    }
    Ok(TrainOutcome {
        params,
        layout: layout.clone(),
        loss_trace,
    })
}
