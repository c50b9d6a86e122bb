//! Hard partitions from affinity matrices (spectral clustering with known
//! `K`, Louvain with `K` inferred) and the classical feature-space baselines
//! (K-means, PAM K-medoids, Ward agglomeration) with elbow selection.
//!
//! Ties (equal distances, equal gains) always resolve to the lowest index.

mod kmeans;
mod kmedoids;
mod louvain;
mod spectral;
mod ward;

pub use kmeans::{elbow_curve, elbow_wcss, kmeans, suggest_elbow, wcss, ElbowResult, KMeansResult};
pub use kmedoids::{kmedoids, KMedoidsResult};
pub use louvain::{louvain, modularity, GraphView};
pub use spectral::{spectral_cluster, spectral_embedding, SPECTRAL_RESTARTS};
pub use ward::{ward_hierarchical, ward_linkage, Dendrogram, Merge};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::canonicalize_labels;

/// Cluster labels `0..k` in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Canonicalizes arbitrary labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let (labels, map) = canonicalize_labels(labels);
        let k = map.iter().filter(|m| m.is_some()).count();
        Self { labels, k }
    }

    pub fn single(n: usize) -> Self {
        Self::from_labels(&vec![0; n])
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "number of clusters must satisfy 1 <= K <= n, got K={k}, n={n}"
        )));
    }
    Ok(())
}

pub(crate) fn check_points<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let d = points
        .first()
        .map(|p| p.as_ref().len())
        .ok_or_else(|| Error::InvalidParameter("no points to cluster".into()))?;
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.as_ref().len(),
        });
    }
    Ok(d)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
