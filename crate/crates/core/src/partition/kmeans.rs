use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_k, check_points, sq_dist, Partition};
use crate::error::{Error, Result};
use crate::seeded_rng;

const MAX_ITERATIONS: usize = 300;
const RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub partition: Partition,
    pub centroids: Vec<Vec<f64>>,
    pub wcss: f64,
    /// WCSS after every Lloyd iteration of the winning restart.
    pub trace: Vec<f64>,
    /// Index of the winning restart.
    pub restart: usize,
}

/// Within-cluster sum of squared Euclidean distances to cluster means.
pub fn wcss<P: AsRef<[f64]>>(points: &[P], labels: &[usize]) -> f64 {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let centroids = means(points, labels, k);
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p.as_ref(), &centroids[l]))
        .sum()
}

fn means<P: AsRef<[f64]>>(points: &[P], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = points.first().map_or(0, |p| p.as_ref().len());
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p.as_ref()) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            for v in s.iter_mut() {
                *v /= c as f64;
            }
        }
    }
    sums
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seeds<P: AsRef<[f64]>, R: Rng + ?Sized>(
    points: &[P],
    k: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].as_ref().to_vec()];
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p.as_ref(), &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, d) in dist.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let center = points[idx].as_ref().to_vec();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p.as_ref(), &center));
        }
        centers.push(center);
    }
    centers
}

fn single_run<P: AsRef<[f64]>>(points: &[P], k: usize, seed: u64) -> (Vec<usize>, Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = seeded_rng(seed);
    let mut centers = plus_plus_seeds(points, k, &mut rng);
    let mut labels = vec![0; points.len()];
    let mut trace = Vec::new();
    let mut previous = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut dists = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p.as_ref(), &centers);
            labels[i] = c;
            dists[i] = d;
        }
        repair_empty(points, &mut labels, &mut dists, &mut centers, k);
        centers = means(points, &labels, k);
        let current = wcss_with(points, &labels, &centers);
        trace.push(current);
        if previous.is_finite() && previous - current <= RELATIVE_TOLERANCE * previous {
            break;
        }
        previous = current;
    }
    (labels, centers, trace)
}

/// Moves the point farthest from its center into each empty cluster.
fn repair_empty<P: AsRef<[f64]>>(
    points: &[P],
    labels: &mut [usize],
    dists: &mut [f64],
    centers: &mut [Vec<f64>],
    k: usize,
) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far: Option<usize> = None;
        for i in 0..labels.len() {
            if counts[labels[i]] > 1 && far.is_none_or(|f| dists[i] > dists[f]) {
                far = Some(i);
            }
        }
        let Some(i) = far else { return };
        labels[i] = empty;
        dists[i] = 0.0;
        centers[empty] = points[i].as_ref().to_vec();
    }
}

fn wcss_with<P: AsRef<[f64]>>(points: &[P], labels: &[usize], centers: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p.as_ref(), &centers[l]))
        .sum()
}

/// Lloyd's algorithm from k-means++ seeds, best of `restarts` runs by WCSS
/// (earliest restart on ties).
pub fn kmeans<P, R>(points: &[P], k: usize, restarts: usize, rng: &mut R) -> Result<KMeansResult>
where
    P: AsRef<[f64]> + Sync,
    R: Rng + ?Sized,
{
    check_points(points)?;
    check_k(k, points.len())?;
    if restarts == 0 {
        return Err(Error::InvalidParameter("at least one restart is required".into()));
    }
    let seeds: Vec<u64> = (0..restarts).map(|_| rng.random()).collect();
    let runs: Vec<_> = seeds
        .par_iter()
        .map(|&seed| single_run(points, k, seed))
        .collect();
    let (restart, (labels, centroids, trace)) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            let wa = *a.2.last().expect("at least one iteration");
            let wb = *b.2.last().expect("at least one iteration");
            wa.total_cmp(&wb).then(ia.cmp(ib))
        })
        .expect("restarts > 0");
    let wcss = *trace.last().expect("at least one iteration");
    Ok(KMeansResult {
        partition: Partition::from_labels(&labels),
        centroids,
        wcss,
        trace,
        restart,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowResult {
    /// `wcss[i]` is the WCSS for `K = i + 1`.
    pub wcss: Vec<f64>,
    pub suggested_k: usize,
}

/// The `K` that ends the largest drop `WCSS(K - 1) - WCSS(K)`, smallest on ties.
pub fn suggest_elbow(curve: &[f64]) -> Result<usize> {
    if curve.len() < 2 {
        return Err(Error::InvalidParameter(
            "an elbow needs WCSS for at least K = 1 and K = 2".into(),
        ));
    }
    let mut best = (2, f64::NEG_INFINITY);
    for k in 2..=curve.len() {
        let drop = curve[k - 2] - curve[k - 1];
        if drop > best.1 {
            best = (k, drop);
        }
    }
    Ok(best.0)
}

/// WCSS curve for `K = 1..=k_max` using any partitioner, plus the elbow.
pub fn elbow_curve<P, F>(points: &[P], k_max: usize, mut partition_for: F) -> Result<ElbowResult>
where
    P: AsRef<[f64]>,
    F: FnMut(usize) -> Result<Partition>,
{
    check_points(points)?;
    if k_max < 2 {
        return Err(Error::InvalidParameter(format!(
            "elbow needs K_max >= 2, got {k_max}"
        )));
    }
    check_k(k_max, points.len())?;
    let wcss = (1..=k_max)
        .map(|k| partition_for(k).map(|p| wcss(points, p.labels())))
        .collect::<Result<Vec<_>>>()?;
    let suggested_k = suggest_elbow(&wcss)?;
    Ok(ElbowResult { wcss, suggested_k })
}

/// Elbow over K-means partitions.
pub fn elbow_wcss<P, R>(points: &[P], k_max: usize, restarts: usize, rng: &mut R) -> Result<ElbowResult>
where
    P: AsRef<[f64]> + Sync,
    R: Rng + ?Sized,
{
    elbow_curve(points, k_max, |k| {
        kmeans(points, k, restarts, rng).map(|r| r.partition)
    })
}
