use rand::Rng;

use super::{check_k, check_points, sq_dist, Partition};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct KMedoidsResult {
    pub partition: Partition,
    /// Indices of the medoid points, one per cluster in label order.
    pub medoids: Vec<usize>,
    /// Sum of Euclidean distances to the nearest medoid.
    pub cost: f64,
    /// Cost after BUILD and after every accepted swap.
    pub trace: Vec<f64>,
}

/// PAM: greedy BUILD followed by best-improvement SWAP until no swap lowers
/// the total distance.
///
/// PAM is deterministic; the generator is accepted for interface symmetry
/// with the other partitioners and left untouched.
pub fn kmedoids<P, R>(points: &[P], k: usize, _rng: &mut R) -> Result<KMedoidsResult>
where
    P: AsRef<[f64]>,
    R: Rng + ?Sized,
{
    check_points(points)?;
    let n = points.len();
    check_k(k, n)?;
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| sq_dist(points[i].as_ref(), points[j].as_ref()).sqrt())
                .collect()
        })
        .collect();

    let mut medoids = build(&dist, k);
    let mut is_medoid = vec![false; n];
    for &m in &medoids {
        is_medoid[m] = true;
    }
    let (mut near, mut second) = nearest_two(&dist, &medoids);
    let mut cost: f64 = (0..n).map(|o| dist[o][medoids[near[o]]]).sum();
    let mut trace = vec![cost];

    loop {
        // Best (slot, candidate) swap by total cost change.
        let mut best: Option<(f64, usize, usize)> = None;
        for (slot, _) in medoids.iter().enumerate() {
            for h in 0..n {
                if is_medoid[h] {
                    continue;
                }
                let mut delta = 0.0;
                for o in 0..n {
                    let d_near = dist[o][medoids[near[o]]];
                    let d_h = dist[o][h];
                    if near[o] == slot {
                        let d_second = second[o].map_or(f64::INFINITY, |s| dist[o][medoids[s]]);
                        delta += d_h.min(d_second) - d_near;
                    } else {
                        delta += (d_h - d_near).min(0.0);
                    }
                }
                if best.is_none_or(|(b, _, _)| delta < b) {
                    best = Some((delta, slot, h));
                }
            }
        }
        let Some((delta, slot, h)) = best else { break };
        // Relative guard so rounding noise cannot cause endless swapping.
        if delta >= -1e-12 * cost.max(1.0) {
            break;
        }
        is_medoid[medoids[slot]] = false;
        is_medoid[h] = true;
        medoids[slot] = h;
        (near, second) = nearest_two(&dist, &medoids);
        let next: f64 = (0..n).map(|o| dist[o][medoids[near[o]]]).sum();
        if next >= cost {
            break;
        }
        cost = next;
        trace.push(cost);
    }

    let raw: Vec<usize> = near.clone();
    let partition = Partition::from_labels(&raw);
    // Reorder medoids to follow canonical labels.
    let mut ordered = vec![0; partition.k()];
    for (o, &l) in partition.labels().iter().enumerate() {
        ordered[l] = medoids[raw[o]];
    }
    Ok(KMedoidsResult {
        partition,
        medoids: ordered,
        cost,
        trace,
    })
}

fn build(dist: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = dist.len();
    let first = (0..n)
        .min_by(|&a, &b| {
            let ca: f64 = dist[a].iter().sum();
            let cb: f64 = dist[b].iter().sum();
            ca.total_cmp(&cb).then(a.cmp(&b))
        })
        .expect("n >= 1");
    let mut medoids = vec![first];
    let mut current: Vec<f64> = dist[first].clone();
    while medoids.len() < k {
        let mut best: Option<(f64, usize)> = None;
        for h in 0..n {
            if medoids.contains(&h) {
                continue;
            }
            let gain: f64 = (0..n).map(|o| (current[o] - dist[o][h]).max(0.0)).sum();
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, h));
            }
        }
        let (_, h) = best.expect("k <= n leaves a candidate");
        for o in 0..n {
            current[o] = current[o].min(dist[o][h]);
        }
        medoids.push(h);
    }
    medoids
}

/// Slot of the nearest and second-nearest medoid for each point, ties to
/// the lowest slot.
fn nearest_two(dist: &[Vec<f64>], medoids: &[usize]) -> (Vec<usize>, Vec<Option<usize>>) {
    let n = dist.len();
    let mut near = vec![0; n];
    let mut second = vec![None; n];
    for o in 0..n {
        let mut first: Option<usize> = None;
        let mut runner: Option<usize> = None;
        for (slot, &m) in medoids.iter().enumerate() {
            let d = dist[o][m];
            match first {
                None => first = Some(slot),
                Some(f) if d < dist[o][medoids[f]] => {
                    runner = first;
                    first = Some(slot);
                }
                _ => {
                    if runner.is_none_or(|r| d < dist[o][medoids[r]]) {
                        runner = Some(slot);
                    }
                }
            }
        }
        // A medoid always belongs to its own cluster, even if duplicated.
        if let Some(slot) = medoids.iter().position(|&m| m == o) {
            if slot != first.unwrap_or(slot) && dist[o][medoids[first.unwrap()]] == 0.0 {
                runner = first;
                first = Some(slot);
            }
        }
        near[o] = first.expect("k >= 1");
        second[o] = runner;
    }
    (near, second)
}
