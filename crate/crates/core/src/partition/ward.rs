use serde::{Deserialize, Serialize};

use super::{check_k, check_points, sq_dist, Partition};
use crate::error::Result;

/// One agglomeration step. Leaves are `0..n`; the cluster created by merge
/// `i` gets id `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// Ward distance, equal to twice the increase in within-cluster sum of
    /// squares caused by the merge.
    pub cost: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Partition obtained by stopping after `n - k` merges.
    pub fn cut(&self, k: usize) -> Result<Partition> {
        check_k(k, self.n)?;
        let mut parent: Vec<usize> = (0..2 * self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, m) in self.merges.iter().take(self.n - k).enumerate() {
            let id = self.n + i;
            let a = find(&mut parent, m.left);
            let b = find(&mut parent, m.right);
            parent[a] = id;
            parent[b] = id;
        }
        let roots: Vec<usize> = (0..self.n).map(|i| find(&mut parent, i)).collect();
        Ok(Partition::from_labels(&roots))
    }
}

/// Full Ward agglomeration using the Lance–Williams update on squared
/// Euclidean distances.
pub fn ward_linkage<P: AsRef<[f64]>>(points: &[P]) -> Result<Dendrogram> {
    check_points(points)?;
    let n = points.len();
    let mut d: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| sq_dist(points[i].as_ref(), points[j].as_ref()))
                .collect()
        })
        .collect();
    let mut active: Vec<bool> = vec![true; n];
    let mut size: Vec<usize> = vec![1; n];
    let mut id: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && d[i][j] < best.2 {
                    best = (i, j, d[i][j]);
                }
            }
        }
        let (i, j, dij) = best;
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let updated = ((ni + nk) * d[i][k] + (nj + nk) * d[j][k] - nk * dij) / (ni + nj + nk);
            d[i][k] = updated;
            d[k][i] = updated;
        }
        active[j] = false;
        size[i] += size[j];
        let (left, right) = (id[i].min(id[j]), id[i].max(id[j]));
        merges.push(Merge {
            left,
            right,
            cost: dij,
            size: size[i],
        });
        id[i] = n + step;
    }
    Ok(Dendrogram { n, merges })
}

/// Ward agglomeration cut at `k` clusters.
pub fn ward_hierarchical<P: AsRef<[f64]>>(points: &[P], k: usize) -> Result<Partition> {
    check_points(points)?;
    check_k(k, points.len())?;
    ward_linkage(points)?.cut(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triplets() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (20.0, 0.0), (0.0, 20.0)] {
            for (dx, dy) in [(0.0, 0.1), (0.1, 0.0), (-0.1, -0.1)] {
                pts.push(vec![cx + dx, cy + dy]);
            }
        }
        pts
    }

    #[test]
    fn recovers_separated_triplets() {
        let p = ward_hierarchical(&triplets(), 3).unwrap();
        assert_eq!(p.labels(), &[0, 0, 0, 1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn merge_costs_are_monotone() {
        let d = ward_linkage(&triplets()).unwrap();
        assert_eq!(d.merges().len(), 8);
        assert!(d.merges().windows(2).all(|w| w[1].cost >= w[0].cost));
        assert_eq!(d.merges().last().unwrap().size, 9);
    }

    #[test]
    fn k_equals_n_and_one() {
        let pts = triplets();
        assert_eq!(ward_hierarchical(&pts, 9).unwrap().k(), 9);
        assert_eq!(ward_hierarchical(&pts, 1).unwrap().k(), 1);
        assert!(ward_hierarchical(&pts, 10).is_err());
    }

    #[test]
    fn merge_cost_is_twice_wcss_increase() {
        let pts = vec![vec![0.0], vec![2.0]];
        let d = ward_linkage(&pts).unwrap();
        // WCSS goes from 0 to 2; the Ward distance is 4.
        assert_eq!(d.merges()[0].cost, 4.0);
    }
}
