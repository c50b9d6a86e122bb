use rand::seq::SliceRandom;
use rand::Rng;

use super::Partition;
use crate::error::{Error, Result};
use crate::network::AffinityMatrix;

/// Dense weighted undirected graph. Off-diagonal entries are edge weights;
/// diagonal entries are self-loops counted as in the adjacency-matrix form of
/// modularity (they only arise after aggregation).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphView {
    n: usize,
    weights: Vec<f64>,
}

impl GraphView {
    /// Edge weights are the off-diagonal affinities; the diagonal is dropped.
    pub fn from_affinity(a: &AffinityMatrix) -> Self {
        let n = a.n();
        let weights = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| if i == j { 0.0 } else { a.get(i, j) })
            .collect();
        Self { n, weights }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    fn degrees(&self) -> Vec<f64> {
        self.weights.chunks(self.n.max(1)).map(|r| r.iter().sum()).collect()
    }

    fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn aggregate(&self, community: &[usize], count: usize) -> Self {
        let mut weights = vec![0.0; count * count];
        for i in 0..self.n {
            for j in 0..self.n {
                weights[community[i] * count + community[j]] += self.weight(i, j);
            }
        }
        Self { n: count, weights }
    }
}

/// Newman–Girvan modularity at resolution 1.
pub fn modularity(g: &GraphView, labels: &[usize]) -> Result<f64> {
    if labels.len() != g.n {
        return Err(Error::LengthMismatch {
            left: g.n,
            right: labels.len(),
        });
    }
    let two_m = g.total();
    if two_m <= 0.0 {
        return Ok(0.0);
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; k];
    let mut tot = vec![0.0; k];
    let deg = g.degrees();
    for i in 0..g.n {
        tot[labels[i]] += deg[i];
        for j in 0..g.n {
            if labels[i] == labels[j] {
                internal[labels[i]] += g.weight(i, j);
            }
        }
    }
    Ok(internal
        .iter()
        .zip(&tot)
        .map(|(&w, &t)| w / two_m - (t / two_m).powi(2))
        .sum())
}

const GAIN_EPSILON: f64 = 1e-12;

/// One local-moving phase. Returns canonical community labels and whether
/// any node moved.
fn local_moves<R: Rng + ?Sized>(g: &GraphView, rng: &mut R) -> (Vec<usize>, bool) {
    let n = g.n;
    let deg = g.degrees();
    let two_m = g.total();
    let mut community: Vec<usize> = (0..n).collect();
    let mut tot: Vec<f64> = deg.clone();
    let mut link = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut moved_any = false;
    loop {
        order.shuffle(rng);
        let mut moved = false;
        for &i in &order {
            let own = community[i];
            let mut touched: Vec<usize> = Vec::new();
            for j in 0..n {
                let w = g.weight(i, j);
                if j != i && w > 0.0 {
                    let c = community[j];
                    if link[c] == 0.0 {
                        touched.push(c);
                    }
                    link[c] += w;
                }
            }
            tot[own] -= deg[i];
            let score = |c: usize, link: &[f64], tot: &[f64]| link[c] - deg[i] * tot[c] / two_m;
            let mut best = own;
            let mut best_score = score(own, &link, &tot);
            touched.sort_unstable();
            for &c in &touched {
                let s = score(c, &link, &tot);
                // Gains below rounding level are ignored so sweeps terminate.
                if s > best_score + GAIN_EPSILON * two_m {
                    best = c;
                    best_score = s;
                }
            }
            tot[best] += deg[i];
            if best != own {
                community[i] = best;
                moved = true;
            }
            for &c in &touched {
                link[c] = 0.0;
            }
            link[own] = 0.0;
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    let (labels, _) = crate::scenario::canonicalize_labels(&community);
    (labels, moved_any)
}

/// Multi-level Louvain community detection on the off-diagonal affinities.
/// The number of communities is inferred.
pub fn louvain<R: Rng + ?Sized>(a: &AffinityMatrix, rng: &mut R) -> Result<Partition> {
    a.validate()?;
    let n = a.n();
    let mut graph = GraphView::from_affinity(a);
    if n <= 1 || graph.total() <= 0.0 {
        return Ok(Partition::from_labels(&(0..n).collect::<Vec<_>>()));
    }
    let mut membership: Vec<usize> = (0..n).collect();
    loop {
        let (labels, moved) = local_moves(&graph, rng);
        if !moved {
            break;
        }
        for m in membership.iter_mut() {
            *m = labels[*m];
        }
        let count = labels.iter().copied().max().map_or(0, |m| m + 1);
        graph = graph.aggregate(&labels, count);
        if count == 1 {
            break;
        }
    }
    Ok(Partition::from_labels(&membership))
}
