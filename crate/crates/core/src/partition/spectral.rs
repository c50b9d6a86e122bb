use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use super::{check_k, kmeans, Partition};
use crate::error::{Error, Result};
use crate::network::AffinityMatrix;

/// K-means restarts used on the spectral embedding.
pub const SPECTRAL_RESTARTS: usize = 50;

/// Rows of the eigenvectors for the `k` smallest eigenvalues of
/// `I - D^{-1/2} W D^{-1/2}`, each row scaled to unit length.
///
/// `W` is the affinity matrix including its unit diagonal, so every degree is
/// at least one for a valid affinity matrix; zero-degree rows are left at zero.
pub fn spectral_embedding(a: &AffinityMatrix, k: usize) -> Result<Vec<Vec<f64>>> {
    let n = a.n();
    check_k(k, n)?;
    let degree: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j)).sum())
        .collect();
    let inv_sqrt: Vec<f64> = degree
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let laplacian = DMatrix::from_fn(n, n, |i, j| {
        let identity = if i == j { 1.0 } else { 0.0 };
        identity - inv_sqrt[i] * a.get(i, j) * inv_sqrt[j]
    });
    let eig = SymmetricEigen::new(laplacian);
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite Laplacian eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]).then(x.cmp(&y)));

    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| order[..k].iter().map(|&c| eig.eigenvectors[(i, c)]).collect())
        .collect();
    for row in &mut rows {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(rows)
}

/// Ng–Jordan–Weiss spectral clustering into exactly `k` groups.
pub fn spectral_cluster<R: Rng + ?Sized>(a: &AffinityMatrix, k: usize, rng: &mut R) -> Result<Partition> {
    a.validate()?;
    check_k(k, a.n())?;
    if k == 1 {
        return Ok(Partition::single(a.n()));
    }
    let rows = spectral_embedding(a, k)?;
    Ok(kmeans(&rows, k, SPECTRAL_RESTARTS, rng)?.partition)
}
