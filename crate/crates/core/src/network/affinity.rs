use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::NetworkParams;
use crate::error::{Error, Result};
use crate::features::FeatureDataset;

/// Symmetric `n x n` co-membership probabilities with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl AffinityMatrix {
    /// Validates range, exact symmetry and the unit diagonal.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        let m = Self { n, values };
        m.validate()?;
        Ok(m)
    }

    pub(crate) fn from_upper(n: usize, upper: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
            for j in i + 1..n {
                let v = upper(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { n, values }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i) != 1.0 {
                return Err(Error::Numeric(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..self.n {
                let v = self.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Numeric(format!("entry ({i}, {j}) = {v} outside [0, 1]")));
                }
                if v != self.get(j, i) {
                    return Err(Error::Numeric(format!("entry ({i}, {j}) is not symmetric")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for i in 0..self.n {
            w.write_record(self.row(i).iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(path)?;
        let mut rows = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    cell.trim().parse::<f64>().map_err(|_| Error::Cell {
                        path: path.to_path_buf(),
                        row: r + 1,
                        column: (c + 1).to_string(),
                        detail: format!("`{cell}` is not a number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(rows).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }
}

/// Affinity matrix of a dataset: one forward pass per unordered pair, each
/// vector embedded once.
pub fn affinity_matrix(params: &NetworkParams, features: &FeatureDataset) -> Result<AffinityMatrix> {
    if features.dim() != params.dims().input {
        return Err(Error::DimensionMismatch {
            expected: params.dims().input,
            got: features.dim(),
        });
    }
    let embeddings: Vec<_> = features
        .vectors()
        .par_iter()
        .map(|v| params.embed(v.values()))
        .collect();
    let n = embeddings.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| params.pair_probability(&embeddings[i], &embeddings[j]))
                .collect()
        })
        .collect();
    Ok(AffinityMatrix::from_upper(n, |i, j| upper[i][j - i - 1]))
}
