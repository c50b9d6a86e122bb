use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::TimeSeries;
use crate::scenario::{Family, LabeledCollection, ScenarioConfig};

/// Series read back from a collection CSV. Labels are present only when
/// every row carries one.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredCollection {
    pub series: Vec<TimeSeries>,
    pub labels: Option<Vec<usize>>,
}

/// Index of a directory of simulated collections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub collections: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub file: String,
    pub item_seed: u64,
    pub family: Family,
    pub n: usize,
    pub k: usize,
}

/// Writes `id,label,x1..xT`, one row per series.
pub fn save_collection(collection: &LabeledCollection, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((1..=collection.series_len()).map(|t| format!("x{t}")));
    w.write_record(&header)?;
    for (i, (s, l)) in collection.series().iter().zip(collection.labels()).enumerate() {
        let mut row = vec![i.to_string(), l.to_string()];
        row.extend(s.values().iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`save_collection`]. The label column may be
/// left empty for unlabeled data.
pub fn load_collection(path: &Path) -> Result<StoredCollection> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            detail: "expected header `id,label,x1,...`".into(),
        });
    }
    let mut series = Vec::new();
    let mut labels = Vec::new();
    let mut all_labeled = true;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |col: usize, detail: &str| Error::Cell {
            path: path.to_path_buf(),
            row: row + 1,
            column: header.get(col).unwrap_or("?").to_string(),
            detail: detail.to_string(),
        };
        if record.len() != header.len() {
            return Err(cell(record.len().min(header.len()), "ragged row"));
        }
        match record[1].trim() {
            "" => all_labeled = false,
            s => labels.push(s.parse().map_err(|_| cell(1, "label is not an integer"))?),
        }
        let values = (2..record.len())
            .map(|c| {
                record[c]
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| cell(c, "not a finite number"))
            })
            .collect::<Result<Vec<_>>>()?;
        series.push(TimeSeries::new(values)?);
    }
    if series.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            detail: "no series".into(),
        });
    }
    let labels = (all_labeled && labels.len() == series.len()).then_some(labels);
    Ok(StoredCollection { series, labels })
}
