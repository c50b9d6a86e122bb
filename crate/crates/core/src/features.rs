//! Per-series statistical features: sample autocorrelations (ACF) and
//! quantile autocorrelations (QAF).
//!
//! Both estimators use the `1/T` normalization on every sum. QAF entries are
//! laid out lexicographically by `(tau, tau', lag)`; the network's input order
//! depends on it, so the layout travels with every dataset and model file.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::TimeSeries;
use crate::scenario::LabeledCollection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Acf,
    Qaf,
}

/// Which features to compute. Doubles as the layout descriptor of the
/// resulting vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    pub lags: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<f64>,
}

impl FeatureSpec {
    pub fn acf(lags: Vec<usize>) -> Self {
        Self {
            kind: FeatureKind::Acf,
            lags,
            levels: Vec::new(),
        }
    }

    pub fn qaf(levels: Vec<f64>, lags: Vec<usize>) -> Self {
        Self {
            kind: FeatureKind::Qaf,
            lags,
            levels,
        }
    }

    /// Lags 1, 2, 3.
    pub fn default_acf() -> Self {
        Self::acf(vec![1, 2, 3])
    }

    /// Levels {0.1, 0.5, 0.9} and lags {1, 2, 3}.
    pub fn default_qaf() -> Self {
        Self::qaf(vec![0.1, 0.5, 0.9], vec![1, 2, 3])
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            FeatureKind::Acf => self.lags.len(),
            FeatureKind::Qaf => self.levels.len() * self.levels.len() * self.lags.len(),
        }
    }

    /// Checks the grid itself, independent of any series length.
    pub fn validate(&self) -> Result<()> {
        if self.lags.is_empty() {
            return Err(Error::InvalidParameter("at least one lag is required".into()));
        }
        if self.lags.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("lags must be strictly increasing".into()));
        }
        match self.kind {
            FeatureKind::Acf => {
                if !self.levels.is_empty() {
                    return Err(Error::InvalidParameter(
                        "ACF features take no probability levels".into(),
                    ));
                }
            }
            FeatureKind::Qaf => {
                if self.lags[0] == 0 {
                    return Err(Error::InvalidParameter("QAF lags must be positive".into()));
                }
                if self.levels.is_empty() {
                    return Err(Error::InvalidParameter("QAF needs probability levels".into()));
                }
                if self.levels.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
                    return Err(Error::InvalidParameter("levels must lie in (0, 1)".into()));
                }
                if self.levels.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParameter(
                        "levels must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn validate_for_len(&self, len: usize) -> Result<()> {
        self.validate()?;
        let max_lag = *self.lags.last().expect("validated non-empty");
        if max_lag >= len {
            return Err(Error::InvalidParameter(format!(
                "largest lag {max_lag} must be below the series length {len}"
            )));
        }
        Ok(())
    }

    /// Column names in layout order, e.g. `acf_2` or `qaf_0.1_0.9_2`.
    pub fn names(&self) -> Vec<String> {
        match self.kind {
            FeatureKind::Acf => self.lags.iter().map(|l| format!("acf_{l}")).collect(),
            FeatureKind::Qaf => {
                let mut names = Vec::with_capacity(self.dim());
                for t1 in &self.levels {
                    for t2 in &self.levels {
                        for l in &self.lags {
                            names.push(format!("qaf_{t1}_{t2}_{l}"));
                        }
                    }
                }
                names
            }
        }
    }

    pub fn extract(&self, series: &TimeSeries) -> Result<FeatureVector> {
        match self.kind {
            FeatureKind::Acf => acf(series, &self.lags),
            FeatureKind::Qaf => qaf(series, &self.levels, &self.lags),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Sample autocorrelations at the requested lags.
pub fn acf(series: &TimeSeries, lags: &[usize]) -> Result<FeatureVector> {
    let x = series.values();
    let len = x.len();
    if let Some(&bad) = lags.iter().find(|&&l| l >= len) {
        return Err(Error::InvalidParameter(format!(
            "lag {bad} must be below the series length {len}"
        )));
    }
    let mean = x.iter().sum::<f64>() / len as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if !(denom > 0.0) {
        return Err(Error::DegenerateInput(
            "series has zero sample variance; autocorrelation is undefined".into(),
        ));
    }
    let values = lags
        .iter()
        .map(|&l| {
            if l == 0 {
                return 1.0;
            }
            let num: f64 = centered[l..]
                .iter()
                .zip(&centered[..len - l])
                .map(|(a, b)| a * b)
                .sum();
            num / denom
        })
        .collect();
    Ok(FeatureVector(values))
}

fn quantile_of_sorted(sorted: &[f64], tau: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * tau;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

fn check_level(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "probability level must lie in (0, 1), got {tau}"
        )));
    }
    Ok(())
}

/// Empirical quantile by linear interpolation between order statistics at
/// 1-based position `1 + (T - 1) * tau`.
pub fn empirical_quantile(series: &TimeSeries, tau: f64) -> Result<f64> {
    check_level(tau)?;
    let mut sorted = series.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_of_sorted(&sorted, tau))
}

/// Quantile autocorrelations for every `(tau, tau', lag)` in the grid.
pub fn qaf(series: &TimeSeries, levels: &[f64], lags: &[usize]) -> Result<FeatureVector> {
    let x = series.values();
    let len = x.len();
    for &tau in levels {
        check_level(tau)?;
    }
    if let Some(&bad) = lags.iter().find(|&&l| l >= len) {
        return Err(Error::InvalidParameter(format!(
            "lag {bad} must be below the series length {len}"
        )));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let below: Vec<Vec<bool>> = levels
        .iter()
        .map(|&tau| {
            let q = quantile_of_sorted(&sorted, tau);
            x.iter().map(|&v| v <= q).collect()
        })
        .collect();
    let inv_len = 1.0 / len as f64;
    let mut values = Vec::with_capacity(levels.len() * levels.len() * lags.len());
    for (a, &t1) in levels.iter().enumerate() {
        for (b, &t2) in levels.iter().enumerate() {
            let scale = (t1 * (1.0 - t1) * t2 * (1.0 - t2)).sqrt();
            for &l in lags {
                let count = below[a][..len - l]
                    .iter()
                    .zip(&below[b][l..])
                    .filter(|(p, q)| **p && **q)
                    .count();
                values.push((count as f64 * inv_len - t1 * t2) / scale);
            }
        }
    }
    Ok(FeatureVector(values))
}

/// Feature vectors of a collection, sharing one layout, optionally labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDataset {
    layout: FeatureSpec,
    vectors: Vec<FeatureVector>,
    labels: Option<Vec<usize>>,
}

impl FeatureDataset {
    pub fn new(
        layout: FeatureSpec,
        vectors: Vec<FeatureVector>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let d = layout.dim();
        if let Some(v) = vectors.iter().find(|v| v.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.dim(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != vectors.len() {
                return Err(Error::LengthMismatch {
                    left: vectors.len(),
                    right: l.len(),
                });
            }
        }
        Ok(Self {
            layout,
            vectors,
            labels,
        })
    }

    pub fn layout(&self) -> &FeatureSpec {
        &self.layout
    }

    pub fn vectors(&self) -> &[FeatureVector] {
        &self.vectors
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Writes one row per series: `series,label,<feature names...>`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["series".to_string(), "label".to_string()];
        header.extend(self.layout.names());
        w.write_record(&header)?;
        for (i, v) in self.vectors.iter().enumerate() {
            let mut row = vec![
                i.to_string(),
                self.labels
                    .as_ref()
                    .map(|l| l[i].to_string())
                    .unwrap_or_default(),
            ];
            row.extend(v.values().iter().map(|x| format!("{x:?}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads a CSV written by [`FeatureDataset::write_csv`]; the layout is
    /// recovered from the column names.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let header = reader.headers()?.clone();
        let malformed = |detail: String| Error::Malformed {
            path: path.to_path_buf(),
            detail,
        };
        if header.len() < 3 || &header[0] != "series" || &header[1] != "label" {
            return Err(malformed("expected header `series,label,<features...>`".into()));
        }
        let names: Vec<&str> = header.iter().skip(2).collect();
        let layout = layout_from_names(&names).ok_or_else(|| {
            malformed("feature columns do not form an ACF or QAF grid".into())
        })?;
        let mut vectors = Vec::new();
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
                s => labels.push(s.parse::<usize>().map_err(|_| cell(1, "label is not an integer"))?),
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
            vectors.push(FeatureVector(values));
        }
        let labels = (all_labeled && labels.len() == vectors.len()).then_some(labels);
        FeatureDataset::new(layout, vectors, labels)
    }
}

fn layout_from_names(names: &[&str]) -> Option<FeatureSpec> {
    if names.iter().all(|n| n.starts_with("acf_")) {
        let lags = names
            .iter()
            .map(|n| n[4..].parse().ok())
            .collect::<Option<Vec<usize>>>()?;
        let spec = FeatureSpec::acf(lags);
        return (spec.validate().is_ok()).then_some(spec);
    }
    let mut levels: Vec<f64> = Vec::new();
    let mut lags: Vec<usize> = Vec::new();
    for n in names {
        let mut parts = n.strip_prefix("qaf_")?.split('_');
        let t1: f64 = parts.next()?.parse().ok()?;
        let _t2: f64 = parts.next()?.parse().ok()?;
        let l: usize = parts.next()?.parse().ok()?;
        if !levels.contains(&t1) {
            levels.push(t1);
        }
        if !lags.contains(&l) {
            lags.push(l);
        }
    }
    let spec = FeatureSpec::qaf(levels, lags);
    (spec.validate().is_ok() && spec.names() == names).then_some(spec)
}

/// Computes features for every series in order; failures are collected with
/// their series index.
pub fn extract_series(series: &[TimeSeries], spec: &FeatureSpec) -> Result<Vec<FeatureVector>> {
    spec.validate()?;
    let results: Vec<Result<FeatureVector>> = series.par_iter().map(|s| spec.extract(s)).collect();
    let mut vectors = Vec::with_capacity(series.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => vectors.push(v),
            Err(e) => failures.push((i, Box::new(e))),
        }
    }
    if failures.is_empty() {
        Ok(vectors)
    } else {
        Err(Error::SeriesFailures(failures))
    }
}

pub fn extract_features(collection: &LabeledCollection, spec: &FeatureSpec) -> Result<FeatureDataset> {
    spec.validate_for_len(collection.series_len())?;
    let vectors = extract_series(collection.series(), spec)?;
    FeatureDataset::new(spec.clone(), vectors, Some(collection.labels().to_vec()))
}

pub fn extract_unlabeled(series: &[TimeSeries], spec: &FeatureSpec) -> Result<FeatureDataset> {
    let vectors = extract_series(series, spec)?;
    FeatureDataset::new(spec.clone(), vectors, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn acf_hand_value() {
        let r = acf(&ts(&[1.0, 2.0, 3.0, 4.0, 5.0]), &[0, 1]).unwrap();
        assert_eq!(r.values()[0], 1.0);
        assert!((r.values()[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn acf_constant_series_is_degenerate() {
        assert!(matches!(
            acf(&ts(&[2.0; 6]), &[1]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn quantile_interpolation() {
        assert_eq!(empirical_quantile(&ts(&[1.0, 2.0, 3.0, 4.0, 5.0]), 0.5).unwrap(), 3.0);
        assert_eq!(empirical_quantile(&ts(&[4.0, 1.0, 3.0, 2.0]), 0.5).unwrap(), 2.5);
        let grid: Vec<f64> = (0..=100).map(f64::from).collect();
        assert!((empirical_quantile(&ts(&grid), 0.25).unwrap() - 25.0).abs() < 1e-12);
        assert!(empirical_quantile(&ts(&grid), 0.0).is_err());
        assert!(empirical_quantile(&ts(&grid), 1.0).is_err());
    }

    #[test]
    fn qaf_hand_count() {
        let r = qaf(&ts(&[1.0, 2.0, 3.0, 4.0, 5.0]), &[0.5], &[1]).unwrap();
        assert!((r.values()[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn qaf_constant_series_is_defined() {
        let r = qaf(&ts(&[1.0; 10]), &[0.5], &[1, 2]).unwrap();
        assert!(r.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn default_qaf_has_27_entries() {
        let spec = FeatureSpec::default_qaf();
        assert_eq!(spec.dim(), 27);
        assert_eq!(spec.names()[0], "qaf_0.1_0.1_1");
        assert_eq!(spec.names()[5], "qaf_0.1_0.5_3");
        assert_eq!(spec.names()[26], "qaf_0.9_0.9_3");
    }

    #[test]
    fn spec_validation() {
        assert!(FeatureSpec::acf(vec![2, 1]).validate().is_err());
        assert!(FeatureSpec::qaf(vec![0.5, 0.1], vec![1]).validate().is_err());
        assert!(FeatureSpec::qaf(vec![0.5, 1.0], vec![1]).validate().is_err());
        assert!(FeatureSpec::default_acf().validate_for_len(3).is_err());
        assert!(FeatureSpec::default_acf().validate_for_len(4).is_ok());
    }

    #[test]
    fn layout_recovered_from_names() {
        for spec in [FeatureSpec::default_acf(), FeatureSpec::default_qaf()] {
            let names = spec.names();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            assert_eq!(layout_from_names(&refs), Some(spec));
        }
    }

    #[test]
    fn extraction_reports_failing_series() {
        let series = vec![ts(&[1.0, 2.0, 0.5, 3.0]), ts(&[1.0; 4]), ts(&[2.0; 4])];
        match extract_series(&series, &FeatureSpec::acf(vec![1])) {
            Err(Error::SeriesFailures(f)) => {
                assert_eq!(f.iter().map(|(i, _)| *i).collect::<Vec<_>>(), vec![1, 2]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
