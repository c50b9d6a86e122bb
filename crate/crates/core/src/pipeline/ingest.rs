use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::process::TimeSeries;

/// Log-returns of several assets on a shared calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsMatrix {
    assets: Vec<String>,
    /// `columns[a][t]` is the return of asset `a` at step `t`.
    columns: Vec<Vec<f64>>,
}

impl ReturnsMatrix {
    pub fn new(assets: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if assets.len() != columns.len() {
            return Err(Error::LengthMismatch {
                left: assets.len(),
                right: columns.len(),
            });
        }
        let rows = columns.first().map_or(0, Vec::len);
        if rows == 0 {
            return Err(Error::DegenerateInput("returns matrix has no rows".into()));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::LengthMismatch {
                left: rows,
                right: c.len(),
            });
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite return".into()));
        }
        Ok(Self { assets, columns })
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column(&self, asset: usize) -> &[f64] {
        &self.columns[asset]
    }

    /// One series per asset, in column order.
    pub fn to_series(&self) -> Result<Vec<TimeSeries>> {
        self.columns.iter().map(|c| TimeSeries::new(c.clone())).collect()
    }

    /// Same layout as the price file: header of assets, one row per step.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.assets)?;
        for t in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| format!("{:?}", c[t])))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a price panel and returns column-wise log-returns
/// `ln(P_t / P_{t-1})`, one row fewer than the input.
///
/// Every cell must be a positive finite number; failures name the row
/// (1-based, counting data rows after the header) and the asset column.
pub fn ingest_prices(path: &Path) -> Result<ReturnsMatrix> {
    let (assets, prices) = read_panel(path)?;
    for (a, col) in prices.iter().enumerate() {
        if let Some(t) = col.iter().position(|&p| !(p > 0.0)) {
            return Err(Error::Cell {
                path: path.to_path_buf(),
                row: t + 1,
                column: assets[a].clone(),
                detail: format!("price must be positive, got {}", col[t]),
            });
        }
    }
    if prices[0].len() < 2 {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            detail: "need at least two rows of prices".into(),
        });
    }
    let columns = prices
        .iter()
        .map(|col| col.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
        .collect();
    ReturnsMatrix::new(assets, columns)
}

/// Reads a returns CSV in the layout written by [`ReturnsMatrix::write_csv`].
pub fn load_returns(path: &Path) -> Result<ReturnsMatrix> {
    let (assets, columns) = read_panel(path)?;
    ReturnsMatrix::new(assets, columns)
}

fn read_panel(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let assets: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if assets.is_empty() || assets.iter().any(String::is_empty) {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            detail: "header must name every column".into(),
        });
    }
    let mut columns = vec![Vec::new(); assets.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |col: usize, detail: String| Error::Cell {
            path: path.to_path_buf(),
            row: row + 1,
            column: assets.get(col).cloned().unwrap_or_else(|| format!("#{}", col + 1)),
            detail,
        };
        if record.len() != assets.len() {
            return Err(cell(
                record.len().min(assets.len()),
                format!("ragged row: {} cells for {} columns", record.len(), assets.len()),
            ));
        }
        for (c, raw) in record.iter().enumerate() {
            let raw = raw.trim();
            if raw.is_empty() {
                return Err(cell(c, "missing value".into()));
            }
            let v: f64 = raw
                .parse()
                .map_err(|_| cell(c, format!("`{raw}` is not a number")))?;
            if !v.is_finite() {
                return Err(cell(c, format!("`{raw}` is not finite")));
            }
            columns[c].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            detail: "no data rows".into(),
        });
    }
    Ok((assets, columns))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_return() {
        let f = write("A\n100\n110\n");
        let r = ingest_prices(f.path()).unwrap();
        assert_eq!(r.rows(), 1);
        assert!((r.column(0)[0] - 0.095310).abs() < 1e-6);
        assert_eq!(r.column(0)[0], (1.1f64).ln());
    }

    #[test]
    fn constant_prices_give_zero_returns() {
        let f = write("A,B\n5,1\n5,2\n5,4\n");
        let r = ingest_prices(f.path()).unwrap();
        assert_eq!(r.column(0), &[0.0, 0.0]);
        assert_eq!(r.assets(), &["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn zero_price_names_the_cell() {
        let f = write("A,B\n5,1\n5,0\n");
        match ingest_prices(f.path()) {
            Err(Error::Cell { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "B");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_and_ragged_cells() {
        let f = write("A,B\n5,1\n5,\n");
        assert!(matches!(ingest_prices(f.path()), Err(Error::Cell { row: 2, .. })));
        let f = write("A,B\n5,1\n5\n");
        assert!(matches!(ingest_prices(f.path()), Err(Error::Cell { row: 2, .. })));
        let f = write("A,B\n5,1\n");
        assert!(ingest_prices(f.path()).is_err());
    }

    #[test]
    fn returns_csv_round_trips() {
        let f = write("A,B\n5,1\n6,2\n7,3.5\n");
        let r = ingest_prices(f.path()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let g = write(std::str::from_utf8(&buf).unwrap());
        assert_eq!(load_returns(g.path()).unwrap(), r);
    }
}
