//! Datasets and CSV ingestion.
//!
//! CSV layout: a header row naming `y`, an optional `delta` column, and
//! covariate columns `x1..xp`. Column order in the file is free; the `x`
//! columns must be numbered contiguously from 1.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Covariates (row-major `n x p`), responses and optional censoring indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    n: usize,
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    delta: Option<Vec<u8>>,
}

impl Dataset {
    /// Builds a dataset from row-major covariates.
    pub fn from_flat(
        n: usize,
        p: usize,
        x: Vec<f64>,
        y: Vec<f64>,
        delta: Option<Vec<u8>>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidData(format!("need n >= 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(Error::InvalidData("need at least one covariate".into()));
        }
        if x.len() != n * p {
            return Err(Error::InvalidData(format!(
                "covariate buffer has {} entries, expected {}",
                x.len(),
                n * p
            )));
        }
        if y.len() != n {
            return Err(Error::InvalidData(format!(
                "response has {} entries, expected {n}",
                y.len()
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite covariate at row {}, column {}",
                pos / p + 1,
                pos % p + 1
            )));
        }
        if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite response at row {}",
                pos + 1
            )));
        }
        if let Some(d) = &delta {
            if d.len() != n {
                return Err(Error::InvalidData(format!(
                    "delta has {} entries, expected {n}",
                    d.len()
                )));
            }
            if let Some(pos) = d.iter().position(|&v| v > 1) {
                return Err(Error::InvalidData(format!(
                    "delta must be 0 or 1 (row {})",
                    pos + 1
                )));
            }
        }
        Ok(Self { n, p, x, y, delta })
    }

    /// Builds a dataset from covariate rows.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>, delta: Option<Vec<u8>>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidData("ragged covariate rows".into()));
        }
        let x = rows.iter().flatten().copied().collect();
        Self::from_flat(rows.len(), p, x, y, delta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn x_flat(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn delta(&self) -> Option<&[u8]> {
        self.delta.as_deref()
    }

    pub fn is_censored(&self) -> bool {
        self.delta.is_some()
    }

    /// Linear predictor `X beta` for every row.
    pub fn project(&self, beta: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(beta.len(), self.p);
        out.clear();
        out.extend(
            self.x
                .chunks_exact(self.p)
                .map(|r| r.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()),
        );
    }

    /// Rows in the given order (repeats allowed, as in a bootstrap resample).
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut x = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        let y = idx.iter().map(|&i| self.y[i]).collect();
        let delta = self
            .delta
            .as_ref()
            .map(|d| idx.iter().map(|&i| d[i]).collect());
        Self::from_flat(idx.len(), self.p, x, y, delta)
    }

    /// Same covariates with responses mapped through `f`.
    pub fn map_y(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let y = self.y.iter().map(|&v| f(v)).collect();
        Self::from_flat(self.n, self.p, self.x.clone(), y, self.delta.clone())
    }

    /// Attaches (or replaces) censoring indicators.
    pub fn with_delta(&self, delta: Vec<u8>) -> Result<Self> {
        Self::from_flat(self.n, self.p, self.x.clone(), self.y.clone(), Some(delta))
    }

    pub fn without_delta(&self) -> Self {
        Self {
            delta: None,
            ..self.clone()
        }
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Csv {
                record: 0,
                message: e.to_string(),
            })?
            .clone();

        let mut y_col = None;
        let mut delta_col = None;
        let mut x_cols: Vec<(usize, usize)> = Vec::new();
        for (c, name) in headers.iter().enumerate() {
            match name {
                "y" => y_col = Some(c),
                "delta" => delta_col = Some(c),
                other => {
                    let k = other
                        .strip_prefix('x')
                        .and_then(|s| s.parse::<usize>().ok())
                        .filter(|&k| k >= 1)
                        .ok_or_else(|| Error::Csv {
                            record: 0,
                            message: format!("unexpected column `{other}`"),
                        })?;
                    x_cols.push((k, c));
                }
            }
        }
        let y_col = y_col.ok_or_else(|| Error::MissingColumn("y".into()))?;
        x_cols.sort_unstable();
        if x_cols.is_empty() {
            return Err(Error::MissingColumn("x1".into()));
        }
        for (expect, &(k, _)) in (1..).zip(&x_cols) {
            if k != expect {
                return Err(Error::MissingColumn(format!("x{expect}")));
            }
        }

        let p = x_cols.len();
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut delta = delta_col.map(|_| Vec::new());
        for (r, rec) in rdr.records().enumerate() {
            let record = r + 1;
            let rec = rec.map_err(|e| Error::Csv {
                record,
                message: e.to_string(),
            })?;
            let field = |c: usize, name: &str| -> Result<f64> {
                let raw = rec.get(c).ok_or_else(|| Error::Csv {
                    record,
                    message: format!("missing field `{name}`"),
                })?;
                raw.parse::<f64>().map_err(|_| Error::Csv {
                    record,
                    message: format!("`{name}` is not a number: {raw:?}"),
                })
            };
            y.push(field(y_col, "y")?);
            for &(k, c) in &x_cols {
                x.push(field(c, &format!("x{k}"))?);
            }
            if let (Some(dc), Some(d)) = (delta_col, delta.as_mut()) {
                let v = field(dc, "delta")?;
                if v != 0.0 && v != 1.0 {
                    return Err(Error::Csv {
                        record,
                        message: format!("`delta` must be 0 or 1, got {v}"),
                    });
                }
                d.push(v as u8);
            }
        }
        let n = y.len();
        Self::from_flat(n, p, x, y, delta)
    }

    /// Writes the dataset in the same CSV layout accepted by [`Dataset::read_csv`].
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string()];
        if self.delta.is_some() {
            header.push("delta".into());
        }
        header.extend((1..=self.p).map(|k| format!("x{k}")));
        let to_err = |e: csv::Error| Error::Csv {
            record: 0,
            message: e.to_string(),
        };
        w.write_record(&header).map_err(to_err)?;
        for i in 0..self.n {
            let mut rec = vec![format!("{:?}", self.y[i])];
            if let Some(d) = &self.delta {
                rec.push(d[i].to_string());
            }
            rec.extend(self.row(i).iter().map(|v| format!("{v:?}")));
            w.write_record(&rec).map_err(to_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_nonfinite() {
        assert!(Dataset::from_rows(&[vec![1.0]], vec![1.0], None).is_err());
        assert!(Dataset::from_rows(&[vec![1.0], vec![f64::NAN]], vec![1.0, 2.0], None).is_err());
        assert!(Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![1.0, f64::INFINITY], None).is_err());
        assert!(Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![1.0, 2.0], Some(vec![0, 2])).is_err());
    }

    #[test]
    fn csv_round_trip_and_column_order() {
        let text = "x2,y,delta,x1\r\n1.5,3,1,0.5\r\n-2,4,0,1\n";
        let d = Dataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.p(), 2);
        assert_eq!(d.row(0), &[0.5, 1.5]);
        assert_eq!(d.y(), &[3.0, 4.0]);
        assert_eq!(d.delta(), Some(&[1u8, 0][..]));

        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn csv_missing_y_is_named() {
        let err = Dataset::read_csv("x1,x2\n1,2\n3,4\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "y"), "{err}");
    }

    #[test]
    fn csv_gap_in_covariates() {
        let err = Dataset::read_csv("y,x1,x3\n1,2,3\n3,4,5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "x2"));
    }

    #[test]
    fn csv_bad_number() {
        let err = Dataset::read_csv("y,x1\n1,abc\n2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { record: 1, .. }));
    }

    #[test]
    fn select_rows_keeps_delta() {
        let d = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], vec![1.0, 2.0, 3.0], Some(vec![1, 0, 1]))
            .unwrap();
        let s = d.select_rows(&[2, 2, 0]).unwrap();
        assert_eq!(s.y(), &[3.0, 3.0, 1.0]);
        assert_eq!(s.delta(), Some(&[1u8, 1, 1][..]));
    }
}
