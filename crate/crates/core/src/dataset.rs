//! Functional datasets: curves on a shared grid, scalar responses and split labels.
//!
//! The on-disk format is a wide CSV. The header holds the `L` grid points
//! followed by `response` and an optional `split` column; each further row is
//! one curve. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::{CurveSet, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Data(format!(
                "unknown split label {other:?} (expected train, val or test)"
            ))),
        }
    }
}

/// Mean and standard deviation of the training responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

impl Standardization {
    /// Population mean and standard deviation.
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("cannot standardize an empty sample".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let stats = Self {
            mean,
            sd: var.sqrt(),
        };
        stats.check()?;
        Ok(stats)
    }

    fn check(&self) -> Result<()> {
        if self.sd > 0.0 && self.sd.is_finite() {
            Ok(())
        } else {
            Err(Error::Data(format!(
                "response standard deviation must be positive, got {}",
                self.sd
            )))
        }
    }

    pub fn standardize(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check()?;
        Ok(values.iter().map(|v| (v - self.mean) / self.sd).collect())
    }

    pub fn destandardize(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check()?;
        Ok(values.iter().map(|v| v * self.sd + self.mean).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    curves: CurveSet,
    responses: Vec<f64>,
    split: Vec<Split>,
    standardization: Standardization,
}

impl FunctionalDataset {
    pub fn new(curves: CurveSet, responses: Vec<f64>, split: Vec<Split>) -> Result<Self> {
        if responses.len() != curves.len() || split.len() != curves.len() {
            return Err(Error::Data(format!(
                "{} curves, {} responses and {} split labels",
                curves.len(),
                responses.len(),
                split.len()
            )));
        }
        let train: Vec<f64> = responses
            .iter()
            .zip(&split)
            .filter(|(_, s)| **s == Split::Train)
            .map(|(y, _)| *y)
            .collect();
        if train.is_empty() {
            return Err(Error::Data("dataset has no training rows".into()));
        }
        let standardization = Standardization::fit(&train)?;
        Ok(Self {
            curves,
            responses,
            split,
            standardization,
        })
    }

    /// Default split by row order: the first 70% train, the next 15% validation, the rest test.
    pub fn chronological_split(n: usize) -> Vec<Split> {
        let n_train = ((0.70 * n as f64).floor() as usize).max(1).min(n);
        let n_val = ((0.15 * n as f64).floor() as usize)
            .max(usize::from(n > n_train))
            .min(n - n_train);
        (0..n)
            .map(|i| {
                if i < n_train {
                    Split::Train
                } else if i < n_train + n_val {
                    Split::Val
                } else {
                    Split::Test
                }
            })
            .collect()
    }

    pub fn curves(&self) -> &CurveSet {
        &self.curves
    }

    pub fn grid(&self) -> &Grid {
        self.curves.grid()
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn split(&self) -> &[Split] {
        &self.split
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == which).collect()
    }

    /// Curves and raw responses of one split.
    pub fn part(&self, which: Split) -> (CurveSet, Vec<f64>) {
        let idx = self.indices(which);
        let y = idx.iter().map(|&i| self.responses[i]).collect();
        (self.curves.select(&idx), y)
    }

    /// Responses of one split on the training-standardized scale.
    pub fn standardized(&self, which: Split) -> Vec<f64> {
        let (_, y) = self.part(which);
        y.iter()
            .map(|v| (v - self.standardization.mean) / self.standardization.sd)
            .collect()
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::Data(format!("cannot read CSV header: {e}")))?
            .clone();
        let cols: Vec<&str> = header.iter().collect();
        let has_split = cols.last() == Some(&"split");
        let n_meta = if has_split { 2 } else { 1 };
        if cols.len() < n_meta + 2 || cols[cols.len() - n_meta] != "response" {
            return Err(Error::Data(
                "header must list the grid points followed by `response` and optionally `split`".into(),
            ));
        }
        let n_grid = cols.len() - n_meta;
        let points = cols[..n_grid]
            .iter()
            .enumerate()
            .map(|(c, s)| {
                s.parse::<f64>().map_err(|_| {
                    Error::Data(format!("header column {}: grid point {s:?} is not a number", c + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let grid = Grid::new(points).map_err(|e| Error::Data(format!("header: {e}")))?;

        let mut values = Vec::new();
        let mut responses = Vec::new();
        let mut split = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
            if record.len() != cols.len() {
                return Err(Error::Data(format!(
                    "row {row}: expected {} fields, found {}",
                    cols.len(),
                    record.len()
                )));
            }
            for (c, cell) in record.iter().enumerate().take(n_grid + 1) {
                let v = cell.parse::<f64>().map_err(|_| {
                    Error::Data(format!("row {row}, column {}: {cell:?} is not a number", c + 1))
                })?;
                if c < n_grid {
                    values.push(v);
                } else {
                    responses.push(v);
                }
            }
            if has_split {
                let s = record[n_grid + 1]
                    .parse::<Split>()
                    .map_err(|e| Error::Data(format!("row {row}, column {}: {e}", n_grid + 2)))?;
                split.push(s);
            }
        }
        let n = responses.len();
        if n == 0 {
            return Err(Error::Data("CSV contains no curves".into()));
        }
        if !has_split {
            split = Self::chronological_split(n);
        }
        let curves = CurveSet::new(grid, DMatrix::from_row_slice(n, n_grid, &values))?;
        Self::new(curves, responses, split)
    }

    /// Writes the CSV; each line of `comment` becomes a `#` line above the header.
    pub fn write_csv<W: Write>(&self, mut out: W, comment: Option<&str>) -> Result<()> {
        let io = |e: std::io::Error| Error::Data(format!("write failed: {e}"));
        let mut buf = String::new();
        if let Some(c) = comment {
            for line in c.lines() {
                let _ = writeln!(buf, "# {line}");
            }
        }
        for t in self.grid().points() {
            let _ = write!(buf, "{t},");
        }
        buf.push_str("response,split\n");
        let values = self.curves.values();
        for i in 0..self.len() {
            for v in values.row(i).iter() {
                let _ = write!(buf, "{v},");
            }
            let _ = writeln!(buf, "{},{}", self.responses[i], self.split[i].as_str());
        }
        out.write_all(buf.as_bytes()).map_err(io)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, comment: Option<&str>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path)
            .map_err(|e| Error::Data(format!("cannot create {}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file), comment)
    }
}
