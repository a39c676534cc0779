//! Labelled point sets and their on-disk form (CSV + JSON sidecar).

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the labels of a dataset were produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelKind {
    /// One simulated payoff per input.
    SingleDraw,
    /// Monte Carlo price averaged over `paths` simulations per input.
    McPrice { paths: usize },
    /// Monte Carlo price plus centered Gaussian noise.
    NoisyObservation { noise_std: f64, paths: usize },
}

impl LabelKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LabelKind::SingleDraw => Ok(()),
            LabelKind::McPrice { paths } if paths >= 1 => Ok(()),
            LabelKind::NoisyObservation { noise_std, paths }
                if paths >= 1 && noise_std.is_finite() && noise_std >= 0.0 =>
            {
                Ok(())
            }
            _ => Err(Error::invalid("label kind", format!("{self:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Vec<f64>,
    label_kind: LabelKind,
    seed: u64,
    box_radius: Option<f64>,
    horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub label_kind: LabelKind,
    pub seed: u64,
    #[serde(rename = "M")]
    pub box_radius: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub n: usize,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: Vec<f64>, label_kind: LabelKind, seed: u64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::dim("dataset labels", x.nrows(), y.len()));
        }
        Ok(Dataset {
            x,
            y,
            label_kind,
            seed,
            box_radius: None,
            horizon: None,
        })
    }

    pub fn with_box(mut self, radius: f64) -> Result<Self> {
        if self.x.iter().any(|v| v.abs() > radius) {
            return Err(Error::invalid(
                "dataset",
                format!("inputs exceed the box radius {radius}"),
            ));
        }
        self.box_radius = Some(radius);
        Ok(self)
    }

    pub fn with_horizon(mut self, t: f64) -> Self {
        self.horizon = Some(t);
        self
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn label_kind(&self) -> LabelKind {
        self.label_kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn box_radius(&self) -> Option<f64> {
        self.box_radius
    }

    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn sidecar(&self) -> DatasetSidecar {
        DatasetSidecar {
            label_kind: self.label_kind,
            seed: self.seed,
            box_radius: self.box_radius,
            horizon: self.horizon,
            n: self.len(),
        }
    }

    /// Path of the JSON sidecar that accompanies `csv_path`.
    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        let mut p = csv_path.as_os_str().to_owned();
        p.push(".json");
        PathBuf::from(p)
    }

    /// Write `x_1,...,x_d,y` rows to `path` and the sidecar next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        let csv_err = |e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        w.write_record(&header).map_err(csv_err)?;
        let mut rec: Vec<String> = Vec::with_capacity(self.dim() + 1);
        for i in 0..self.len() {
            rec.clear();
            rec.extend(self.x.row(i).iter().map(|v| format!("{v:?}")));
            rec.push(format!("{:?}", self.y[i]));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;

        let side = Self::sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.sidecar()).expect("sidecar serializes");
        fs::write(&side, json).map_err(|e| Error::io(&side, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let side_path = Self::sidecar_path(path);
        let side_text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
        let side: DatasetSidecar = serde_json::from_str(&side_text).map_err(|e| Error::Json {
            path: side_path.clone(),
            source: e,
        })?;
        let csv_err = |e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let width = r.headers().map_err(csv_err)?.len();
        if width < 2 {
            return Err(Error::invalid("dataset csv", "need at least one input column and y"));
        }
        let d = width - 1;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::invalid("dataset csv", format!("{}: bad number {field:?}", path.display()))
                })?;
                if j < d {
                    xs.push(v);
                } else {
                    ys.push(v);
                }
            }
        }
        let n = ys.len();
        let mut ds = Dataset::new(DMatrix::from_row_slice(n, d, &xs), ys, side.label_kind, side.seed)?;
        ds.box_radius = side.box_radius;
        ds.horizon = side.horizon;
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = Dataset::new(
            DMatrix::from_row_slice(3, 2, &[0.1, -0.2, 1.0 / 3.0, 0.5, -1.0, 1e-17]),
            vec![0.25, std::f64::consts::PI, 0.0],
            LabelKind::McPrice { paths: 10 },
            42,
        )
        .unwrap()
        .with_box(1.0)
        .unwrap()
        .with_horizon(1.0);
        ds.write(&path).unwrap();
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(header.starts_with("x_1,x_2,y\n"));
        assert_eq!(Dataset::read(&path).unwrap(), ds);
        assert_eq!(ds.sidecar().n, 3);
    }

    #[test]
    fn rejects_out_of_box_and_mismatch() {
        assert!(Dataset::new(DMatrix::zeros(2, 1), vec![1.0], LabelKind::SingleDraw, 0).is_err());
        let ds = Dataset::new(DMatrix::from_element(1, 1, 2.0), vec![1.0], LabelKind::SingleDraw, 0).unwrap();
        assert!(ds.with_box(1.0).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = Dataset::read(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert!(err.is_io());
    }
}
