use serde::{Deserialize, Serialize};

use super::{normalize_row, DiscreteSpace, ModelParams};
use crate::{Error, Result};

/// Symmetric pseudo-count used for holdout evaluation models.
pub const DEFAULT_SMOOTHING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Record {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

/// Ordered list of complete `(x, y, z)` records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct Dataset {
    pub space: DiscreteSpace,
    pub records: Vec<Record>,
}

#[derive(Deserialize)]
struct RawDataset {
    space: DiscreteSpace,
    records: Vec<Record>,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = Error;

    fn try_from(raw: RawDataset) -> Result<Self> {
        Dataset::new(raw.space, raw.records)
    }
}

impl Dataset {
    pub fn new(space: DiscreteSpace, records: Vec<Record>) -> Result<Self> {
        space.validate()?;
        for r in &records {
            space.check_record(r.x, r.y, r.z)?;
        }
        Ok(Self { space, records })
    }

    pub fn empty(space: DiscreteSpace) -> Self {
        Self { space, records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Position-preserving split: the first `n_train` records train.
    pub fn split(&self, n_train: usize) -> Result<(Dataset, Dataset)> {
        if n_train > self.len() {
            return Err(Error::input(format!(
                "cannot take {n_train} training records from a dataset of {}",
                self.len()
            )));
        }
        let (head, tail) = self.records.split_at(n_train);
        Ok((
            Dataset { space: self.space, records: head.to_vec() },
            Dataset { space: self.space, records: tail.to_vec() },
        ))
    }

    pub fn prefix(&self, n: usize) -> &[Record] {
        &self.records[..n.min(self.len())]
    }
}

/// Per-factor frequencies with `smoothing` pseudo-counts added to every cell.
///
/// When `smoothing` is zero, rows with no data are set uniform (they carry
/// zero joint mass).
pub fn empirical_model(dataset: &Dataset, smoothing: f64) -> Result<ModelParams> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::input("smoothing must be a non-negative pseudo-count"));
    }
    if dataset.is_empty() && smoothing == 0.0 {
        return Err(Error::DegenerateEstimate);
    }
    let s = dataset.space;
    let mut c_z = vec![smoothing; s.n_z];
    let mut c_xz = vec![vec![smoothing; s.n_x]; s.n_z];
    let mut c_yxz = vec![vec![vec![smoothing; s.n_y]; s.n_z]; s.n_x];
    for &Record { x, y, z } in &dataset.records {
        c_z[z] += 1.0;
        c_xz[z][x] += 1.0;
        c_yxz[x][z][y] += 1.0;
    }
    let norm = |row: &Vec<f64>| {
        if row.iter().sum::<f64>() > 0.0 {
            normalize_row(row)
        } else {
            vec![1.0 / row.len() as f64; row.len()]
        }
    };
    Ok(ModelParams {
        space: s,
        p_z: norm(&c_z),
        p_x_given_z: c_xz.iter().map(norm).collect(),
        p_y_given_xz: c_yxz.iter().map(|b| b.iter().map(norm).collect()).collect(),
    })
}
