use serde::{Deserialize, Serialize};

use crate::model::DiscreteSpace;
use crate::{Error, Result};

/// Utility `u(y, a)`, indexed `[y][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityTable {
    pub u: Vec<Vec<f64>>,
}

impl UtilityTable {
    pub fn new(u: Vec<Vec<f64>>) -> Result<Self> {
        if u.is_empty() || u.iter().any(|r| r.len() != u[0].len() || r.is_empty()) {
            return Err(Error::input("utility table must be a non-empty rectangular [y][a] table"));
        }
        if u.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("utility entries must be finite"));
        }
        Ok(Self { u })
    }

    /// `u(y, a) = 1{a = y}`.
    pub fn indicator(space: DiscreteSpace) -> Self {
        let u = (0..space.n_y).map(|y| (0..space.n_a).map(|a| if a == y { 1.0 } else { 0.0 }).collect()).collect();
        Self { u }
    }

    pub fn constant(space: DiscreteSpace, c: f64) -> Self {
        Self { u: vec![vec![c; space.n_a]; space.n_y] }
    }

    #[inline]
    pub fn get(&self, y: usize, a: usize) -> f64 {
        self.u[y][a]
    }

    pub fn check_space(&self, space: DiscreteSpace) -> Result<()> {
        if self.u.len() != space.n_y || self.u[0].len() != space.n_a {
            return Err(Error::input(format!(
                "utility table is {}x{} but the space needs {}x{}",
                self.u.len(),
                self.u[0].len(),
                space.n_y,
                space.n_a
            )));
        }
        Ok(())
    }
}
