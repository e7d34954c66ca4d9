use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Cardinalities of the observation, outcome, sensitive and action sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteSpace {
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub n_a: usize,
}

impl DiscreteSpace {
    pub fn new(n_x: usize, n_y: usize, n_z: usize, n_a: usize) -> Result<Self> {
        let space = Self { n_x, n_y, n_z, n_a };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x == 0 || self.n_y == 0 || self.n_z == 0 || self.n_a == 0 {
            return Err(Error::input(format!("all cardinalities must be >= 1, got {self:?}")));
        }
        Ok(())
    }

    /// Balance and calibration are only non-trivial with at least two
    /// actions, outcomes and sensitive values.
    pub fn supports_fairness(&self) -> bool {
        self.n_a >= 2 && self.n_y >= 2 && self.n_z >= 2
    }

    /// Flat index into an `[x][y][z]` table.
    #[inline]
    pub fn xyz(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.n_y + y) * self.n_z + z
    }

    /// Flat index into an `[a][y][z]` table.
    #[inline]
    pub fn ayz(&self, a: usize, y: usize, z: usize) -> usize {
        (a * self.n_y + y) * self.n_z + z
    }

    /// Flat index into an `[x][a]` table.
    #[inline]
    pub fn xa(&self, x: usize, a: usize) -> usize {
        x * self.n_a + a
    }

    pub fn joint_len(&self) -> usize {
        self.n_x * self.n_y * self.n_z
    }

    pub fn check_record(&self, x: usize, y: usize, z: usize) -> Result<()> {
        if x >= self.n_x || y >= self.n_y || z >= self.n_z {
            return Err(Error::input(format!(
                "record (x={x}, y={y}, z={z}) out of bounds for space {}x{}x{}",
                self.n_x, self.n_y, self.n_z
            )));
        }
        Ok(())
    }

    pub fn same_model_space(&self, other: &DiscreteSpace) -> bool {
        self.n_x == other.n_x && self.n_y == other.n_y && self.n_z == other.n_z
    }
}
