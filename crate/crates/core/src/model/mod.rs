//! Discrete world models `P(x, y, z) = P(y | x, z) P(x | z) P(z)`, beliefs
//! over them, and empirical estimation.

mod belief;
mod conditionals;
mod dataset;
mod params;
mod space;

pub use belief::{Belief, DirichletBelief, FiniteSupportBelief};
pub use conditionals::ConditionalSet;
pub use dataset::{empirical_model, Dataset, Record, DEFAULT_SMOOTHING};
pub(crate) use params::sample_index;
pub use params::{Joint, ModelParams};
pub use space::DiscreteSpace;

/// Tolerance used when validating probability rows.
pub const ROW_TOLERANCE: f64 = 1e-12;

pub(crate) fn normalize_row(row: &[f64]) -> Vec<f64> {
    let total: f64 = row.iter().sum();
    row.iter().map(|v| v / total).collect()
}

pub(crate) fn check_row(row: &[f64], len: usize, what: &str) -> crate::Result<()> {
    if row.len() != len {
        return Err(crate::Error::input(format!("{what}: expected {len} entries, found {}", row.len())));
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
        return Err(crate::Error::input(format!("{what}: entries must lie in [0, 1]")));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(crate::Error::input(format!("{what}: row sums to {total}, not 1")));
    }
    Ok(())
}
