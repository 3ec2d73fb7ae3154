//! Tunable run parameters shared by the library entry points and the CLI.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Knobs for embedding and extraction runs.
///
/// `axis_ratio` and `gap_tol` interact: carrier ellipsoids are built with
/// eigenvalue ratio `axis_ratio^2` between the longest axis and the rest,
/// and extraction accepts an axis as unique when the ratio exceeds
/// `1 + gap_tol`. Validation therefore requires
/// `axis_ratio^2 >= 1 + 2 * gap_tol` so solver noise cannot push a carrier
/// under the acceptance line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Duality-gap target for the enclosing-ellipsoid solver.
    pub eps: f64,
    /// Relative eigenvalue gap required to call a longest axis unique.
    pub gap_tol: f64,
    /// Ratio of the carrier ellipsoid's longest semi-axis to its others.
    pub axis_ratio: f64,
    /// Smallest admissible magnitude for a payload coordinate.
    pub payload_min: f64,
    /// Decoy polytopes added per embedding run.
    pub decoys: usize,
    /// Seed for all randomized choices of a run.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eps: 1e-7,
            gap_tol: 0.1,
            axis_ratio: 2.0,
            payload_min: 1e-6,
            decoys: 8,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if !(self.gap_tol > 0.0 && self.gap_tol.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "gap_tol must be positive and finite, got {}",
                self.gap_tol
            )));
        }
        if !(self.axis_ratio > 1.0 && self.axis_ratio.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "axis_ratio must exceed 1, got {}",
                self.axis_ratio
            )));
        }
        if self.axis_ratio * self.axis_ratio < 1.0 + 2.0 * self.gap_tol {
            return Err(ConfigError::Invalid(format!(
                "axis_ratio^2 = {} leaves no margin over 1 + 2 * gap_tol = {}",
                self.axis_ratio * self.axis_ratio,
                1.0 + 2.0 * self.gap_tol
            )));
        }
        if !(self.payload_min > 0.0 && self.payload_min.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "payload_min must be positive and finite, got {}",
                self.payload_min
            )));
        }
        Ok(())
    }
}
