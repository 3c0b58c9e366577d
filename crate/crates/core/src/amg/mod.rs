//! Algebraic multilevel hierarchies built from the fine-level matrix alone:
//! strength of connection, Ruge-Stüben C/F splitting, interpolation and
//! Galerkin coarse operators.

mod coarsening;
mod hierarchy;
mod interpolation;
mod strength;

pub use coarsening::{second_pass, standard_coarsening, CFSplitting};
pub use hierarchy::{build_hierarchy, compose_prolongation, operator_complexity, Hierarchy};
pub use interpolation::{jacobi_prolongation_smoothing, standard_interpolation, InterpolatorySet};
pub use strength::{strength_sets, StrengthGraph};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseningParams {
    /// Strength threshold, `0 < eps_str < 1`.
    pub eps_str: f64,
    /// Upper bound on the number of levels, fine level included.
    pub max_levels: usize,
    /// Coarsening stops once a level has at most this many variables.
    pub min_coarse_size: usize,
    pub jacobi_passes: usize,
    /// Relative truncation threshold applied after each Jacobi pass.
    pub truncation: f64,
    pub interpolatory_set: InterpolatorySet,
    /// Second Ruge-Stüben pass: a fine pair strongly coupled to each other but
    /// sharing no coarse neighbour promotes one of them to coarse.
    pub second_pass: bool,
}

impl Default for CoarseningParams {
    fn default() -> Self {
        Self {
            eps_str: 0.25,
            max_levels: 25,
            min_coarse_size: 2,
            jacobi_passes: 2,
            truncation: 1e-3,
            interpolatory_set: InterpolatorySet::Union,
            second_pass: true,
        }
    }
}

impl CoarseningParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_str > 0.0 && self.eps_str < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps_str must lie in (0, 1), got {}",
                self.eps_str
            )));
        }
        if self.max_levels == 0 {
            return Err(Error::InvalidParameter("max_levels must be positive".into()));
        }
        if !(self.truncation >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation must be non-negative, got {}",
                self.truncation
            )));
        }
        Ok(())
    }
}
