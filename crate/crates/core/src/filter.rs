use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StateGrid;

/// Normalized filter density on a grid together with the accumulated log of
/// every normalizing constant removed so far.
///
/// `log_norm` after step `n` is the log joint density of `xi_0..xi_n`; the
/// values themselves are the conditional density of the current hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub values: Vec<f64>,
    pub log_norm: f64,
    pub step: usize,
    /// Log of the mass removed by the most recent normalization.
    pub log_increment: f64,
}

impl FilterState {
    /// Normalizes `raw` (scaled by `exp(log_scale)`) against the grid weights.
    pub(crate) fn normalize(
        mut raw: Vec<f64>,
        log_scale: f64,
        weights: &[f64],
        prev_log_norm: f64,
        step: usize,
    ) -> Result<Self> {
        let mass: f64 = raw.iter().zip(weights).map(|(v, w)| v * w).sum();
        if !(mass > 0.0) || !mass.is_finite() || !log_scale.is_finite() {
            return Err(Error::FilterCollapse { step });
        }
        let inv = 1.0 / mass;
        for v in raw.iter_mut() {
            *v *= inv;
        }
        let log_increment = mass.ln() + log_scale;
        Ok(Self {
            values: raw,
            log_norm: prev_log_norm + log_increment,
            step,
            log_increment,
        })
    }

    /// A normalized filter from arbitrary nonnegative values; `log_norm` starts at zero.
    pub fn from_density(values: Vec<f64>, grid: &StateGrid) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: values.len(),
                right: grid.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::NonFiniteDensity {
                step: 0,
                index: i,
                x: grid.points()[i],
            });
        }
        let mut state = Self::normalize(values, 0.0, grid.weights(), 0.0, 0)?;
        state.log_norm = 0.0;
        state.log_increment = 0.0;
        Ok(state)
    }

    pub fn uniform(grid: &StateGrid) -> Result<Self> {
        Self::from_density(alloc::vec![1.0; grid.len()], grid)
    }

    pub fn mass(&self, grid: &StateGrid) -> f64 {
        grid.integrate_values(&self.values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sup-norm distance `max_i |h1_i - h2_i|` between two filters on the same grid.
pub fn variation_distance(h1: &FilterState, h2: &FilterState) -> Result<f64> {
    sup_distance(&h1.values, &h2.values)
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn state(values: Vec<f64>) -> FilterState {
        FilterState {
            values,
            log_norm: 0.0,
            step: 0,
            log_increment: 0.0,
        }
    }

    #[test]
    fn distance_to_self_is_zero() {
        let h = state(vec![0.2, 0.3, 0.5]);
        assert_eq!(variation_distance(&h, &h).unwrap(), 0.0);
    }

    #[test]
    fn uniform_vs_point_mass() {
        let h1 = state(vec![0.5, 0.5]);
        let h2 = state(vec![1.0, 0.0]);
        assert_eq!(variation_distance(&h1, &h2).unwrap(), 0.5);
    }

    #[test]
    fn mismatched_grids_error() {
        let err = variation_distance(&state(vec![1.0]), &state(vec![0.5, 0.5])).unwrap_err();
        assert_eq!(err, Error::GridMismatch { left: 1, right: 2 });
    }

    #[test]
    fn normalization_and_collapse() {
        let grid = crate::grid::make_trapezoid_grid(0.0, 2.0, 3).unwrap();
        let h = FilterState::from_density(vec![1.0, 2.0, 3.0], &grid).unwrap();
        assert!((h.mass(&grid) - 1.0).abs() < 1e-15);
        assert!(matches!(
            FilterState::from_density(vec![0.0; 3], &grid),
            Err(Error::FilterCollapse { step: 0 })
        ));
        assert!(FilterState::from_density(vec![1.0, f64::NAN, 0.0], &grid).is_err());
    }
}
