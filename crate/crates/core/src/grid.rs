//! Discretization of the hidden state space.
//!
//! A [`StateGrid`] stands in for the dominating measure of the hidden chain:
//! finite chains use counting measure over state labels, continuous chains a
//! trapezoid rule on a bounded interval.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default half-width of a continuous grid, in stationary standard deviations.
pub const DEFAULT_SPAN_SDS: f64 = 8.0;
/// Default number of points on a continuous grid.
pub const DEFAULT_GRID_POINTS: usize = 401;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    /// State labels `0..K` with unit weights.
    Finite,
    /// Equally spaced abscissae with trapezoid weights.
    TrapezoidOnInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    kind: GridKind,
}

impl StateGrid {
    /// Counting-measure grid over `k` state labels.
    pub fn finite(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidGrid(
                "finite grid needs at least one state".into(),
            ));
        }
        Ok(Self {
            points: (0..k).map(|i| i as f64).collect(),
            weights: alloc::vec![1.0; k],
            kind: GridKind::Finite,
        })
    }

    /// Trapezoid grid on `[center - span_sds * sd, center + span_sds * sd]`.
    pub fn centered(center: f64, sd: f64, span_sds: f64, points: usize) -> Result<Self> {
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "scale must be positive and finite, got {sd}"
            )));
        }
        make_trapezoid_grid(center - span_sds * sd, center + span_sds * sd, points)
    }

    pub fn from_parts(points: Vec<f64>, weights: Vec<f64>, kind: GridKind) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidGrid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidGrid(format!("weight {i} is not positive")));
        }
        match kind {
            GridKind::Finite => {
                if weights.iter().any(|&w| w != 1.0) {
                    return Err(Error::InvalidGrid("finite grids carry unit weights".into()));
                }
            }
            GridKind::TrapezoidOnInterval => {
                if points.windows(2).any(|p| !(p[1] > p[0])) {
                    return Err(Error::InvalidGrid(
                        "points must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(Self {
            points,
            weights,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn is_finite_state(&self) -> bool {
        self.kind == GridKind::Finite
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Spacing of an equally spaced grid; `None` for finite grids or a single point.
    pub fn spacing(&self) -> Option<f64> {
        match self.kind {
            GridKind::TrapezoidOnInterval if self.len() > 1 => {
                Some((self.hi() - self.lo()) / (self.len() - 1) as f64)
            }
            _ => None,
        }
    }

    /// Quadrature of a function sampled at the grid points.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn same_as(&self, other: &StateGrid) -> bool {
        self.kind == other.kind && self.points == other.points && self.weights == other.weights
    }
}

/// Equally spaced trapezoid grid with `g` points on `[lo, hi]`.
pub fn make_trapezoid_grid(lo: f64, hi: f64, g: usize) -> Result<StateGrid> {
    if g < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 points, got {g}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidGrid(format!(
            "need finite lo < hi, got [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (g - 1) as f64;
    let mut points: Vec<f64> = (0..g).map(|i| lo + step * i as f64).collect();
    points[g - 1] = hi;
    let mut weights = alloc::vec![step; g];
    weights[0] = 0.5 * step;
    weights[g - 1] = 0.5 * step;
    Ok(StateGrid {
        points,
        weights,
        kind: GridKind::TrapezoidOnInterval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_trapezoid() {
        let g = make_trapezoid_grid(0.0, 1.0, 2).unwrap();
        assert_eq!(g.points(), &[0.0, 1.0]);
        assert_eq!(g.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn three_point_trapezoid() {
        let g = make_trapezoid_grid(-1.0, 1.0, 3).unwrap();
        assert_eq!(g.points(), &[-1.0, 0.0, 1.0]);
        assert_eq!(g.weights(), &[0.5, 1.0, 0.5]);
        assert_eq!(g.spacing(), Some(1.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(make_trapezoid_grid(0.0, 1.0, 1).is_err());
        assert!(make_trapezoid_grid(1.0, 1.0, 5).is_err());
        assert!(make_trapezoid_grid(2.0, 1.0, 5).is_err());
        assert!(StateGrid::finite(0).is_err());
        assert!(StateGrid::from_parts(
            alloc::vec![0.0, 1.0],
            alloc::vec![1.0, 0.0],
            GridKind::Finite
        )
        .is_err());
        assert!(StateGrid::from_parts(
            alloc::vec![1.0, 0.0],
            alloc::vec![1.0, 1.0],
            GridKind::TrapezoidOnInterval
        )
        .is_err());
    }

    #[test]
    fn finite_grid_has_unit_weights() {
        let g = StateGrid::finite(3).unwrap();
        assert_eq!(g.points(), &[0.0, 1.0, 2.0]);
        assert!(g.weights().iter().all(|&w| w == 1.0));
        assert!(g.spacing().is_none());
    }
}
