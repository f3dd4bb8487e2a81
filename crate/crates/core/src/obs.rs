use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observations `xi_0, ..., xi_n`, each of dimension `dim`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeq {
    values: Vec<f64>,
    dim: usize,
}

impl ObservationSeq {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidObservations("sequence is empty".into()))?;
        if dim == 0 {
            return Err(Error::InvalidObservations(
                "observation dimension is zero".into(),
            ));
        }
        if let Some(k) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::InvalidObservations(format!(
                "row {k} has dimension {}, expected {dim}",
                rows[k].len()
            )));
        }
        Ok(Self {
            values: rows.iter().flatten().copied().collect(),
            dim,
        })
    }

    pub fn from_flat(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidObservations(format!(
                "{} values cannot form rows of dimension {dim}",
                values.len()
            )));
        }
        Ok(Self { values, dim })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.to_vec(), 1)
    }

    /// Number of time steps `n + 1`.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    /// First coordinate of every row.
    pub fn first_column(&self) -> Vec<f64> {
        self.rows().map(|r| r[0]).collect()
    }

    /// The first `len` time steps.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(Error::InvalidObservations(format!(
                "prefix length {len} out of range 1..={}",
                self.len()
            )));
        }
        Ok(Self {
            values: self.values[..len * self.dim].to_vec(),
            dim: self.dim,
        })
    }

    /// Time steps `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidObservations(format!(
                "slice {start}..{end} out of range"
            )));
        }
        Ok(Self {
            values: self.values[start * self.dim..end * self.dim].to_vec(),
            dim: self.dim,
        })
    }
}
