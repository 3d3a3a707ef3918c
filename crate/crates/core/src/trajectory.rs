//! Snapshot sequences produced by the solvers and consumed by the
//! diagnostics.

use std::sync::Arc;

use crate::error::{AcnsError, Result};
use crate::fields::{ScalarField, StaggeredField};
use crate::geometry::DomainGeometry;

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub velocity: StaggeredField,
    pub pressure: ScalarField,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `None` for the incompressible reference.
    pub epsilon: Option<f64>,
    pub mu: f64,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn new(epsilon: Option<f64>, mu: f64, dt: f64) -> Self {
        Self {
            epsilon,
            mu,
            dt,
            snapshots: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn geometry(&self) -> Result<&Arc<DomainGeometry>> {
        self.snapshots
            .first()
            .map(|s| s.velocity.geometry())
            .ok_or(AcnsError::EmptySeries)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn horizon(&self) -> f64 {
        match (self.snapshots.first(), self.snapshots.last()) {
            (Some(a), Some(b)) => b.time - a.time,
            _ => 0.0,
        }
    }

    /// Uniform spacing of the snapshot times; 0 for a single snapshot.
    pub fn cadence(&self) -> Result<f64> {
        if self.snapshots.is_empty() {
            return Err(AcnsError::EmptySeries);
        }
        if self.snapshots.len() == 1 {
            return Ok(0.0);
        }
        let t = self.times();
        let h = t[1] - t[0];
        let uniform = t
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
        if !uniform || h <= 0.0 {
            return Err(AcnsError::NonuniformCadence);
        }
        Ok(h)
    }

    /// Snapshot spacing in solver steps.
    pub fn stride(&self) -> Result<usize> {
        self.cadence()?;
        Ok(match self.snapshots.as_slice() {
            [a, b, ..] => b.step - a.step,
            _ => 0,
        })
    }
}
