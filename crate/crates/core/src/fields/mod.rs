//! Cell-centered scalars and face-centered (MAC) vector fields, the discrete
//! operators acting on them, and the norms used by the diagnostics.

mod mollifier;
mod norms;
mod ops;
mod sobolev;

use std::sync::Arc;

use crate::error::{AcnsError, Result};
use crate::geometry::DomainGeometry;

pub use mollifier::{mollify_scalar, mollify_staggered, Mollifier};
pub use norms::{lp_norm, lp_norm_values, space_time_norm, staggered_lp_norm};
pub use ops::{
    advective, advective_into, convective, convective_into, dirichlet_laplacian,
    dirichlet_laplacian_into, dissipation, divergence, divergence_into, divergence_times_velocity,
    gradient, gradient_into, laplacian, laplacian_into, vector_laplacian, vector_laplacian_into,
    wall_trace,
};
pub use sobolev::{negative_sobolev_lp_norm, sobolev_norm, SobolevNorm};

/// Cell-centered field. Values on SOLID cells are kept at zero.
#[derive(Debug, Clone)]
pub struct ScalarField {
    geo: Arc<DomainGeometry>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(geo: &Arc<DomainGeometry>) -> Self {
        Self {
            geo: geo.clone(),
            values: vec![0.0; geo.num_cells()],
        }
    }

    /// Wraps raw values; SOLID entries are forced to zero.
    pub fn from_values(geo: &Arc<DomainGeometry>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != geo.num_cells() {
            return Err(AcnsError::GeometryMismatch);
        }
        for (v, c) in values.iter_mut().zip(geo.cell_class()) {
            if !c.is_active() {
                *v = 0.0;
            }
        }
        Ok(Self {
            geo: geo.clone(),
            values,
        })
    }

    /// Samples `f` at the centers of active cells.
    pub fn from_fn(geo: &Arc<DomainGeometry>, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = geo.dim();
        let values = (0..geo.num_cells())
            .map(|c| {
                if geo.class_of(c).is_active() {
                    f(&geo.cell_center(c)[..dim])
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            geo: geo.clone(),
            values,
        }
    }

    pub fn geometry(&self) -> &Arc<DomainGeometry> {
        &self.geo
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_same(&self, other: &ScalarField) -> Result<()> {
        same_geometry(&self.geo, &other.geo)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            geo: self.geo.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn axpy(&mut self, a: f64, x: &ScalarField) -> Result<()> {
        self.check_same(x)?;
        for (y, x) in self.values.iter_mut().zip(&x.values) {
            *y += a * x;
        }
        Ok(())
    }

    /// Weighted L2 inner product over active cells.
    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.geo.cell_volume())
    }

    /// Integral over the active cells.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.geo.cell_volume()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Face-centered velocity. Component `a` lives on faces normal to axis `a`;
/// closed faces (walls, faces touching SOLID cells) hold zero.
#[derive(Debug, Clone)]
pub struct StaggeredField {
    geo: Arc<DomainGeometry>,
    comps: Vec<Vec<f64>>,
}

impl StaggeredField {
    pub fn zeros(geo: &Arc<DomainGeometry>) -> Self {
        Self {
            geo: geo.clone(),
            comps: (0..geo.dim())
                .map(|a| vec![0.0; geo.num_faces(a)])
                .collect(),
        }
    }

    /// Wraps raw component arrays; closed faces are forced to zero.
    pub fn from_components(geo: &Arc<DomainGeometry>, mut comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != geo.dim() {
            return Err(AcnsError::GeometryMismatch);
        }
        for (a, comp) in comps.iter_mut().enumerate() {
            if comp.len() != geo.num_faces(a) {
                return Err(AcnsError::GeometryMismatch);
            }
            for (v, open) in comp.iter_mut().zip(geo.face_open(a)) {
                if !open {
                    *v = 0.0;
                }
            }
        }
        Ok(Self {
            geo: geo.clone(),
            comps,
        })
    }

    /// Samples component `a` of `f` at the centers of open faces.
    pub fn from_fn(geo: &Arc<DomainGeometry>, f: impl Fn(usize, &[f64]) -> f64) -> Self {
        let dim = geo.dim();
        let comps = (0..dim)
            .map(|a| {
                (0..geo.num_faces(a))
                    .map(|fi| {
                        if geo.is_open(a, fi) {
                            f(a, &geo.face_center(a, fi)[..dim])
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            geo: geo.clone(),
            comps,
        }
    }

    pub fn geometry(&self) -> &Arc<DomainGeometry> {
        &self.geo
    }

    pub fn component(&self, a: usize) -> &[f64] {
        &self.comps[a]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut [f64] {
        &mut self.comps[a]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    pub fn check_same(&self, other: &StaggeredField) -> Result<()> {
        same_geometry(&self.geo, &other.geo)
    }

    pub fn check_same_scalar(&self, other: &ScalarField) -> Result<()> {
        same_geometry(&self.geo, other.geometry())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            geo: self.geo.clone(),
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|v| v * s).collect())
                .collect(),
        }
    }

    pub fn axpy(&mut self, a: f64, x: &StaggeredField) -> Result<()> {
        self.check_same(x)?;
        for (yc, xc) in self.comps.iter_mut().zip(&x.comps) {
            for (y, x) in yc.iter_mut().zip(xc) {
                *y += a * x;
            }
        }
        Ok(())
    }

    pub fn sub(&self, other: &StaggeredField) -> Result<StaggeredField> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Weighted L2 inner product over faces.
    pub fn dot(&self, other: &StaggeredField) -> Result<f64> {
        self.check_same(other)?;
        let s: f64 = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        Ok(s * self.geo.cell_volume())
    }

    /// ½‖u‖²
    pub fn kinetic_energy(&self) -> f64 {
        let s: f64 = self.comps.iter().flatten().map(|v| v * v).sum();
        0.5 * s * self.geo.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    /// Zeroes every closed face.
    pub fn enforce_walls(&mut self) {
        for (a, comp) in self.comps.iter_mut().enumerate() {
            for (v, open) in comp.iter_mut().zip(self.geo.face_open(a)) {
                if !open {
                    *v = 0.0;
                }
            }
        }
    }

    /// Largest |value| on closed faces.
    pub fn max_wall_value(&self) -> f64 {
        let mut m = 0.0f64;
        for (a, comp) in self.comps.iter().enumerate() {
            for (v, open) in comp.iter().zip(self.geo.face_open(a)) {
                if !open {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }

    /// Restricts the field to faces whose both neighbouring cells are in
    /// `window` (a per-cell mask).
    pub fn masked(&self, window: &[bool]) -> StaggeredField {
        let t = self.geo.tables();
        let comps = self
            .comps
            .iter()
            .enumerate()
            .map(|(a, comp)| {
                comp.iter()
                    .zip(&t.face_cells[a])
                    .map(|(v, [lo, hi])| {
                        if *lo != crate::geometry::NONE && window[*lo] && window[*hi] {
                            *v
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        StaggeredField {
            geo: self.geo.clone(),
            comps,
        }
    }
}

pub(crate) fn same_geometry(a: &Arc<DomainGeometry>, b: &Arc<DomainGeometry>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a.same_as(b) {
        Ok(())
    } else {
        Err(AcnsError::GeometryMismatch)
    }
}
