//! Truncated exterior domain: a rectangular box with an embedded convex
//! obstacle, discretized on a uniform cell-centered grid.
//!
//! Cells whose centers fall inside the obstacle are SOLID (staircase
//! masking). Velocity lives on cell faces; a face is *open* when both of its
//! neighbouring cells are non-solid and it is not on a box wall. Closed faces
//! carry the homogeneous Dirichlet velocity condition.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AcnsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Fluid,
    Solid,
    ObstacleBoundary,
    FarfieldBoundary,
}

impl CellClass {
    pub fn is_active(self) -> bool {
        self != CellClass::Solid
    }

    /// Non-solid cell with at least one wall face.
    pub fn is_boundary(self) -> bool {
        matches!(
            self,
            CellClass::ObstacleBoundary | CellClass::FarfieldBoundary
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    #[default]
    None,
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Rect {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl Obstacle {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Obstacle::None => false,
            Obstacle::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                r2 < radius * radius
            }
            Obstacle::Rect { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(a, (l, h))| *a > *l && *a < *h),
        }
    }

    /// Unsigned distance from `x` to the obstacle surface (0 inside).
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Obstacle::None => f64::INFINITY,
            Obstacle::Ball { center, radius } => {
                let r: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                (r - radius).max(0.0)
            }
            Obstacle::Rect { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(a, (l, h))| (l - a).max(a - h).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    fn bounds(&self, dim: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Obstacle::None => None,
            Obstacle::Ball { center, radius } => Some((
                center[..dim].iter().map(|c| c - radius).collect(),
                center[..dim].iter().map(|c| c + radius).collect(),
            )),
            Obstacle::Rect { lo, hi } => Some((lo[..dim].to_vec(), hi[..dim].to_vec())),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let ok = match self {
            Obstacle::None => true,
            Obstacle::Ball { center, radius } => center.len() == dim && *radius > 0.0,
            Obstacle::Rect { lo, hi } => {
                lo.len() == dim && hi.len() == dim && lo.iter().zip(hi).all(|(l, h)| l < h)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(AcnsError::InvalidGeometry(format!(
                "obstacle {self:?} does not match dimension {dim}"
            )))
        }
    }
}

/// Geometry section of the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub extents: Vec<f64>,
    pub cells: Vec<usize>,
    #[serde(default)]
    pub obstacle: Obstacle,
    #[serde(default)]
    pub periodic: bool,
}

impl GeometrySpec {
    pub fn boxed(extents: &[f64], cells: &[usize], obstacle: Obstacle) -> Self {
        Self {
            extents: extents.to_vec(),
            cells: cells.to_vec(),
            obstacle,
            periodic: false,
        }
    }

    pub fn periodic(extents: &[f64], cells: &[usize]) -> Self {
        Self {
            extents: extents.to_vec(),
            cells: cells.to_vec(),
            obstacle: Obstacle::None,
            periodic: true,
        }
    }
}

/// An obstacle wall face with the outward unit normal of the fluid domain
/// (pointing from the fluid cell into the obstacle).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub axis: usize,
    pub face: usize,
    pub normal_sign: i8,
}

#[derive(Debug, Clone)]
pub struct DomainGeometry {
    spec: GeometrySpec,
    dim: usize,
    n: [usize; 3],
    dx: [f64; 3],
    class: Vec<CellClass>,
    open: [Vec<bool>; 3],
    boundary_normals: Vec<BoundaryFace>,
    fingerprint: u64,
    tables: Tables,
}

/// Sentinel for "no neighbour" in the flat lookup tables.
pub const NONE: usize = usize::MAX;

/// Flat index tables so stencil loops avoid multi-index arithmetic.
/// Slot `2 * axis` is the low side, `2 * axis + 1` the high side.
#[derive(Debug, Clone, Default)]
pub struct Tables {
    pub cell_nbrs: Vec<[usize; 6]>,
    pub cell_faces: Vec<[usize; 6]>,
    pub face_nbrs: [Vec<[usize; 6]>; 3],
    pub face_cells: [Vec<[usize; 2]>; 3],
}

pub const MIN_CELLS_PER_AXIS: usize = 16;

pub fn build_domain(spec: &GeometrySpec) -> Result<DomainGeometry> {
    DomainGeometry::new(spec.clone())
}

impl DomainGeometry {
    pub fn new(spec: GeometrySpec) -> Result<Self> {
        let dim = spec.extents.len();
        if !(2..=3).contains(&dim) || spec.cells.len() != dim {
            return Err(AcnsError::InvalidGeometry(format!(
                "need 2 or 3 axes with matching cell counts, got extents {:?} cells {:?}",
                spec.extents, spec.cells
            )));
        }
        if spec.cells.iter().any(|&c| c < MIN_CELLS_PER_AXIS) {
            return Err(AcnsError::InvalidGeometry(format!(
                "need at least {MIN_CELLS_PER_AXIS} cells per axis, got {:?}",
                spec.cells
            )));
        }
        if spec.extents.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(AcnsError::InvalidGeometry(
                "extents must be positive".into(),
            ));
        }
        if spec.periodic && spec.obstacle != Obstacle::None {
            return Err(AcnsError::Unsupported(
                "obstacles inside a periodic box".into(),
            ));
        }
        spec.obstacle.validate(dim)?;

        let mut n = [1usize; 3];
        let mut dx = [1.0f64; 3];
        for a in 0..dim {
            n[a] = spec.cells[a];
            dx[a] = spec.extents[a] / spec.cells[a] as f64;
        }
        let max_dx = dx[..dim].iter().cloned().fold(0.0, f64::max);

        if let Some((lo, hi)) = spec.obstacle.bounds(dim) {
            let margin = (0..dim)
                .map(|a| lo[a].min(spec.extents[a] - hi[a]))
                .fold(f64::INFINITY, f64::min);
            let required = 4.0 * max_dx;
            if margin < required {
                return Err(AcnsError::ObstacleTouchesBox { margin, required });
            }
        }

        let mut geo = Self {
            spec,
            dim,
            n,
            dx,
            class: Vec::new(),
            open: [Vec::new(), Vec::new(), Vec::new()],
            boundary_normals: Vec::new(),
            fingerprint: 0,
            tables: Tables::default(),
        };
        geo.build_tables();
        geo.classify()?;
        geo.fingerprint = geo.compute_fingerprint();
        Ok(geo)
    }

    fn classify(&mut self) -> Result<()> {
        let ncell = self.num_cells();
        let mut solid = vec![false; ncell];
        for (c, s) in solid.iter_mut().enumerate() {
            let x = self.cell_center(c);
            *s = self.spec.obstacle.contains(&x[..self.dim]);
        }
        let mut class = vec![CellClass::Fluid; ncell];
        for c in 0..ncell {
            if solid[c] {
                class[c] = CellClass::Solid;
                continue;
            }
            let idx = self.unravel(c);
            let mut touches_solid = false;
            let mut on_ring = false;
            for a in 0..self.dim {
                for dir in [-1i64, 1] {
                    match self.neighbor(idx, a, dir) {
                        Some(nb) => touches_solid |= solid[nb],
                        None => on_ring = true,
                    }
                }
            }
            class[c] = if touches_solid {
                CellClass::ObstacleBoundary
            } else if on_ring {
                CellClass::FarfieldBoundary
            } else {
                CellClass::Fluid
            };
        }
        if !class.contains(&CellClass::Fluid) {
            return Err(AcnsError::EmptyFluidRegion);
        }
        self.class = class;

        for a in 0..self.dim {
            let shape = self.face_shape(a);
            let nf: usize = shape.iter().product();
            let mut open = vec![false; nf];
            for (f, o) in open.iter_mut().enumerate() {
                if let Some((lo, hi)) = self.face_cells(a, f) {
                    *o = self.class[lo].is_active() && self.class[hi].is_active();
                }
            }
            self.open[a] = open;
        }

        let mut normals = Vec::new();
        for a in 0..self.dim {
            for f in 0..self.open[a].len() {
                if let Some((lo, hi)) = self.face_cells(a, f) {
                    let (sl, sh) = (solid[lo], solid[hi]);
                    if sl != sh {
                        normals.push(BoundaryFace {
                            axis: a,
                            face: f,
                            normal_sign: if sh { 1 } else { -1 },
                        });
                    }
                }
            }
        }
        self.boundary_normals = normals;

        if !self.spec.periodic {
            let mut seen = vec![false; ncell];
            let mut queue: VecDeque<usize> = (0..ncell)
                .filter(|&c| self.class[c] == CellClass::FarfieldBoundary)
                .collect();
            for &c in &queue {
                seen[c] = true;
            }
            while let Some(c) = queue.pop_front() {
                let idx = self.unravel(c);
                for a in 0..self.dim {
                    for dir in [-1i64, 1] {
                        if let Some(nb) = self.neighbor(idx, a, dir) {
                            if !seen[nb] && self.class[nb].is_active() {
                                seen[nb] = true;
                                queue.push_back(nb);
                            }
                        }
                    }
                }
            }
            let unreachable = (0..ncell)
                .filter(|&c| self.class[c].is_active() && !seen[c])
                .count();
            if unreachable > 0 {
                return Err(AcnsError::DisconnectedFluid { unreachable });
            }
        }
        Ok(())
    }

    fn build_tables(&mut self) {
        let ncell = self.num_cells();
        let mut cell_nbrs = vec![[NONE; 6]; ncell];
        let mut cell_faces = vec![[NONE; 6]; ncell];
        for c in 0..ncell {
            let i = self.unravel(c);
            for a in 0..self.dim {
                cell_nbrs[c][2 * a] = self.neighbor(i, a, -1).unwrap_or(NONE);
                cell_nbrs[c][2 * a + 1] = self.neighbor(i, a, 1).unwrap_or(NONE);
                cell_faces[c][2 * a] = self.low_face(a, i);
                cell_faces[c][2 * a + 1] = self.high_face(a, i);
            }
        }
        let mut face_nbrs: [Vec<[usize; 6]>; 3] = Default::default();
        let mut face_cells: [Vec<[usize; 2]>; 3] = Default::default();
        for comp in 0..self.dim {
            let nf = self.num_faces(comp);
            let mut nbrs = vec![[NONE; 6]; nf];
            let mut cells = vec![[NONE; 2]; nf];
            for f in 0..nf {
                for a in 0..self.dim {
                    nbrs[f][2 * a] = self.face_neighbor(comp, f, a, -1).unwrap_or(NONE);
                    nbrs[f][2 * a + 1] = self.face_neighbor(comp, f, a, 1).unwrap_or(NONE);
                }
                if let Some((lo, hi)) = self.face_cells(comp, f) {
                    cells[f] = [lo, hi];
                }
            }
            face_nbrs[comp] = nbrs;
            face_cells[comp] = cells;
        }
        self.tables = Tables {
            cell_nbrs,
            cell_faces,
            face_nbrs,
            face_cells,
        };
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    fn compute_fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"acns-geometry-v1");
        h.update((self.dim as u64).to_le_bytes());
        for a in 0..self.dim {
            h.update((self.n[a] as u64).to_le_bytes());
            h.update(self.spec.extents[a].to_le_bytes());
        }
        h.update([self.spec.periodic as u8]);
        match &self.spec.obstacle {
            Obstacle::None => h.update([0u8]),
            Obstacle::Ball { center, radius } => {
                h.update([1u8]);
                for c in center {
                    h.update(c.to_le_bytes());
                }
                h.update(radius.to_le_bytes());
            }
            Obstacle::Rect { lo, hi } => {
                h.update([2u8]);
                for v in lo.iter().chain(hi) {
                    h.update(v.to_le_bytes());
                }
            }
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
    }

    pub fn spec(&self) -> &GeometrySpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cell counts per axis; unused axes report 1.
    pub fn cells(&self) -> [usize; 3] {
        self.n
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.dx
    }

    pub fn max_spacing(&self) -> f64 {
        self.dx[..self.dim].iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.dx[..self.dim]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn periodic(&self) -> bool {
        self.spec.periodic
    }

    pub fn obstacle(&self) -> &Obstacle {
        &self.spec.obstacle
    }

    pub fn extents(&self) -> &[f64] {
        &self.spec.extents
    }

    /// Volume of one cell (also of one face control volume).
    pub fn cell_volume(&self) -> f64 {
        self.dx[..self.dim].iter().product()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn same_as(&self, other: &DomainGeometry) -> bool {
        self.fingerprint == other.fingerprint
    }

    pub fn num_cells(&self) -> usize {
        self.n.iter().product()
    }

    pub fn cell_class(&self) -> &[CellClass] {
        &self.class
    }

    pub fn class_of(&self, c: usize) -> CellClass {
        self.class[c]
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.class.iter().filter(|c| **c == class).count()
    }

    pub fn num_active(&self) -> usize {
        self.class.iter().filter(|c| c.is_active()).count()
    }

    pub fn boundary_normals(&self) -> &[BoundaryFace] {
        &self.boundary_normals
    }

    pub fn unravel(&self, c: usize) -> [usize; 3] {
        let i2 = c % self.n[2];
        let r = c / self.n[2];
        [r / self.n[1], r % self.n[1], i2]
    }

    pub fn ravel(&self, i: [usize; 3]) -> usize {
        (i[0] * self.n[1] + i[1]) * self.n[2] + i[2]
    }

    pub fn cell_center(&self, c: usize) -> [f64; 3] {
        let i = self.unravel(c);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = (i[a] as f64 + 0.5) * self.dx[a];
        }
        x
    }

    /// Neighbouring cell along `axis` in direction `dir` (±1); `None` past a
    /// box wall. Periodic boxes wrap.
    pub fn neighbor(&self, i: [usize; 3], axis: usize, dir: i64) -> Option<usize> {
        let n = self.n[axis] as i64;
        let mut j = i;
        let k = i[axis] as i64 + dir;
        if k < 0 || k >= n {
            if !self.spec.periodic {
                return None;
            }
            j[axis] = k.rem_euclid(n) as usize;
        } else {
            j[axis] = k as usize;
        }
        Some(self.ravel(j))
    }

    /// Shape of the face array normal to `axis`.
    pub fn face_shape(&self, axis: usize) -> [usize; 3] {
        let mut s = self.n;
        if !self.spec.periodic {
            s[axis] += 1;
        }
        s
    }

    pub fn num_faces(&self, axis: usize) -> usize {
        self.face_shape(axis).iter().product()
    }

    pub fn face_ravel(&self, axis: usize, i: [usize; 3]) -> usize {
        let s = self.face_shape(axis);
        (i[0] * s[1] + i[1]) * s[2] + i[2]
    }

    pub fn face_unravel(&self, axis: usize, f: usize) -> [usize; 3] {
        let s = self.face_shape(axis);
        let i2 = f % s[2];
        let r = f / s[2];
        [r / s[1], r % s[1], i2]
    }

    /// Face on the low side of cell `i` along `axis`.
    pub fn low_face(&self, axis: usize, i: [usize; 3]) -> usize {
        self.face_ravel(axis, i)
    }

    /// Face on the high side of cell `i` along `axis`.
    pub fn high_face(&self, axis: usize, i: [usize; 3]) -> usize {
        let mut j = i;
        j[axis] += 1;
        if self.spec.periodic && j[axis] == self.n[axis] {
            j[axis] = 0;
        }
        self.face_ravel(axis, j)
    }

    /// Cells on either side of a face, low then high; `None` on a box wall.
    pub fn face_cells(&self, axis: usize, f: usize) -> Option<(usize, usize)> {
        let i = self.face_unravel(axis, f);
        let hi = if i[axis] < self.n[axis] {
            Some(self.ravel(i))
        } else {
            None
        };
        let lo = self.neighbor(i, axis, -1);
        if i[axis] == self.n[axis] {
            return None;
        }
        match (lo, hi) {
            (Some(l), Some(h)) => Some((l, h)),
            _ => None,
        }
    }

    pub fn face_open(&self, axis: usize) -> &[bool] {
        &self.open[axis]
    }

    pub fn is_open(&self, axis: usize, f: usize) -> bool {
        self.open[axis][f]
    }

    /// Physical position of a face center.
    pub fn face_center(&self, axis: usize, f: usize) -> [f64; 3] {
        let i = self.face_unravel(axis, f);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = if a == axis {
                i[a] as f64 * self.dx[a]
            } else {
                (i[a] as f64 + 0.5) * self.dx[a]
            };
        }
        x
    }

    /// Face neighbouring `f` (same orientation `comp`) one cell over along
    /// `axis`. Returns `None` when the shifted face lies outside the box.
    pub fn face_neighbor(&self, comp: usize, f: usize, axis: usize, dir: i64) -> Option<usize> {
        let s = self.face_shape(comp);
        let mut i = self.face_unravel(comp, f);
        let k = i[axis] as i64 + dir;
        if k < 0 || k >= s[axis] as i64 {
            if !self.spec.periodic {
                return None;
            }
            i[axis] = k.rem_euclid(s[axis] as i64) as usize;
        } else {
            i[axis] = k as usize;
        }
        Some(self.face_ravel(comp, i))
    }

    /// FLUID cells within `radius` of the obstacle surface; all active cells
    /// when there is no obstacle.
    pub fn near_obstacle_window(&self, radius: f64) -> Vec<bool> {
        (0..self.num_cells())
            .map(|c| {
                if !self.class[c].is_active() {
                    return false;
                }
                match self.spec.obstacle {
                    Obstacle::None => true,
                    _ => {
                        let x = self.cell_center(c);
                        self.spec.obstacle.distance(&x[..self.dim]) <= radius
                    }
                }
            })
            .collect()
    }

    /// Distance from `x` to the nearest wall (box face or obstacle surface).
    pub fn wall_distance(&self, x: &[f64]) -> f64 {
        let mut d = if self.spec.periodic {
            f64::INFINITY
        } else {
            (0..self.dim)
                .map(|a| x[a].min(self.spec.extents[a] - x[a]))
                .fold(f64::INFINITY, f64::min)
        };
        d = d.min(self.spec.obstacle.distance(&x[..self.dim]));
        d
    }
}
