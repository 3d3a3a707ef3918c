//! Friedrichs mollifier on the grid, renormalized near walls so constants are
//! preserved.

use crate::error::{AcnsError, Result};
use crate::geometry::DomainGeometry;

use super::{ScalarField, StaggeredField};

#[derive(Debug, Clone)]
pub struct Mollifier {
    alpha: f64,
    /// (offset, weight) with Σ weight · ΔV = 1.
    stencil: Vec<([i64; 3], f64)>,
    spacing: [f64; 3],
}

fn bump(r: f64) -> f64 {
    if r < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    pub fn new(alpha: f64, geo: &DomainGeometry) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(AcnsError::AlphaOutOfRange(alpha));
        }
        let dim = geo.dim();
        let dx = geo.spacing();
        let mut reach = [0i64; 3];
        for a in 0..dim {
            reach[a] = (alpha / dx[a]).floor() as i64;
        }
        let mut stencil = Vec::new();
        for i in -reach[0]..=reach[0] {
            for j in -reach[1]..=reach[1] {
                for k in -reach[2]..=reach[2] {
                    let o = [i, j, k];
                    let r2: f64 = (0..dim).map(|a| (o[a] as f64 * dx[a]).powi(2)).sum();
                    let w = bump(r2.sqrt() / alpha);
                    if w > 0.0 {
                        stencil.push((o, w));
                    }
                }
            }
        }
        let vol = geo.cell_volume();
        let total: f64 = stencil.iter().map(|(_, w)| w).sum::<f64>() * vol;
        for (_, w) in stencil.iter_mut() {
            *w /= total;
        }
        Ok(Self {
            alpha,
            stencil,
            spacing: dx,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Discrete kernel weights; Σ weight · ΔV = 1.
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.stencil.iter().map(|(_, w)| *w)
    }

    /// Largest physical distance of a stencil point from the origin.
    pub fn support_radius(&self) -> f64 {
        self.stencil
            .iter()
            .map(|(o, _)| {
                (0..3)
                    .map(|a| (o[a] as f64 * self.spacing[a]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Convolves `values` laid out on an array of `shape` whose entries are
    /// live where `mask` is true; dead entries are excluded and the kernel is
    /// renormalized over the live ones.
    fn convolve(
        &self,
        values: &[f64],
        mask: &[bool],
        shape: [usize; 3],
        periodic: bool,
    ) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        let s = shape.map(|v| v as i64);
        for (idx, o) in out.iter_mut().enumerate() {
            if !mask[idx] {
                continue;
            }
            let i2 = idx as i64 % s[2];
            let r = idx as i64 / s[2];
            let base = [r / s[1], r % s[1], i2];
            let mut acc = 0.0;
            let mut mass = 0.0;
            for (off, w) in &self.stencil {
                let mut j = [0i64; 3];
                let mut inside = true;
                for a in 0..3 {
                    let k = base[a] + off[a];
                    j[a] = if periodic {
                        k.rem_euclid(s[a])
                    } else if k < 0 || k >= s[a] {
                        inside = false;
                        break;
                    } else {
                        k
                    };
                }
                if !inside {
                    continue;
                }
                let jdx = ((j[0] * s[1] + j[1]) * s[2] + j[2]) as usize;
                if mask[jdx] {
                    acc += w * values[jdx];
                    mass += w;
                }
            }
            *o = if mass > 0.0 { acc / mass } else { 0.0 };
        }
        out
    }
}

pub fn mollify_scalar(f: &ScalarField, m: &Mollifier) -> Result<ScalarField> {
    let geo = f.geometry();
    if m.spacing != geo.spacing() {
        return Err(AcnsError::GeometryMismatch);
    }
    let mask: Vec<bool> = geo.cell_class().iter().map(|c| c.is_active()).collect();
    let v = m.convolve(f.values(), &mask, geo.cells(), geo.periodic());
    ScalarField::from_values(geo, v)
}

/// Componentwise mollification over open faces.
pub fn mollify_staggered(u: &StaggeredField, m: &Mollifier) -> Result<StaggeredField> {
    let geo = u.geometry();
    if m.spacing != geo.spacing() {
        return Err(AcnsError::GeometryMismatch);
    }
    let comps = (0..geo.dim())
        .map(|a| {
            m.convolve(
                u.component(a),
                geo.face_open(a),
                geo.face_shape(a),
                geo.periodic(),
            )
        })
        .collect();
    StaggeredField::from_components(geo, comps)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{GeometrySpec, Obstacle};

    #[test]
    fn kernel_has_unit_mass_and_bounded_support() {
        let geo = DomainGeometry::new(GeometrySpec::boxed(&[1.0, 1.0], &[64, 64], Obstacle::None))
            .unwrap();
        let m = Mollifier::new(0.1, &geo).unwrap();
        let mass: f64 = m.weights().sum::<f64>() * geo.cell_volume();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(m.weights().all(|w| w >= 0.0));
        assert!(m.support_radius() <= 0.1);
    }

    #[test]
    fn alpha_range() {
        let geo = DomainGeometry::new(GeometrySpec::boxed(&[1.0, 1.0], &[16, 16], Obstacle::None))
            .unwrap();
        assert!(matches!(
            Mollifier::new(1.0, &geo),
            Err(AcnsError::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            Mollifier::new(0.0, &geo),
            Err(AcnsError::AlphaOutOfRange(_))
        ));
    }

    #[test]
    fn preserves_constants_near_obstacle() {
        let geo = Arc::new(
            DomainGeometry::new(GeometrySpec::boxed(
                &[4.0, 4.0],
                &[64, 64],
                Obstacle::Ball {
                    center: vec![1.0, 2.0],
                    radius: 0.3,
                },
            ))
            .unwrap(),
        );
        let f = ScalarField::from_fn(&geo, |_| 2.5);
        let m = Mollifier::new(0.3, &geo).unwrap();
        let g = mollify_scalar(&f, &m).unwrap();
        for (c, v) in g.values().iter().enumerate() {
            if geo.class_of(c).is_active() {
                assert!((v - 2.5).abs() < 1e-12);
            }
        }
    }
}
