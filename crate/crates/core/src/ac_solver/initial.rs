//! Built-in initial velocities. In 2-D they come from a stream function
//! sampled at cell corners, which makes them exactly divergence free on the
//! grid; the stream function vanishes on every corner of a solid cell and on
//! the box boundary so all wall faces carry zero flux.

use std::f64::consts::TAU;
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AcnsError, Result};
use crate::fields::{staggered_lp_norm, StaggeredField};
use crate::geometry::DomainGeometry;
use crate::hodge::leray_decompose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    TaylorGreenLike {
        #[serde(default = "one")]
        amplitude: f64,
    },
    RandomSolenoidal {
        #[serde(default = "default_seed")]
        seed: u64,
        /// Root-mean-square speed over the domain.
        #[serde(default = "one")]
        amplitude: f64,
        /// Largest plane-wave index per axis.
        #[serde(default = "default_modes")]
        max_mode: u32,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    42
}

fn default_modes() -> u32 {
    3
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::RandomSolenoidal {
            seed: default_seed(),
            amplitude: 1.0,
            max_mode: default_modes(),
        }
    }
}

/// Width of the layer over which the stream function is ramped to zero near
/// walls.
const TAPER_WIDTH: f64 = 0.5;

fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn taper(geo: &DomainGeometry, x: &[f64], box_walls: bool) -> f64 {
    let mut d = geo.obstacle().distance(x);
    if box_walls && !geo.periodic() {
        for a in 0..geo.dim() {
            d = d.min(x[a]).min(geo.extents()[a] - x[a]);
        }
    }
    smoothstep(d / TAPER_WIDTH)
}

/// Velocity from corner values of ψ in 2-D: u_x = ∂ψ/∂y, u_y = −∂ψ/∂x.
fn from_stream_function(
    geo: &Arc<DomainGeometry>,
    psi: impl Fn(&[f64]) -> f64,
    box_walls: bool,
) -> StaggeredField {
    let n = geo.cells();
    let dx = geo.spacing();
    let periodic = geo.periodic();
    let (nx, ny) = if periodic {
        (n[0], n[1])
    } else {
        (n[0] + 1, n[1] + 1)
    };
    let mut nodes = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let x = [i as f64 * dx[0], j as f64 * dx[1]];
            nodes[i * ny + j] = psi(&x) * taper(geo, &x, box_walls);
        }
    }
    // pin ψ to zero on every corner of a solid cell
    for c in 0..geo.num_cells() {
        if !geo.class_of(c).is_active() {
            let [i, j, _] = geo.unravel(c);
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                nodes[(i + di) * ny + (j + dj)] = 0.0;
            }
        }
    }
    let node = |i: usize, j: usize| nodes[(i % nx) * ny + (j % ny)];
    let mut comps = vec![vec![0.0; geo.num_faces(0)], vec![0.0; geo.num_faces(1)]];
    for (f, v) in comps[0].iter_mut().enumerate() {
        let [i, j, _] = geo.face_unravel(0, f);
        *v = (node(i, j + 1) - node(i, j)) / dx[1];
    }
    for (f, v) in comps[1].iter_mut().enumerate() {
        let [i, j, _] = geo.face_unravel(1, f);
        *v = -(node(i + 1, j) - node(i, j)) / dx[0];
    }
    StaggeredField::from_components(geo, comps).expect("component shapes follow the geometry")
}

struct PlaneWave {
    k: [f64; 3],
    phase: f64,
    amp: [f64; 3],
}

fn random_waves(geo: &DomainGeometry, seed: u64, max_mode: u32) -> Vec<PlaneWave> {
    let dim = geo.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = max_mode as i64;
    let mut waves = Vec::new();
    let range = |a: usize| if a < dim { -m..=m } else { 0..=0 };
    for i in range(0) {
        for j in range(1) {
            for l in range(2) {
                let idx = [i, j, l];
                if idx.iter().all(|v| *v == 0) {
                    continue;
                }
                let mut k = [0.0; 3];
                for a in 0..dim {
                    // half-wavelength steps so walled boxes get their
                    // gravest modes
                    k[a] = 0.5 * TAU * idx[a] as f64 / geo.extents()[a];
                }
                let kn = k.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut amp = [0.0; 3];
                for v in amp.iter_mut().take(dim) {
                    let g: f64 = rng.sample(StandardNormal);
                    *v = g / (kn * kn);
                }
                let phase = rng.random_range(0.0..TAU);
                waves.push(PlaneWave { k, phase, amp });
            }
        }
    }
    waves
}

fn wave_sum(waves: &[PlaneWave], comp: usize, x: &[f64]) -> f64 {
    waves
        .iter()
        .map(|w| {
            let arg: f64 = x.iter().zip(&w.k).map(|(a, b)| a * b).sum::<f64>() + w.phase;
            w.amp[comp] * arg.cos()
        })
        .sum()
}

fn normalize_rms(u: &mut StaggeredField, rms: f64) -> Result<()> {
    let geo = u.geometry().clone();
    let vol = geo.cell_volume() * geo.num_active() as f64;
    let n = staggered_lp_norm(u, 2.0)?;
    if n == 0.0 {
        return Err(AcnsError::BadInitialData("generated field vanishes".into()));
    }
    *u = u.scaled(rms * vol.sqrt() / n);
    Ok(())
}

/// Built-in initial velocity on `geo`. File data is handled by the caller.
pub fn initial_velocity(geo: &Arc<DomainGeometry>, spec: &InitialData) -> Result<StaggeredField> {
    let dim = geo.dim();
    let mut u = match spec {
        InitialData::Zero => return Ok(StaggeredField::zeros(geo)),
        InitialData::File { .. } => {
            return Err(AcnsError::BadInitialData(
                "file initial data must be loaded from a snapshot".into(),
            ))
        }
        InitialData::TaylorGreenLike { amplitude } => {
            let ext = geo.extents().to_vec();
            let k: Vec<f64> = ext.iter().map(|l| TAU / l).collect();
            let u = if dim == 2 {
                from_stream_function(
                    geo,
                    |x| (k[0] * x[0]).sin() * (k[1] * x[1]).sin() / k[0],
                    false,
                )
            } else {
                let raw = StaggeredField::from_fn(geo, |a, x| {
                    let s = |b: usize| (k[b] * x[b]).sin();
                    let c = |b: usize| (k[b] * x[b]).cos();
                    let t = taper(geo, x, false);
                    t * match a {
                        0 => s(0) * c(1) * c(2),
                        1 => -c(0) * s(1) * c(2),
                        _ => 0.0,
                    }
                });
                leray_decompose(&raw)?.solenoidal
            };
            u.scaled(*amplitude)
        }
        InitialData::RandomSolenoidal {
            seed,
            amplitude,
            max_mode,
        } => {
            if *max_mode == 0 {
                return Err(AcnsError::BadInitialData(
                    "max_mode must be positive".into(),
                ));
            }
            let waves = random_waves(geo, *seed, *max_mode);
            let raw = if dim == 2 {
                from_stream_function(geo, |x| wave_sum(&waves, 0, x), true)
            } else {
                StaggeredField::from_fn(geo, |a, x| taper(geo, x, true) * wave_sum(&waves, a, x))
            };
            let mut u = leray_decompose(&raw)?.solenoidal;
            normalize_rms(&mut u, *amplitude)?;
            u
        }
    };
    u.enforce_walls();
    if !u.is_finite() {
        return Err(AcnsError::BadInitialData("non-finite velocity".into()));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{divergence, lp_norm};
    use crate::geometry::{GeometrySpec, Obstacle};

    fn disk() -> Arc<DomainGeometry> {
        Arc::new(
            DomainGeometry::new(GeometrySpec::boxed(
                &[4.0, 4.0],
                &[64, 64],
                Obstacle::Ball {
                    center: vec![1.0, 2.0],
                    radius: 0.3,
                },
            ))
            .unwrap(),
        )
    }

    #[test]
    fn random_data_is_solenoidal_and_deterministic() {
        let geo = disk();
        let spec = InitialData::default();
        let u = initial_velocity(&geo, &spec).unwrap();
        let n = staggered_lp_norm(&u, 2.0).unwrap();
        assert!(lp_norm(&divergence(&u), 2.0).unwrap() <= 1e-7 * n);
        assert_eq!(u.max_wall_value(), 0.0);
        let v = initial_velocity(&geo, &spec).unwrap();
        assert_eq!(u.components(), v.components());
    }

    #[test]
    fn stream_function_data_is_exactly_solenoidal() {
        let geo = disk();
        let u = from_stream_function(&geo, |x| (x[0] * 1.3).sin() * (x[1] * 0.7).cos(), true);
        let d = divergence(&u);
        assert!(d.values().iter().all(|v| v.abs() < 1e-10));
        assert_eq!(u.max_wall_value(), 0.0);
    }

    #[test]
    fn zero_spec_gives_zero_field() {
        let geo = disk();
        let u = initial_velocity(&geo, &InitialData::Zero).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }
}
