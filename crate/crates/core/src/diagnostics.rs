//! Energy ledger, a-priori bound table, decay of the gradient part Qu and
//! the time-translation modulus of the solenoidal part.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::Poisson;
use crate::error::{AcnsError, Result};
use crate::fields::{
    advective, dissipation, divergence, divergence_times_velocity, lp_norm, space_time_norm,
    staggered_lp_norm, ScalarField, StaggeredField,
};
use crate::geometry::{CellClass, DomainGeometry};
use crate::hodge::leray_decompose_with;
use crate::trajectory::Trajectory;

/// Radius of the fixed window around the obstacle used for local norms.
pub const LOCAL_WINDOW_RADIUS: f64 = 1.0;

const LERAY_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerSample {
    pub time: f64,
    /// ½‖u‖² + (ε/2)‖p‖²
    pub energy: f64,
    /// μ‖∇u‖²
    pub dissipation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub dissipation_rate: Vec<f64>,
    /// Trapezoid integral of the dissipation rate from 0 to each time.
    pub dissipation: Vec<f64>,
    /// E(t) + ∫₀ᵗ μ‖∇u‖² − E(0)
    pub residual: Vec<f64>,
}

impl EnergyLedger {
    pub fn from_samples(samples: &[LedgerSample]) -> Self {
        let mut ledger = EnergyLedger::default();
        let mut acc = 0.0;
        for (i, s) in samples.iter().enumerate() {
            if i > 0 {
                let prev = &samples[i - 1];
                acc += 0.5 * (s.time - prev.time) * (s.dissipation_rate + prev.dissipation_rate);
            }
            ledger.times.push(s.time);
            ledger.energy.push(s.energy);
            ledger.dissipation_rate.push(s.dissipation_rate);
            ledger.dissipation.push(acc);
        }
        let e0 = ledger.energy.first().copied().unwrap_or(0.0);
        ledger.residual = ledger
            .energy
            .iter()
            .zip(&ledger.dissipation)
            .map(|(e, d)| e + d - e0)
            .collect();
        ledger
    }

    pub fn initial_energy(&self) -> f64 {
        self.energy.first().copied().unwrap_or(0.0)
    }

    pub fn final_residual(&self) -> f64 {
        self.residual.last().copied().unwrap_or(0.0)
    }

    /// |residual(T)| / E(0), 0 when E(0) = 0.
    pub fn relative_final_residual(&self) -> f64 {
        let e0 = self.initial_energy();
        if e0 == 0.0 {
            0.0
        } else {
            self.final_residual().abs() / e0
        }
    }
}

/// Ledger evaluated on the stored snapshots of `traj`.
pub fn energy_ledger(traj: &Trajectory) -> EnergyLedger {
    let eps = traj.epsilon.unwrap_or(0.0);
    let samples: Vec<LedgerSample> = traj
        .snapshots
        .par_iter()
        .map(|s| LedgerSample {
            time: s.time,
            energy: s.velocity.kinetic_energy()
                + 0.5 * eps * s.pressure.dot(&s.pressure).unwrap_or(0.0),
            dissipation_rate: traj.mu * dissipation(&s.velocity),
        })
        .collect();
    EnergyLedger::from_samples(&samples)
}

/// The norms in which the approximate solutions are uniformly bounded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub epsilon: f64,
    pub cells: Vec<usize>,
    pub dt: f64,
    /// √ε‖p‖_{L∞L²}
    pub sqrt_eps_p_linf_l2: f64,
    /// ‖∇u‖_{L²L²}
    pub grad_u_l2_l2: f64,
    /// ‖u‖_{L∞L²}
    pub u_linf_l2: f64,
    /// ‖u‖_{L²L⁶}; reported only, the embedding behind it is 3-D.
    pub u_l2_l6: f64,
    /// ‖(u·∇)u‖_{L²L¹}
    pub advection_l2_l1: f64,
    /// ‖(u·∇)u‖_{L¹L^{3/2}}
    pub advection_l1_l32: f64,
    /// ‖(div u)u‖_{L²L¹}
    pub div_u_u_l2_l1: f64,
    /// ‖(div u)u‖_{L¹L^{3/2}}
    pub div_u_u_l1_l32: f64,
    /// ‖ε∂_t p‖_{L²H⁻¹} = ‖div u‖_{L²H⁻¹}
    pub eps_dt_p_l2_hm1: f64,
}

/// ‖f‖_{H⁻¹} = ⟨(−Δ_D)⁻¹f, f⟩^{1/2} through a Dirichlet solve.
pub fn h_minus1_norm(solver: &Poisson, f: &ScalarField) -> Result<f64> {
    let phi = solver.solve_dirichlet(f)?;
    Ok((-phi.dot(f)?).max(0.0).sqrt())
}

struct SnapshotNorms {
    p_l2: f64,
    grad_u: f64,
    u_l2: f64,
    u_l6: f64,
    adv_l1: f64,
    adv_l32: f64,
    du_l1: f64,
    du_l32: f64,
    div_hm1: f64,
}

pub fn apriori_bounds(traj: &Trajectory) -> Result<BoundsReport> {
    let geo = traj.geometry()?.clone();
    let eps = traj.epsilon.unwrap_or(0.0);
    let solver = Poisson::new(&geo);
    let per: Vec<SnapshotNorms> = traj
        .snapshots
        .par_iter()
        .map(|s| -> Result<SnapshotNorms> {
            let u = &s.velocity;
            let adv = advective(u);
            let du = divergence_times_velocity(u);
            Ok(SnapshotNorms {
                p_l2: lp_norm(&s.pressure, 2.0)?,
                grad_u: dissipation(u).sqrt(),
                u_l2: staggered_lp_norm(u, 2.0)?,
                u_l6: staggered_lp_norm(u, 6.0)?,
                adv_l1: staggered_lp_norm(&adv, 1.0)?,
                adv_l32: staggered_lp_norm(&adv, 1.5)?,
                du_l1: staggered_lp_norm(&du, 1.0)?,
                du_l32: staggered_lp_norm(&du, 1.5)?,
                div_hm1: h_minus1_norm(&solver, &divergence(u))?,
            })
        })
        .collect::<Result<_>>()?;
    let h = traj.cadence()?;
    let col = |f: fn(&SnapshotNorms) -> f64| per.iter().map(f).collect::<Vec<f64>>();
    Ok(BoundsReport {
        epsilon: eps,
        cells: geo.spec().cells.clone(),
        dt: traj.dt,
        sqrt_eps_p_linf_l2: eps.sqrt() * space_time_norm(&col(|n| n.p_l2), h, f64::INFINITY)?,
        grad_u_l2_l2: space_time_norm(&col(|n| n.grad_u), h, 2.0)?,
        u_linf_l2: space_time_norm(&col(|n| n.u_l2), h, f64::INFINITY)?,
        u_l2_l6: space_time_norm(&col(|n| n.u_l6), h, 2.0)?,
        advection_l2_l1: space_time_norm(&col(|n| n.adv_l1), h, 2.0)?,
        advection_l1_l32: space_time_norm(&col(|n| n.adv_l32), h, 1.0)?,
        div_u_u_l2_l1: space_time_norm(&col(|n| n.du_l1), h, 2.0)?,
        div_u_u_l1_l32: space_time_norm(&col(|n| n.du_l32), h, 1.0)?,
        eps_dt_p_l2_hm1: space_time_norm(&col(|n| n.div_hm1), h, 2.0)?,
    })
}

/// Solenoidal parts Pu of every snapshot, warm-starting each potential
/// solve from the previous one.
pub fn solenoidal_parts(traj: &Trajectory) -> Result<Vec<StaggeredField>> {
    Ok(leray_parts(traj)?.into_iter().map(|(p, _)| p).collect())
}

/// (Pu, Qu) for every snapshot.
pub fn leray_parts(traj: &Trajectory) -> Result<Vec<(StaggeredField, StaggeredField)>> {
    let geo = traj.geometry()?.clone();
    let solver = Poisson::new(&geo);
    // fixed-size chunks keep the warm start useful while running in parallel,
    // and keep the result independent of the thread count
    let chunk = LERAY_CHUNK;
    let parts: Vec<Vec<(StaggeredField, StaggeredField)>> = traj
        .snapshots
        .par_chunks(chunk)
        .map(|ch| -> Result<Vec<_>> {
            let mut guess: Option<ScalarField> = None;
            ch.iter()
                .map(|s| {
                    let pair = leray_decompose_with(&solver, &s.velocity, guess.as_ref())?;
                    guess = Some(pair.potential.clone());
                    Ok((pair.solenoidal, pair.gradient_part))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// ‖Qu‖_{L²_t L^p_x}.
pub fn q_decay(traj: &Trajectory, p_exp: f64) -> Result<f64> {
    let parts = leray_parts(traj)?;
    q_decay_from_parts(&parts, traj.cadence()?, p_exp)
}

pub fn q_decay_from_parts(
    parts: &[(StaggeredField, StaggeredField)],
    cadence: f64,
    p_exp: f64,
) -> Result<f64> {
    let norms: Vec<f64> = parts
        .iter()
        .map(|(_, q)| staggered_lp_norm(q, p_exp))
        .collect::<Result<_>>()?;
    space_time_norm(&norms, cadence, 2.0)
}

/// ‖Pu(·+h) − Pu(·)‖_{L²([0,T−h]×Ω)}.
pub fn time_modulus(traj: &Trajectory, h: f64) -> Result<f64> {
    let parts = solenoidal_parts(traj)?;
    time_modulus_of(&parts, traj.cadence()?, h)
}

/// Time modulus over a uniformly spaced sequence of fields.
pub fn time_modulus_of(fields: &[StaggeredField], cadence: f64, h: f64) -> Result<f64> {
    if fields.is_empty() {
        return Err(AcnsError::EmptySeries);
    }
    let horizon = cadence * (fields.len() - 1) as f64;
    if h == 0.0 {
        return Ok(0.0);
    }
    if h >= horizon || h < 0.0 {
        return Err(AcnsError::OffsetTooLarge { h, horizon });
    }
    let shift = (h / cadence).round() as usize;
    if (shift as f64 * cadence - h).abs() > 1e-9 * h {
        return Err(AcnsError::OffsetNotOnGrid(h));
    }
    let norms: Vec<f64> = (0..fields.len() - shift)
        .map(|i| staggered_lp_norm(&fields[i + shift].sub(&fields[i])?, 2.0))
        .collect::<Result<_>>()?;
    space_time_norm(&norms, cadence, 2.0)
}

/// Fluid cells (wall cells excluded) within `LOCAL_WINDOW_RADIUS` of the
/// obstacle surface.
pub fn local_window(geo: &Arc<DomainGeometry>) -> Vec<bool> {
    let mut w = geo.near_obstacle_window(LOCAL_WINDOW_RADIUS);
    for (c, keep) in w.iter_mut().enumerate() {
        *keep &= geo.class_of(c) == CellClass::Fluid;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::gradient;
    use crate::geometry::{GeometrySpec, Obstacle};
    use crate::trajectory::Snapshot;

    fn geo() -> Arc<DomainGeometry> {
        Arc::new(
            DomainGeometry::new(GeometrySpec::boxed(
                &[4.0, 4.0],
                &[32, 32],
                Obstacle::Ball {
                    center: vec![1.0, 2.0],
                    radius: 0.3,
                },
            ))
            .unwrap(),
        )
    }

    fn traj_of(fields: Vec<StaggeredField>, p: ScalarField, eps: f64, h: f64) -> Trajectory {
        let mut t = Trajectory::new(Some(eps), 1.0, h);
        for (i, u) in fields.into_iter().enumerate() {
            t.snapshots.push(Snapshot {
                step: i,
                time: i as f64 * h,
                velocity: u,
                pressure: p.clone(),
            });
        }
        t
    }

    #[test]
    fn zero_trajectory() {
        let g = geo();
        let t = traj_of(
            vec![StaggeredField::zeros(&g); 4],
            ScalarField::zeros(&g),
            0.1,
            0.1,
        );
        let l = energy_ledger(&t);
        assert!(l.energy.iter().all(|e| *e == 0.0));
        assert!(l.residual.iter().all(|e| *e == 0.0));
        let b = apriori_bounds(&t).unwrap();
        assert_eq!(b.grad_u_l2_l2, 0.0);
        assert_eq!(b.advection_l2_l1, 0.0);
        assert_eq!(q_decay(&t, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn pressure_only_energy() {
        let g = geo();
        let p = ScalarField::from_fn(&g, |_| 2.0);
        let t = traj_of(vec![StaggeredField::zeros(&g)], p.clone(), 0.3, 0.1);
        let l = energy_ledger(&t);
        assert_eq!(l.energy[0], 0.5 * 0.3 * p.dot(&p).unwrap());
    }

    #[test]
    fn bounds_scale_with_homogeneity() {
        let g = geo();
        let u = crate::ac_solver::initial_velocity(&g, &Default::default()).unwrap();
        let p = ScalarField::zeros(&g);
        let a = apriori_bounds(&traj_of(vec![u.clone(); 3], p.clone(), 0.1, 0.1)).unwrap();
        let b = apriori_bounds(&traj_of(vec![u.scaled(2.0); 3], p, 0.1, 0.1)).unwrap();
        assert!((b.grad_u_l2_l2 / a.grad_u_l2_l2 - 2.0).abs() < 1e-12);
        assert!((b.advection_l2_l1 / a.advection_l2_l1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn q_decay_on_pure_gradient_and_solenoidal() {
        let g = geo();
        let phi = ScalarField::from_fn(&g, |x| (x[0] * 0.9).sin() * (x[1] * 1.1).cos());
        let grad = gradient(&phi);
        let t = traj_of(vec![grad.clone(); 5], ScalarField::zeros(&g), 0.1, 0.1);
        let q = q_decay(&t, 4.0).unwrap();
        let direct =
            space_time_norm(&[staggered_lp_norm(&grad, 4.0).unwrap(); 5], 0.1, 2.0).unwrap();
        assert!((q - direct).abs() < 1e-6 * direct);
        let u = crate::ac_solver::initial_velocity(&g, &Default::default()).unwrap();
        let t = traj_of(vec![u.clone(); 5], ScalarField::zeros(&g), 0.1, 0.1);
        let n = staggered_lp_norm(&u, 2.0).unwrap();
        assert!(q_decay(&t, 4.0).unwrap() < 1e-6 * n);
    }

    #[test]
    fn modulus_of_linear_ramp() {
        let g = geo();
        let w = crate::ac_solver::initial_velocity(&g, &Default::default()).unwrap();
        let h = 0.05;
        let fields: Vec<_> = (0..21).map(|i| w.scaled(i as f64 * h)).collect();
        let horizon = 1.0;
        for shift in [1usize, 2, 4, 8] {
            let off = shift as f64 * h;
            let got = time_modulus_of(&fields, h, off).unwrap();
            let want = off * staggered_lp_norm(&w, 2.0).unwrap() * (horizon - off).sqrt();
            assert!((got - want).abs() < 1e-10 * want);
        }
        assert_eq!(time_modulus_of(&fields, h, 0.0).unwrap(), 0.0);
        assert!(matches!(
            time_modulus_of(&fields, h, 1.0),
            Err(AcnsError::OffsetTooLarge { .. })
        ));
    }
}
