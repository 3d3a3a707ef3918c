//! Incompressible reference solver: explicit advection-diffusion predictor
//! followed by a Leray projection, on the same operators as the
//! artificial-compressibility stepper.

use std::sync::Arc;

use crate::ac_solver::{initialize_on, RunOutput, SimConfig, SimState, BLOWUP_FACTOR, CFL_SAFETY};
use crate::diagnostics::{EnergyLedger, LedgerSample};
use crate::elliptic::Poisson;
use crate::error::{AcnsError, Result};
use crate::fields::{
    advective, convective_into, dissipation, divergence, lp_norm, staggered_lp_norm,
    vector_laplacian_into, ScalarField, StaggeredField,
};
use crate::geometry::DomainGeometry;
use crate::hodge::{leray_decompose_with, projection_tolerance};
use crate::trajectory::Trajectory;

/// Largest stable step without the acoustic constraint.
pub fn stable_dt(geo: &DomainGeometry, mu: f64, umax: f64) -> f64 {
    let dx = geo.min_spacing();
    let mut m = dx * dx / (2.0 * geo.dim() as f64 * mu);
    if umax > 0.0 {
        m = m.min(dx / umax);
    }
    CFL_SAFETY * m
}

/// Scale-free divergence measure Δx‖div u‖ / ‖u‖ (0 for u = 0).
pub fn relative_divergence(u: &StaggeredField) -> Result<f64> {
    let n = staggered_lp_norm(u, 2.0)?;
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok(u.geometry().min_spacing() * lp_norm(&divergence(u), 2.0)? / n)
}

#[derive(Debug, Clone)]
pub struct NsSolver {
    config: SimConfig,
    geo: Arc<DomainGeometry>,
    poisson: Poisson,
    lap: StaggeredField,
    conv: StaggeredField,
    potential: Option<ScalarField>,
    e0: Option<f64>,
}

impl NsSolver {
    pub fn new(geo: &Arc<DomainGeometry>, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: config.clone(),
            geo: geo.clone(),
            poisson: Poisson::new(geo).with_tol(config.tol),
            lap: StaggeredField::zeros(geo),
            conv: StaggeredField::zeros(geo),
            potential: None,
            e0: None,
        })
    }

    pub fn step(&mut self, state: &mut SimState) -> Result<()> {
        let (dt, mu) = (self.config.dt, self.config.mu);
        let umax = state.velocity.max_abs();
        let limit = stable_dt(&self.geo, mu, umax);
        if dt > limit * (1.0 + 1e-12) {
            return Err(AcnsError::CflViolation(format!(
                "dt {dt} exceeds the stable step {limit:.4e}"
            )));
        }
        let tol = projection_tolerance(&self.poisson);
        let div_in = relative_divergence(&state.velocity)?;
        if div_in > tol {
            return Err(AcnsError::Precondition(format!(
                "velocity is not solenoidal (relative divergence {div_in:.3e})"
            )));
        }
        let e0 = *self
            .e0
            .get_or_insert_with(|| state.velocity.kinetic_energy());

        vector_laplacian_into(&state.velocity, &mut self.lap)?;
        convective_into(&state.velocity, &mut self.conv)?;
        let mut star = state.velocity.clone();
        for a in 0..self.geo.dim() {
            let (l, c) = (self.lap.component(a), self.conv.component(a));
            for (f, v) in star.component_mut(a).iter_mut().enumerate() {
                *v += dt * (mu * l[f] - c[f]);
            }
        }
        star.enforce_walls();
        let pair = leray_decompose_with(&self.poisson, &star, self.potential.as_ref())?;
        state.pressure = pair.potential.scaled(1.0 / dt);
        self.potential = Some(pair.potential);
        state.previous_pressure = state.pressure.clone();
        state.velocity = pair.solenoidal;
        state.step += 1;
        state.time = state.step as f64 * dt;

        if !state.velocity.is_finite() {
            return Err(AcnsError::Blowup {
                step: state.step,
                reason: "non-finite field".into(),
            });
        }
        if e0 > 0.0 && state.velocity.kinetic_energy() > BLOWUP_FACTOR * e0 {
            return Err(AcnsError::Blowup {
                step: state.step,
                reason: format!("kinetic energy exceeds {BLOWUP_FACTOR}·E(0)"),
            });
        }
        Ok(())
    }
}

pub fn ns_step(state: &SimState, config: &SimConfig) -> Result<SimState> {
    let mut s = state.clone();
    NsSolver::new(state.geometry(), config)?.step(&mut s)?;
    Ok(s)
}

/// Reference run on `geo` from the same initial data as the
/// artificial-compressibility run of `config` (ε is ignored).
pub fn run_reference_on(geo: &Arc<DomainGeometry>, config: &SimConfig) -> Result<RunOutput> {
    let mut state = initialize_on(geo, config)?;
    let solver = Poisson::new(geo).with_tol(config.tol);
    state.velocity = leray_decompose_with(&solver, &state.velocity, None)?.solenoidal;
    let mut ns = NsSolver::new(geo, config)?;
    let mut traj = Trajectory::new(None, config.mu, config.dt);
    let sample = |s: &SimState| LedgerSample {
        time: s.time,
        energy: s.velocity.kinetic_energy(),
        dissipation_rate: config.mu * dissipation(&s.velocity),
    };
    let mut samples = vec![sample(&state)];
    traj.snapshots.push(state.snapshot());
    for n in 1..=config.num_steps() {
        ns.step(&mut state)?;
        samples.push(sample(&state));
        if n % config.snapshot_every == 0 {
            traj.snapshots.push(state.snapshot());
        }
    }
    Ok(RunOutput {
        trajectory: traj,
        ledger: EnergyLedger::from_samples(&samples),
        last_good: None,
    })
}

pub fn run_reference(config: &SimConfig) -> Result<RunOutput> {
    let geo = Arc::new(DomainGeometry::new(config.geometry.clone())?);
    run_reference_on(&geo, config)
}

/// Pressure of the incompressible limit, p = −Δ_N⁻¹ div((u·∇)u), with zero
/// mean.
pub fn limit_pressure(u: &StaggeredField) -> Result<ScalarField> {
    let rhs = divergence(&advective(u)).scaled(-1.0);
    Poisson::new(u.geometry()).solve_neumann(&rhs, true)
}
