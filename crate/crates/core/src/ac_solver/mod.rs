//! Explicit time stepping of the artificial-compressibility system
//!
//!   ∂_t u − μΔu + (u·∇)u + ½(div u)u + ∇p = 0,   ε∂_t p + div u = 0,
//!
//! with no-slip walls. Momentum and interior pressure use forward Euler;
//! pressure cells next to a wall use Chorin's two-level leapfrog update.

mod initial;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{EnergyLedger, LedgerSample};
use crate::elliptic::DEFAULT_TOL;
use crate::error::{AcnsError, Result};
use crate::fields::{
    convective_into, dissipation, divergence_into, gradient_into, vector_laplacian_into,
    ScalarField, StaggeredField,
};
use crate::geometry::{DomainGeometry, GeometrySpec};
use crate::trajectory::{Snapshot, Trajectory};

pub use initial::{initial_velocity, InitialData};

/// Safety factor in the explicit stability bound.
pub const CFL_SAFETY: f64 = 0.4;

/// Kinetic energy growth factor treated as divergence of the run.
pub const BLOWUP_FACTOR: f64 = 1e3;

fn one() -> f64 {
    1.0
}

fn one_step() -> usize {
    1
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub epsilon: f64,
    #[serde(default = "one")]
    pub mu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub initial: InitialData,
    /// Steps between stored snapshots.
    #[serde(default = "one_step")]
    pub snapshot_every: usize,
    /// Relative residual for elliptic solves.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl SimConfig {
    pub fn new(geometry: GeometrySpec, epsilon: f64, dt: f64, t_end: f64) -> Self {
        Self {
            epsilon,
            mu: 1.0,
            dt,
            t_end,
            geometry,
            initial: InitialData::default(),
            snapshot_every: 1,
            tol: DEFAULT_TOL,
        }
    }

    pub fn num_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Checks the parameter ranges and the step count; the velocity part of
    /// the stability bound needs the initial field and is checked separately.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(AcnsError::Precondition(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("mu", self.mu)?;
        positive("dt", self.dt)?;
        positive("tol", self.tol)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(AcnsError::Precondition(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        let n = self.num_steps();
        if (n as f64 * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(AcnsError::Precondition(format!(
                "t_end {} is not an integer number of steps of {}",
                self.t_end, self.dt
            )));
        }
        if self.snapshot_every == 0 || !n.is_multiple_of(self.snapshot_every) {
            return Err(AcnsError::Precondition(format!(
                "snapshot_every {} must divide the step count {n}",
                self.snapshot_every
            )));
        }
        Ok(())
    }

    /// Largest stable step for the given grid and peak speed:
    /// 0.4·min(Δx²/(2dμ), Δx√ε, Δx/‖u‖∞).
    pub fn stable_dt(geo: &DomainGeometry, mu: f64, epsilon: f64, umax: f64) -> f64 {
        let dx = geo.min_spacing();
        let d = geo.dim() as f64;
        let mut m = (dx * dx / (2.0 * d * mu)).min(dx * epsilon.sqrt());
        if umax > 0.0 {
            m = m.min(dx / umax);
        }
        CFL_SAFETY * m
    }

    pub fn check_stability(&self, geo: &DomainGeometry, umax: f64) -> Result<()> {
        let limit = Self::stable_dt(geo, self.mu, self.epsilon, umax);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(AcnsError::CflViolation(format!(
                "dt {} exceeds the stable step {limit:.4e} (epsilon {}, mu {}, max speed {umax:.3})",
                self.dt, self.epsilon, self.mu
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub time: f64,
    pub step: usize,
    pub velocity: StaggeredField,
    pub pressure: ScalarField,
    /// Pressure one step back, for the wall leapfrog.
    pub previous_pressure: ScalarField,
}

impl SimState {
    pub fn new(velocity: StaggeredField, pressure: ScalarField) -> Result<Self> {
        velocity.check_same_scalar(&pressure)?;
        Ok(Self {
            time: 0.0,
            step: 0,
            previous_pressure: pressure.clone(),
            velocity,
            pressure,
        })
    }

    pub fn geometry(&self) -> &Arc<DomainGeometry> {
        self.velocity.geometry()
    }

    /// ½‖u‖² + (ε/2)‖p‖².
    pub fn energy(&self, epsilon: f64) -> f64 {
        self.velocity.kinetic_energy()
            + 0.5 * epsilon * self.pressure.dot(&self.pressure).unwrap_or(0.0)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            step: self.step,
            time: self.time,
            velocity: self.velocity.clone(),
            pressure: self.pressure.clone(),
        }
    }
}

/// Initial state for `config` on `geo`: built-in velocity, zero pressure.
pub fn initialize_on(geo: &Arc<DomainGeometry>, config: &SimConfig) -> Result<SimState> {
    config.validate()?;
    let (u, p) = match &config.initial {
        InitialData::File { path } => {
            let (u, p) = crate::cli::snapshot::read_state(path, geo)?;
            (u, p)
        }
        spec => (initial_velocity(geo, spec)?, ScalarField::zeros(geo)),
    };
    if !u.is_finite() || !p.is_finite() {
        return Err(AcnsError::BadInitialData("non-finite initial data".into()));
    }
    let mut u = u;
    u.enforce_walls();
    SimState::new(u, p)
}

pub fn initialize(config: &SimConfig) -> Result<SimState> {
    let geo = Arc::new(DomainGeometry::new(config.geometry.clone())?);
    initialize_on(&geo, config)
}

/// Stepper with preallocated work arrays.
#[derive(Debug, Clone)]
pub struct AcSolver {
    config: SimConfig,
    geo: Arc<DomainGeometry>,
    /// Cells that use the wall leapfrog.
    wall_cells: Vec<bool>,
    lap: StaggeredField,
    conv: StaggeredField,
    grad: StaggeredField,
    div: ScalarField,
    e0: Option<f64>,
}

impl AcSolver {
    pub fn new(geo: &Arc<DomainGeometry>, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let wall_cells = geo.cell_class().iter().map(|c| c.is_boundary()).collect();
        Ok(Self {
            config: config.clone(),
            geo: geo.clone(),
            wall_cells,
            lap: StaggeredField::zeros(geo),
            conv: StaggeredField::zeros(geo),
            grad: StaggeredField::zeros(geo),
            div: ScalarField::zeros(geo),
            e0: None,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &mut SimState) -> Result<()> {
        let cfg = &self.config;
        let (dt, eps, mu) = (cfg.dt, cfg.epsilon, cfg.mu);
        let e0 = *self.e0.get_or_insert_with(|| state.energy(eps));
        cfg.check_stability(&self.geo, state.velocity.max_abs())?;

        vector_laplacian_into(&state.velocity, &mut self.lap)?;
        convective_into(&state.velocity, &mut self.conv)?;
        gradient_into(&state.pressure, &mut self.grad)?;
        divergence_into(&state.velocity, &mut self.div)?;

        let u = &mut state.velocity;
        for a in 0..self.geo.dim() {
            let (l, c, g) = (
                self.lap.component(a),
                self.conv.component(a),
                self.grad.component(a),
            );
            for (f, v) in u.component_mut(a).iter_mut().enumerate() {
                *v += dt * (mu * l[f] - c[f] - g[f]);
            }
        }
        u.enforce_walls();

        let next = chorin_pressure_update(
            &state.pressure,
            &state.previous_pressure,
            &self.div,
            &self.wall_cells,
            dt,
            eps,
        );
        state.previous_pressure = std::mem::replace(&mut state.pressure, next);
        state.step += 1;
        state.time = state.step as f64 * dt;

        let e = state.energy(eps);
        if !state.velocity.is_finite() || !state.pressure.is_finite() || !e.is_finite() {
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

/// New pressure: forward Euler p − (Δt/ε) div u in the interior and the
/// leapfrog p_prev − 2(Δt/ε) div u on `wall_cells`, where the MAC divergence
/// of a wall cell is the one-sided normal difference (the wall face carries
/// zero) plus centered tangential differences.
fn chorin_pressure_update(
    p: &ScalarField,
    p_prev: &ScalarField,
    div: &ScalarField,
    wall_cells: &[bool],
    dt: f64,
    eps: f64,
) -> ScalarField {
    let mut out = p.clone();
    let (pv, pp, dv) = (p.values(), p_prev.values(), div.values());
    let geo = p.geometry().clone();
    for (c, o) in out.values_mut().iter_mut().enumerate() {
        if !geo.class_of(c).is_active() {
            continue;
        }
        *o = if wall_cells[c] {
            pp[c] - 2.0 * dt / eps * dv[c]
        } else {
            pv[c] - dt / eps * dv[c]
        };
    }
    out
}

/// Wall-cell pressures after one leapfrog step from `state` (other cells
/// keep their current value).
pub fn chorin_boundary_pressure(state: &SimState, config: &SimConfig) -> Result<ScalarField> {
    let geo = state.geometry().clone();
    let div = crate::fields::divergence(&state.velocity);
    let wall: Vec<bool> = geo.cell_class().iter().map(|c| c.is_boundary()).collect();
    let mut out = state.pressure.clone();
    let next = chorin_pressure_update(
        &state.pressure,
        &state.previous_pressure,
        &div,
        &wall,
        config.dt,
        config.epsilon,
    );
    for (c, o) in out.values_mut().iter_mut().enumerate() {
        if wall[c] {
            *o = next.values()[c];
        }
    }
    Ok(out)
}

pub fn step(state: &SimState, config: &SimConfig) -> Result<SimState> {
    let mut s = state.clone();
    AcSolver::new(state.geometry(), config)?.step(&mut s)?;
    Ok(s)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    /// Per-step energy bookkeeping.
    pub ledger: EnergyLedger,
    /// State before the failing step, when the run stopped early.
    pub last_good: Option<Snapshot>,
}

fn ledger_sample(state: &SimState, eps: f64, mu: f64) -> LedgerSample {
    LedgerSample {
        time: state.time,
        energy: state.energy(eps),
        dissipation_rate: mu * dissipation(&state.velocity),
    }
}

/// Runs to `t_end`, returning whatever was computed before a failure along
/// with the error.
pub fn run_partial_on(
    geo: &Arc<DomainGeometry>,
    config: &SimConfig,
    init: SimState,
) -> (RunOutput, Option<AcnsError>) {
    let mut traj = Trajectory::new(Some(config.epsilon), config.mu, config.dt);
    let mut samples = Vec::new();
    let mut state = init;
    let mut last_good = None;
    let result = (|| -> Result<()> {
        let mut solver = AcSolver::new(geo, config)?;
        config.check_stability(geo, state.velocity.max_abs())?;
        traj.snapshots.push(state.snapshot());
        samples.push(ledger_sample(&state, config.epsilon, config.mu));
        for n in 1..=config.num_steps() {
            let before = state.clone();
            if let Err(e) = solver.step(&mut state) {
                last_good = Some(before.snapshot());
                return Err(e);
            }
            samples.push(ledger_sample(&state, config.epsilon, config.mu));
            if n % config.snapshot_every == 0 {
                traj.snapshots.push(state.snapshot());
            }
        }
        Ok(())
    })();
    let ledger = EnergyLedger::from_samples(&samples);
    (
        RunOutput {
            trajectory: traj,
            ledger,
            last_good,
        },
        result.err(),
    )
}

pub fn run(config: &SimConfig) -> Result<RunOutput> {
    let geo = Arc::new(DomainGeometry::new(config.geometry.clone())?);
    let init = initialize_on(&geo, config)?;
    match run_partial_on(&geo, config, init) {
        (out, None) => Ok(out),
        (_, Some(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::divergence;
    use crate::geometry::Obstacle;

    fn disk_spec(n: usize) -> GeometrySpec {
        GeometrySpec::boxed(
            &[4.0, 4.0],
            &[n, n],
            Obstacle::Ball {
                center: vec![1.0, 2.0],
                radius: 0.3,
            },
        )
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let mut cfg = SimConfig::new(disk_spec(32), 0.1, 1e-3, 0.01);
        cfg.initial = InitialData::Zero;
        let out = run(&cfg).unwrap();
        assert_eq!(out.trajectory.len(), 11);
        for s in &out.trajectory.snapshots {
            assert_eq!(s.velocity.max_abs(), 0.0);
            assert!(s.pressure.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn first_step_interior_pressure() {
        let geo = Arc::new(DomainGeometry::new(disk_spec(32)).unwrap());
        let cfg = SimConfig::new(disk_spec(32), 0.1, 1e-3, 1e-3);
        let u =
            StaggeredField::from_fn(&geo, |a, x| if a == 0 { (x[1]).sin() * x[0] } else { 0.0 });
        let s0 = SimState::new(u, ScalarField::zeros(&geo)).unwrap();
        let s1 = step(&s0, &cfg).unwrap();
        let d = divergence(&s0.velocity);
        for c in 0..geo.num_cells() {
            if geo.class_of(c) == crate::geometry::CellClass::Fluid {
                let want = -cfg.dt / cfg.epsilon * d.values()[c];
                assert!((s1.pressure.values()[c] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chorin_formula_unit_case() {
        // ε = Δt = Δx = 1: a wall cell whose far normal face carries 1 and
        // whose tangential faces carry equal values drops by 2
        let spec = GeometrySpec::boxed(&[16.0, 16.0], &[16, 16], Obstacle::None);
        let geo = Arc::new(DomainGeometry::new(spec.clone()).unwrap());
        let cfg = SimConfig::new(spec, 1.0, 1.0, 1.0);
        let c = geo.ravel([5, 0, 0]);
        let mut u = StaggeredField::zeros(&geo);
        let top = geo.high_face(1, [5, 0, 0]);
        u.component_mut(1)[top] = 1.0;
        let left = geo.low_face(0, [5, 0, 0]);
        let right = geo.high_face(0, [5, 0, 0]);
        u.component_mut(0)[left] = 0.3;
        u.component_mut(0)[right] = 0.3;
        let mut prev = ScalarField::zeros(&geo);
        prev.values_mut()[c] = 0.7;
        let state = SimState {
            time: 0.0,
            step: 1,
            velocity: u,
            pressure: ScalarField::zeros(&geo),
            previous_pressure: prev,
        };
        let p = chorin_boundary_pressure(&state, &cfg).unwrap();
        assert!((p.values()[c] - (0.7 - 2.0)).abs() < 1e-14);
    }

    #[test]
    fn stability_bound_is_enforced() {
        let cfg = SimConfig::new(disk_spec(32), 1e-3, 1e-2, 0.1);
        assert!(matches!(run(&cfg), Err(AcnsError::CflViolation(_))));
    }

    #[test]
    fn walls_stay_closed_and_rerun_is_identical() {
        let spec = disk_spec(32);
        let geo = DomainGeometry::new(spec.clone()).unwrap();
        let dt = SimConfig::stable_dt(&geo, 1.0, 0.01, 3.0);
        let steps = 5.0 * (0.05 / dt / 5.0).ceil();
        let dt = 0.05 / steps;
        let mut cfg = SimConfig::new(spec, 0.01, dt, 0.05);
        cfg.snapshot_every = cfg.num_steps() / 5;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        for (x, y) in a.trajectory.snapshots.iter().zip(&b.trajectory.snapshots) {
            assert_eq!(x.velocity.max_wall_value(), 0.0);
            assert_eq!(x.velocity.components(), y.velocity.components());
            assert_eq!(x.pressure.values(), y.pressure.values());
        }
        assert_eq!(a.trajectory.len(), 6);
    }
}
