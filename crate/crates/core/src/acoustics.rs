//! Acoustic analysis of an artificial-compressibility run: the fast time
//! τ = t/√ε, the pressure wave equation
//!
//!   ∂_ττ p̃ − Δp̃ = −μΔ div ũ + div((ũ·∇)ũ + ½(div ũ)ũ),
//!
//! and its splitting into a viscous component p̃₁ = Δq₁ and a convective
//! component p̃₂ = (−Δ)^{1/2} q₂, where q₁, q₂ solve Dirichlet wave problems.
//! The wave problems are integrated mode by mode in a truncated Dirichlet
//! eigenbasis with leapfrog in τ.

use rayon::prelude::*;

use crate::diagnostics::h_minus1_norm;
use crate::elliptic::{Poisson, SpectralBasis};
use crate::error::{AcnsError, Result};
use crate::fields::{
    convective, dirichlet_laplacian, divergence, laplacian, lp_norm, negative_sobolev_lp_norm,
    space_time_norm, staggered_lp_norm, vector_laplacian, ScalarField, StaggeredField,
};
use crate::trajectory::Trajectory;

/// Spatial operator applied to the pressure in the wave equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PressureLaplacian {
    /// The stepper's D·G, with the wall flux (Δ_N − Δ_D)p̃ moved into the
    /// convective forcing of the splitting.
    #[default]
    Neumann,
    /// Homogeneous Dirichlet Laplacian throughout.
    Dirichlet,
}

/// Modal sequences of the split pressure, one coefficient vector per τ.
#[derive(Debug, Clone)]
pub struct PressureSplit {
    pub laplacian: PressureLaplacian,
    pub q1: Vec<Vec<f64>>,
    pub q2: Vec<Vec<f64>>,
    pub f1: Vec<Vec<f64>>,
    pub f2: Vec<Vec<f64>>,
    /// ‖p̃ − (p̃₁ + p̃₂)‖_{W^{−2,2}} on the retained modes, per τ.
    pub defect: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AcousticFields {
    pub epsilon: f64,
    pub mu: f64,
    pub tau: Vec<f64>,
    pub velocity: Vec<StaggeredField>,
    pub pressure: Vec<ScalarField>,
    pub split: Option<PressureSplit>,
}

impl AcousticFields {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn dtau(&self) -> f64 {
        if self.tau.len() < 2 {
            0.0
        } else {
            self.tau[1] - self.tau[0]
        }
    }

    /// Physical times t = √ε τ.
    pub fn physical_times(&self) -> Vec<f64> {
        let s = self.epsilon.sqrt();
        self.tau.iter().map(|t| t * s).collect()
    }

    fn split_ref(&self) -> Result<&PressureSplit> {
        self.split
            .as_ref()
            .ok_or_else(|| AcnsError::Precondition("pressure has not been split".into()))
    }

    fn synth(&self, basis: &SpectralBasis, c: &[f64], s: f64) -> Result<ScalarField> {
        if basis.rank() != c.len() {
            return Err(AcnsError::BasisMismatch);
        }
        Ok(basis.synthesize(&basis.scale_coefficients(c, s)))
    }

    pub fn q1(&self, n: usize, basis: &SpectralBasis) -> Result<ScalarField> {
        self.synth(basis, &self.split_ref()?.q1[n], 0.0)
    }

    pub fn q2(&self, n: usize, basis: &SpectralBasis) -> Result<ScalarField> {
        self.synth(basis, &self.split_ref()?.q2[n], 0.0)
    }

    /// p̃₁ = Δ_D q₁.
    pub fn p1(&self, n: usize, basis: &SpectralBasis) -> Result<ScalarField> {
        Ok(self
            .synth(basis, &self.split_ref()?.q1[n], 1.0)?
            .scaled(-1.0))
    }

    /// p̃₂ = (−Δ_D)^{1/2} q₂.
    pub fn p2(&self, n: usize, basis: &SpectralBasis) -> Result<ScalarField> {
        self.synth(basis, &self.split_ref()?.q2[n], 0.5)
    }

    /// Largest |q₁|, |q₂| on solid cells over all τ. The wall-face trace of
    /// every Dirichlet mode vanishes by construction of the ghost values, so
    /// this is the only place a boundary value could appear.
    pub fn max_boundary_value(&self, basis: &SpectralBasis) -> Result<f64> {
        let split = self.split_ref()?;
        let geo = basis.geometry();
        let solid: Vec<usize> = (0..geo.num_cells())
            .filter(|&c| !geo.class_of(c).is_active())
            .collect();
        let mut m: f64 = 0.0;
        for n in 0..self.len() {
            for q in [&split.q1[n], &split.q2[n]] {
                let f = self.synth(basis, q, 0.0)?;
                for &c in &solid {
                    m = m.max(f.values()[c].abs());
                }
            }
        }
        Ok(m)
    }
}

/// Relabels the snapshot times of `traj` by τ = t/√ε.
pub fn rescale(traj: &Trajectory, epsilon: f64) -> Result<AcousticFields> {
    if !(epsilon > 0.0) {
        return Err(AcnsError::Precondition(format!(
            "ε must be positive, got {epsilon}"
        )));
    }
    traj.cadence()?;
    let s = epsilon.sqrt();
    Ok(AcousticFields {
        epsilon,
        mu: traj.mu,
        tau: traj.times().iter().map(|t| t / s).collect(),
        velocity: traj.snapshots.iter().map(|s| s.velocity.clone()).collect(),
        pressure: traj.snapshots.iter().map(|s| s.pressure.clone()).collect(),
        split: None,
    })
}

fn require_snapshots(f: &AcousticFields, needed: usize) -> Result<()> {
    if f.len() < needed {
        return Err(AcnsError::InsufficientSnapshots {
            needed,
            got: f.len(),
        });
    }
    Ok(())
}

/// −μ DΔ_v ũ + D((ũ·∇)ũ + ½(div ũ)ũ), the right side of the wave equation.
fn wave_forcing(u: &StaggeredField, mu: f64) -> ScalarField {
    let mut g = divergence(&convective(u));
    g.axpy(-mu, &divergence(&vector_laplacian(u)))
        .expect("fields share a geometry");
    g
}

fn pressure_operator(p: &ScalarField, op: PressureLaplacian) -> ScalarField {
    match op {
        PressureLaplacian::Neumann => laplacian(p),
        PressureLaplacian::Dirichlet => dirichlet_laplacian(p),
    }
}

fn w_minus2(c: &[f64], basis: &SpectralBasis) -> f64 {
    c.iter()
        .zip(basis.eigenvalues())
        .map(|(c, l)| (c / l) * (c / l))
        .sum::<f64>()
        .sqrt()
}

/// W^{−2,2} norm of the discrete wave residual at each interior τ, with
/// centred second differences in τ. Under the stepper's operator the wall
/// cells follow the Chorin boundary closure instead of the wave equation and
/// are left out; the Dirichlet operator carries its own closure and keeps
/// every fluid cell.
pub fn wave_residual(
    fields: &AcousticFields,
    basis: &SpectralBasis,
    op: PressureLaplacian,
) -> Result<Vec<f64>> {
    require_snapshots(fields, 3)?;
    let h2 = fields.dtau() * fields.dtau();
    let geo = basis.geometry();
    let walls: Vec<usize> = match op {
        PressureLaplacian::Neumann => (0..geo.num_cells())
            .filter(|&c| geo.class_of(c).is_boundary())
            .collect(),
        PressureLaplacian::Dirichlet => Vec::new(),
    };
    (1..fields.len() - 1)
        .into_par_iter()
        .map(|n| {
            let p = &fields.pressure;
            let mut r = p[n + 1].clone();
            r.axpy(-2.0, &p[n])?;
            r.axpy(1.0, &p[n - 1])?;
            r = r.scaled(1.0 / h2);
            r.axpy(-1.0, &pressure_operator(&p[n], op))?;
            r.axpy(-1.0, &wave_forcing(&fields.velocity[n], fields.mu))?;
            for &c in &walls {
                r.values_mut()[c] = 0.0;
            }
            Ok(w_minus2(&basis.coefficients(&r)?, basis))
        })
        .collect()
}

/// Leapfrog for w'' + λw = F(τ) on every mode.
fn leapfrog(
    lambda: &[f64],
    w0: Vec<f64>,
    v0: &[f64],
    forcing: &[Vec<f64>],
    dtau: f64,
) -> Vec<Vec<f64>> {
    let n = forcing.len();
    let h2 = dtau * dtau;
    let mut out = Vec::with_capacity(n);
    out.push(w0);
    if n > 1 {
        let w = &out[0];
        let w1 = (0..lambda.len())
            .map(|j| w[j] + dtau * v0[j] + 0.5 * h2 * (forcing[0][j] - lambda[j] * w[j]))
            .collect();
        out.push(w1);
    }
    for k in 1..n.saturating_sub(1) {
        let (a, b) = (&out[k - 1], &out[k]);
        let next = (0..lambda.len())
            .map(|j| 2.0 * b[j] - a[j] + h2 * (forcing[k][j] - lambda[j] * b[j]))
            .collect();
        out.push(next);
    }
    out
}

/// Splits p̃ into the viscous and convective wave components.
///
/// q₁ = Δ⁻¹p̃₁ starts at rest and is driven by F₁ = −Δ_D⁻¹(μ DΔ_v ũ), the
/// discrete form of −Δ⁻¹Δ div ũ. q₂ = (−Δ)^{−1/2}p̃₂ carries the initial
/// pressure data, with ∂_τp̃(0) = −div ũ(0)/√ε, and is driven by
/// F₂ = (−Δ_D)^{−1/2} div((ũ·∇)ũ + ½(div ũ)ũ), plus the wall flux when the
/// pressure operator is the stepper's.
pub fn split_pressure(
    mut fields: AcousticFields,
    basis: &SpectralBasis,
    op: PressureLaplacian,
) -> Result<AcousticFields> {
    require_snapshots(&fields, 1)?;
    let dtau = fields.dtau();
    let dx = basis.geometry().min_spacing();
    if dtau > 0.5 * dx {
        return Err(AcnsError::CflViolation(format!(
            "wave step Δτ = {dtau:.4e} exceeds 0.5·Δx = {:.4e}",
            0.5 * dx
        )));
    }
    let lambda = basis.eigenvalues().to_vec();
    let mu = fields.mu;
    let modal: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = fields
        .velocity
        .par_iter()
        .zip(&fields.pressure)
        .map(|(u, p)| {
            let visc = divergence(&vector_laplacian(u)).scaled(mu);
            let mut conv = divergence(&convective(u));
            if op == PressureLaplacian::Neumann {
                let mut flux = laplacian(p);
                flux.axpy(-1.0, &dirichlet_laplacian(p))?;
                conv.axpy(1.0, &flux)?;
            }
            let f1: Vec<f64> = basis
                .coefficients(&visc)?
                .iter()
                .zip(&lambda)
                .map(|(c, l)| c / l)
                .collect();
            let f2 = basis.scale_coefficients(&basis.coefficients(&conv)?, -0.5);
            Ok((f1, f2, basis.coefficients(p)?))
        })
        .collect::<Result<_>>()?;
    let mut f1 = Vec::with_capacity(modal.len());
    let mut f2 = Vec::with_capacity(modal.len());
    let mut p_hat = Vec::with_capacity(modal.len());
    for (a, b, c) in modal {
        f1.push(a);
        f2.push(b);
        p_hat.push(c);
    }

    let k = lambda.len();
    let q1 = leapfrog(&lambda, vec![0.0; k], &vec![0.0; k], &f1, dtau);
    let dp0 = divergence(&fields.velocity[0]).scaled(-1.0 / fields.epsilon.sqrt());
    let v0 = basis.scale_coefficients(&basis.coefficients(&dp0)?, -0.5);
    let w0 = basis.scale_coefficients(&p_hat[0], -0.5);
    let q2 = leapfrog(&lambda, w0, &v0, &f2, dtau);

    let defect = (0..fields.len())
        .map(|n| {
            let d: Vec<f64> = (0..k)
                .map(|j| p_hat[n][j] + lambda[j] * q1[n][j] - lambda[j].sqrt() * q2[n][j])
                .collect();
            w_minus2(&d, basis)
        })
        .collect();
    fields.split = Some(PressureSplit {
        laplacian: op,
        q1,
        q2,
        f1,
        f2,
        defect,
    });
    Ok(fields)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StrichartzRow {
    pub lhs: f64,
    pub rhs: f64,
    /// lhs / rhs, NaN when both sides vanish.
    pub ratio: f64,
}

/// Both sides of the Strichartz-type estimate for the pressure:
///
/// LHS = ε^{3/8}‖p‖_{L⁴_t W^{−2,4}} + ε^{7/8}‖∂_t p‖_{L⁴_t W^{−3,4}},
/// RHS = √ε‖p₀‖_{L²} + ‖div u₀‖_{Ḣ⁻¹_D} + ‖(u·∇)u + ½(div u)u‖_{L¹_t L^{3/2}}
///       + √T‖div u‖_{L²_t L²},
///
/// with ∂_t p = −div u/ε taken from the continuity equation.
pub fn strichartz_functional(
    traj: &Trajectory,
    epsilon: f64,
    basis: &SpectralBasis,
) -> Result<StrichartzRow> {
    if traj.is_empty() {
        return Err(AcnsError::EmptySeries);
    }
    let h = traj.cadence()?;
    let per_snapshot: Vec<[f64; 4]> = traj
        .snapshots
        .par_iter()
        .map(|s| {
            let div = divergence(&s.velocity);
            Ok([
                negative_sobolev_lp_norm(&s.pressure, 2, 4.0, basis)?,
                negative_sobolev_lp_norm(&div, 3, 4.0, basis)? / epsilon,
                staggered_lp_norm(&convective(&s.velocity), 1.5)?,
                lp_norm(&div, 2.0)?,
            ])
        })
        .collect::<Result<_>>()?;
    let col = |i: usize| per_snapshot.iter().map(|r| r[i]).collect::<Vec<f64>>();
    let lhs = epsilon.powf(0.375) * space_time_norm(&col(0), h, 4.0)?
        + epsilon.powf(0.875) * space_time_norm(&col(1), h, 4.0)?;
    let first = &traj.snapshots[0];
    let solver = Poisson::new(traj.geometry()?);
    let rhs = epsilon.sqrt() * lp_norm(&first.pressure, 2.0)?
        + h_minus1_norm(&solver, &divergence(&first.velocity))?
        + space_time_norm(&col(2), h, 1.0)?
        + traj.horizon().sqrt() * space_time_norm(&col(3), h, 2.0)?;
    let ratio = if rhs == 0.0 && lhs == 0.0 {
        f64::NAN
    } else {
        lhs / rhs
    };
    Ok(StrichartzRow { lhs, rhs, ratio })
}
