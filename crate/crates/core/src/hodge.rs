//! Discrete Leray-Hodge splitting u = Pu + Qu with Qu = ∇Λ and
//! ΔΛ = div u under homogeneous Neumann walls.

use crate::elliptic::Poisson;
use crate::error::Result;
use crate::fields::{divergence, gradient, ScalarField, StaggeredField};

#[derive(Debug, Clone)]
pub struct LerayPair {
    pub solenoidal: StaggeredField,
    pub gradient_part: StaggeredField,
    pub potential: ScalarField,
}

pub fn leray_decompose(u: &StaggeredField) -> Result<LerayPair> {
    leray_decompose_with(&Poisson::new(u.geometry()), u, None)
}

/// Decomposition with a reusable solver and an optional warm start for Λ.
pub fn leray_decompose_with(
    solver: &Poisson,
    u: &StaggeredField,
    guess: Option<&ScalarField>,
) -> Result<LerayPair> {
    let d = divergence(u);
    let (potential, _) = solver.solve_neumann_from(&d, true, guess)?;
    let gradient_part = gradient(&potential);
    let mut solenoidal = u.clone();
    solenoidal.axpy(-1.0, &gradient_part)?;
    Ok(LerayPair {
        solenoidal,
        gradient_part,
        potential,
    })
}

/// Tolerance the projection invariants are held to, relative to ‖u‖.
pub fn projection_tolerance(solver: &Poisson) -> f64 {
    10.0 * solver.tol
}
