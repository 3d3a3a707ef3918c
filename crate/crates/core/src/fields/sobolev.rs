//! Spectral Sobolev norms on the retained Dirichlet modes.

use crate::elliptic::SpectralBasis;
use crate::error::{AcnsError, Result};

use super::{lp_norm, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevNorm {
    pub value: f64,
    /// Fraction of ‖f‖²_{L²} carried by the retained modes.
    pub capture: f64,
}

/// ‖f‖_{Ḣ^γ} = (Σ_j λ_j^γ |f̂(j)|²)^{1/2}.
pub fn sobolev_norm(f: &ScalarField, gamma: f64, basis: &SpectralBasis) -> Result<SobolevNorm> {
    if gamma.abs() > 3.0 {
        return Err(AcnsError::Precondition(format!(
            "Sobolev order {gamma} outside [-3, 3]"
        )));
    }
    let c = basis.coefficients(f)?;
    let total = f.dot(f)?;
    let kept: f64 = c.iter().map(|v| v * v).sum();
    let capture = if total == 0.0 {
        1.0
    } else {
        (kept / total).min(1.0)
    };
    if gamma > 0.0 && capture < basis.min_capture() {
        return Err(AcnsError::InsufficientRank {
            capture,
            threshold: basis.min_capture(),
        });
    }
    let value = c
        .iter()
        .zip(basis.eigenvalues())
        .map(|(c, l)| c * c * l.powf(gamma))
        .sum::<f64>()
        .sqrt();
    Ok(SobolevNorm { value, capture })
}

/// ‖f‖_{W^{−k,r}} realized as ‖(−Δ_D)^{−k/2} f‖_{L^r}.
pub fn negative_sobolev_lp_norm(
    f: &ScalarField,
    k: u32,
    r: f64,
    basis: &SpectralBasis,
) -> Result<f64> {
    if k > 3 {
        return Err(AcnsError::Precondition(format!(
            "negative order {k} outside 0..=3"
        )));
    }
    if k == 0 {
        return lp_norm(f, r);
    }
    let g = basis.apply_power(f, -(k as f64) / 2.0)?;
    lp_norm(&g, r)
}
