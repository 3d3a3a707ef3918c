use crate::error::{AcnsError, Result};

use super::{ScalarField, StaggeredField};

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(AcnsError::BadExponent(p))
    }
}

/// (Σ|v|^p · w)^{1/p}, or max|v| for p = ∞.
pub fn lp_norm_values(values: &[f64], weight: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    if p == 2.0 {
        return Ok((values.iter().map(|v| v * v).sum::<f64>() * weight).sqrt());
    }
    if p == 1.0 {
        return Ok(values.iter().map(|v| v.abs()).sum::<f64>() * weight);
    }
    // scale by the max so large exponents do not overflow
    let m = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = values.iter().map(|v| (v.abs() / m).powf(p)).sum();
    Ok(m * (s * weight).powf(1.0 / p))
}

/// L^p norm over the active cells.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    lp_norm_values(f.values(), f.geometry().cell_volume(), p)
}

/// L^p norm of a face field, taken over all face values of all components
/// (closed faces contribute zero). For p = 2 this is √(2·kinetic energy).
pub fn staggered_lp_norm(u: &StaggeredField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let w = u.geometry().cell_volume();
    if p.is_infinite() {
        return Ok(u.max_abs());
    }
    let per: Vec<f64> = u
        .components()
        .iter()
        .map(|c| lp_norm_values(c, w, p))
        .collect::<Result<_>>()?;
    lp_norm_values(&per, 1.0, p)
}

/// L^q in time of a sequence of per-snapshot spatial norms sampled with
/// uniform spacing `dt` (trapezoid rule for finite q).
pub fn space_time_norm(norms: &[f64], dt: f64, q: f64) -> Result<f64> {
    check_exponent(q)?;
    if norms.is_empty() {
        return Err(AcnsError::EmptySeries);
    }
    if q.is_infinite() {
        return Ok(norms.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let n = norms.len();
    if n == 1 {
        return Ok(0.0);
    }
    let m = norms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return Ok(0.0);
    }
    let g: Vec<f64> = norms.iter().map(|v| (v.abs() / m).powf(q)).collect();
    let s = dt * (g.iter().sum::<f64>() - 0.5 * (g[0] + g[n - 1]));
    Ok(m * s.powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{DomainGeometry, GeometrySpec, Obstacle};

    fn geo() -> Arc<DomainGeometry> {
        Arc::new(
            DomainGeometry::new(GeometrySpec::boxed(&[1.0, 1.0], &[16, 16], Obstacle::None))
                .unwrap(),
        )
    }

    #[test]
    fn indicator_l1() {
        let g = geo();
        let mut v = vec![0.0; g.num_cells()];
        for x in v.iter_mut().take(7) {
            *x = 1.0;
        }
        let f = ScalarField::from_values(&g, v).unwrap();
        assert!((lp_norm(&f, 1.0).unwrap() - 7.0 * g.cell_volume()).abs() < 1e-15);
    }

    #[test]
    fn bad_exponent() {
        let g = geo();
        let f = ScalarField::zeros(&g);
        assert!(matches!(lp_norm(&f, 0.5), Err(AcnsError::BadExponent(_))));
    }

    #[test]
    fn constant_in_time() {
        let n = space_time_norm(&[3.0; 11], 0.1, 2.0).unwrap();
        assert!((n - 3.0).abs() < 1e-12);
        assert_eq!(space_time_norm(&[2.5], 0.1, f64::INFINITY).unwrap(), 2.5);
        assert!(matches!(
            space_time_norm(&[], 0.1, 2.0),
            Err(AcnsError::EmptySeries)
        ));
    }

    #[test]
    fn linear_ramp_quadrature() {
        // ∫₀¹ t² dt = 1/3, trapezoid error h²/6
        let n = 101;
        let h = 0.01;
        let vals: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let got = space_time_norm(&vals, h, 2.0).unwrap().powi(2);
        assert!((got - 1.0 / 3.0).abs() <= h * h / 6.0 + 1e-14);
    }
}
