//! Poisson solvers on the masked grid and the Dirichlet eigenbasis.
//!
//! Both Laplacians are assembled once per geometry into a compressed stencil
//! over the active cells. Systems are solved for the positive operator −Δ with
//! Jacobi-preconditioned conjugate gradients.

mod eigen;

use std::sync::Arc;

use crate::error::{AcnsError, Result};
use crate::fields::{same_geometry, ScalarField};
use crate::geometry::{DomainGeometry, NONE};

pub use eigen::{
    cache_dir_from_env, dirichlet_eigenbasis, load_or_build_basis, read_basis, write_basis,
    EigenOptions, SpectralBasis,
};

pub const DEFAULT_TOL: f64 = 1e-8;

/// −Δ restricted to active cells, in compressed (active-only) numbering.
#[derive(Debug, Clone)]
pub struct Stencil {
    /// Active index → cell index.
    cells: Vec<usize>,
    /// Cell index → active index (NONE for solid cells).
    index: Vec<usize>,
    diag: Vec<f64>,
    nbr: Vec<[usize; 6]>,
    coef: Vec<[f64; 6]>,
}

impl Stencil {
    fn new(geo: &DomainGeometry, dirichlet: bool) -> Self {
        let t = geo.tables();
        let dx = geo.spacing();
        let dim = geo.dim();
        let mut cells = Vec::new();
        let mut index = vec![NONE; geo.num_cells()];
        for c in 0..geo.num_cells() {
            if geo.class_of(c).is_active() {
                index[c] = cells.len();
                cells.push(c);
            }
        }
        let n = cells.len();
        let mut diag = vec![0.0; n];
        let mut nbr = vec![[NONE; 6]; n];
        let mut coef = vec![[0.0; 6]; n];
        for (k, &c) in cells.iter().enumerate() {
            for a in 0..dim {
                let w = 1.0 / (dx[a] * dx[a]);
                for side in [2 * a, 2 * a + 1] {
                    let f = t.cell_faces[c][side];
                    if geo.is_open(a, f) {
                        diag[k] += w;
                        nbr[k][side] = index[t.cell_nbrs[c][side]];
                        coef[k][side] = -w;
                    } else if dirichlet {
                        diag[k] += 2.0 * w;
                    }
                }
            }
        }
        Self {
            cells,
            index,
            diag,
            nbr,
            coef,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// y = (−Δ) x in compressed numbering.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for k in 0..self.cells.len() {
            let mut s = self.diag[k] * x[k];
            let nb = &self.nbr[k];
            let cf = &self.coef[k];
            for side in 0..6 {
                if nb[side] != NONE {
                    s += cf[side] * x[nb[side]];
                }
            }
            y[k] = s;
        }
    }

    /// Gershgorin upper bound on the spectrum.
    pub fn spectral_upper_bound(&self) -> f64 {
        (0..self.len())
            .map(|k| self.diag[k] + self.coef[k].iter().map(|c| c.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.cells.iter().map(|&c| full[c]).collect()
    }

    pub fn scatter(&self, compact: &[f64], full: &mut [f64]) {
        full.iter_mut().for_each(|v| *v = 0.0);
        for (k, &c) in self.cells.iter().enumerate() {
            full[c] = compact[k];
        }
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn active_index(&self, cell: usize) -> usize {
        self.index[cell]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= m);
}

/// Jacobi-PCG for A x = b. With `project` the iteration is kept in the
/// zero-mean subspace (singular Neumann operator).
fn pcg(
    st: &Stencil,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    project: bool,
) -> Result<SolveStats> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    if project {
        remove_mean(x);
    }
    let mut r = vec![0.0; n];
    st.apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    if project {
        remove_mean(&mut r);
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for k in 0..n {
            z[k] = r[k] / st.diag[k];
        }
        if project {
            remove_mean(z);
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > tol {
        if it >= max_iter {
            return Err(AcnsError::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        st.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(AcnsError::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if project {
            remove_mean(&mut r);
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        it += 1;
        // recompute the true residual now and then to avoid drift
        if it % 50 == 0 {
            st.apply(x, &mut ap);
            for k in 0..n {
                r[k] = b[k] - ap[k];
            }
            if project {
                remove_mean(&mut r);
            }
        }
        res = dot(&r, &r).sqrt() / bnorm;
    }
    if project {
        remove_mean(x);
    }
    Ok(SolveStats {
        iterations: it,
        residual: res,
    })
}

/// Neumann and Dirichlet Poisson solvers for one geometry.
#[derive(Debug, Clone)]
pub struct Poisson {
    geo: Arc<DomainGeometry>,
    neumann: Stencil,
    dirichlet: Stencil,
    pub tol: f64,
}

impl Poisson {
    pub fn new(geo: &Arc<DomainGeometry>) -> Self {
        Self {
            geo: geo.clone(),
            neumann: Stencil::new(geo, false),
            dirichlet: Stencil::new(geo, true),
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn geometry(&self) -> &Arc<DomainGeometry> {
        &self.geo
    }

    pub fn dirichlet_stencil(&self) -> &Stencil {
        &self.dirichlet
    }

    pub fn neumann_stencil(&self) -> &Stencil {
        &self.neumann
    }

    fn max_iter(&self) -> usize {
        10 * self.neumann.len().max(1)
    }

    /// Zero-mean Λ with ΔΛ = rhs and ∂Λ/∂n = 0 on every wall. With
    /// `remove_mean` the rhs mean is subtracted first; otherwise a rhs with
    /// nonzero integral is rejected.
    pub fn solve_neumann(&self, rhs: &ScalarField, remove_mean_first: bool) -> Result<ScalarField> {
        self.solve_neumann_from(rhs, remove_mean_first, None)
            .map(|(f, _)| f)
    }

    /// As `solve_neumann`, starting from `guess` when given.
    pub fn solve_neumann_from(
        &self,
        rhs: &ScalarField,
        remove_mean_first: bool,
        guess: Option<&ScalarField>,
    ) -> Result<(ScalarField, SolveStats)> {
        same_geometry(&self.geo, rhs.geometry())?;
        let st = &self.neumann;
        let mut b = st.gather(rhs.values());
        let total: f64 = b.iter().sum();
        // |Σb| ≤ √N‖b‖ by Cauchy-Schwarz; compatibility is relative to that
        let scale = dot(&b, &b).sqrt() * (b.len() as f64).sqrt();
        if remove_mean_first {
            remove_mean(&mut b);
        } else if total.abs() > 1e-10 * scale {
            let vol = self.geo.cell_volume();
            return Err(AcnsError::IncompatibleRhs {
                integral: total * vol,
                tolerance: 1e-10 * scale * vol,
            });
        } else {
            remove_mean(&mut b);
        }
        // −Δ Λ = −rhs
        b.iter_mut().for_each(|v| *v = -*v);
        let mut x = match guess {
            Some(g) => {
                same_geometry(&self.geo, g.geometry())?;
                st.gather(g.values())
            }
            None => vec![0.0; b.len()],
        };
        let stats = pcg(st, &b, &mut x, self.tol, self.max_iter(), true)?;
        let mut full = vec![0.0; self.geo.num_cells()];
        st.scatter(&x, &mut full);
        Ok((ScalarField::from_values(&self.geo, full)?, stats))
    }

    /// φ with Δφ = rhs and φ = 0 on every wall face.
    pub fn solve_dirichlet(&self, rhs: &ScalarField) -> Result<ScalarField> {
        same_geometry(&self.geo, rhs.geometry())?;
        let st = &self.dirichlet;
        let b: Vec<f64> = st.gather(rhs.values()).iter().map(|v| -v).collect();
        let mut x = vec![0.0; b.len()];
        pcg(st, &b, &mut x, self.tol, self.max_iter(), false)?;
        let mut full = vec![0.0; self.geo.num_cells()];
        st.scatter(&x, &mut full);
        ScalarField::from_values(&self.geo, full)
    }

    /// ‖f‖_{W^{−2,2}} realized as ‖Δ_D⁻¹ f‖_{L²}, without modal truncation.
    pub fn w_minus2_norm(&self, f: &ScalarField) -> Result<f64> {
        let phi = self.solve_dirichlet(f)?;
        crate::fields::lp_norm(&phi, 2.0)
    }
}

pub fn solve_poisson_neumann(rhs: &ScalarField) -> Result<ScalarField> {
    Poisson::new(rhs.geometry()).solve_neumann(rhs, false)
}

pub fn solve_poisson_dirichlet(rhs: &ScalarField) -> Result<ScalarField> {
    Poisson::new(rhs.geometry()).solve_dirichlet(rhs)
}
