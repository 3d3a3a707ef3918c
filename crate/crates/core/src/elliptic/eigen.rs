//! Smallest Dirichlet-Laplacian eigenpairs by Chebyshev-filtered subspace
//! iteration with Rayleigh-Ritz. A block method copes with the repeated
//! eigenvalues of symmetric boxes, which single-vector Lanczos does not.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Stencil;
use crate::error::{AcnsError, Result};
use crate::fields::{same_geometry, ScalarField};
use crate::geometry::{CellClass, DomainGeometry};

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Relative residual target ‖Av − λv‖ ≤ tol·λ.
    pub tol: f64,
    pub max_outer: usize,
    pub degree: usize,
    /// Fraction of ‖f‖² a basis must capture before positive-order norms are
    /// trusted.
    pub min_capture: f64,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_outer: 200,
            degree: 24,
            min_capture: 0.9,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    geo: Arc<DomainGeometry>,
    eigenvalues: Vec<f64>,
    /// Full cell arrays, orthonormal in the volume-weighted inner product.
    vectors: Vec<Vec<f64>>,
    min_capture: f64,
}

impl SpectralBasis {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn geometry(&self) -> &Arc<DomainGeometry> {
        &self.geo
    }

    pub fn min_capture(&self) -> f64 {
        self.min_capture
    }

    pub fn set_min_capture(&mut self, c: f64) {
        self.min_capture = c;
    }

    pub fn vector(&self, j: usize) -> ScalarField {
        ScalarField::from_values(&self.geo, self.vectors[j].clone())
            .expect("basis vectors match their geometry")
    }

    pub fn vector_values(&self, j: usize) -> &[f64] {
        &self.vectors[j]
    }

    pub fn check(&self, f: &ScalarField) -> Result<()> {
        same_geometry(&self.geo, f.geometry()).map_err(|_| AcnsError::BasisMismatch)
    }

    /// f̂(j) = ⟨f, v_j⟩.
    pub fn coefficients(&self, f: &ScalarField) -> Result<Vec<f64>> {
        self.check(f)?;
        let w = self.geo.cell_volume();
        let fv = f.values();
        Ok(self
            .vectors
            .par_iter()
            .map(|v| v.iter().zip(fv).map(|(a, b)| a * b).sum::<f64>() * w)
            .collect())
    }

    /// Σ c_j v_j.
    pub fn synthesize(&self, coeffs: &[f64]) -> ScalarField {
        let n = self.geo.num_cells();
        let mut out = vec![0.0; n];
        for (c, v) in coeffs.iter().zip(&self.vectors) {
            if *c != 0.0 {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += c * x;
                }
            }
        }
        ScalarField::from_values(&self.geo, out).expect("basis vectors match their geometry")
    }

    /// Σ λ_j^s f̂(j) v_j, i.e. (−Δ_D)^s f on the retained modes.
    pub fn apply_power(&self, f: &ScalarField, s: f64) -> Result<ScalarField> {
        let c = self.coefficients(f)?;
        Ok(self.synthesize(&self.scale_coefficients(&c, s)))
    }

    pub fn scale_coefficients(&self, c: &[f64], s: f64) -> Vec<f64> {
        c.iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| c * l.powf(s))
            .collect()
    }

    /// Fraction of ‖f‖² carried by the retained modes (1 for f = 0).
    pub fn capture(&self, f: &ScalarField) -> Result<f64> {
        let c = self.coefficients(f)?;
        let total = f.dot(f)?;
        if total == 0.0 {
            return Ok(1.0);
        }
        Ok((c.iter().map(|v| v * v).sum::<f64>() / total).min(1.0))
    }
}

fn random_block(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
}

fn apply_block(st: &Stencil, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut y = DMatrix::zeros(n, x.ncols());
    y.as_mut_slice()
        .par_chunks_mut(n)
        .zip(x.as_slice().par_chunks(n))
        .for_each(|(yc, xc)| st.apply(xc, yc));
    y
}

/// Orthonormalizes the columns (Cholesky QR, applied twice).
fn orthonormalize(x: &mut DMatrix<f64>) -> Result<()> {
    for _ in 0..2 {
        let g = x.tr_mul(x);
        let chol = g.cholesky().ok_or(AcnsError::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        })?;
        let l = chol.l();
        // X ← X L^{-T}
        let lt = l.transpose();
        let inv = lt.try_inverse().ok_or(AcnsError::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        })?;
        *x = &*x * inv;
    }
    Ok(())
}

/// Scaled Chebyshev filter damping [a, b] relative to the value at a0.
fn chebyshev_filter(
    st: &Stencil,
    x: &DMatrix<f64>,
    deg: usize,
    a: f64,
    b: f64,
    a0: f64,
) -> DMatrix<f64> {
    let e = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    let mut sigma = e / (a0 - c);
    let tau = 2.0 / sigma;
    let mut x_prev = x.clone();
    let mut y = (apply_block(st, x) - x * c) * (sigma / e);
    for _ in 1..deg {
        let sigma_new = 1.0 / (tau - sigma);
        let ay = apply_block(st, &y);
        let y_new = (ay - &y * c) * (2.0 * sigma_new / e) - &x_prev * (sigma * sigma_new);
        x_prev = y;
        y = y_new;
        sigma = sigma_new;
    }
    y
}

/// The `k` smallest eigenpairs of −Δ with Dirichlet walls.
pub fn dirichlet_eigenbasis(geo: &Arc<DomainGeometry>, k: usize) -> Result<SpectralBasis> {
    dirichlet_eigenbasis_with(geo, k, &EigenOptions::default())
}

pub fn dirichlet_eigenbasis_with(
    geo: &Arc<DomainGeometry>,
    k: usize,
    opts: &EigenOptions,
) -> Result<SpectralBasis> {
    let max = geo.count(CellClass::Fluid) / 4;
    if k > max || k == 0 {
        return Err(AcnsError::RankTooLarge { requested: k, max });
    }
    let st = Stencil::new(geo, true);
    let n = st.len();
    let guard = (k / 4).max(16);
    let m = (k + guard).min(n);
    let upper = st.spectral_upper_bound();

    let mut x = random_block(n, m, opts.seed);
    orthonormalize(&mut x)?;
    let mut ritz = rayleigh_ritz(&st, &mut x)?;
    let mut worst = f64::INFINITY;
    for _ in 0..opts.max_outer {
        let cut = ritz[m - 1];
        let low = ritz[0];
        x = chebyshev_filter(&st, &x, opts.degree, cut, upper, low);
        orthonormalize(&mut x)?;
        ritz = rayleigh_ritz(&st, &mut x)?;
        let ax = apply_block(&st, &x);
        worst = (0..k)
            .map(|j| {
                let r = ax.column(j) - x.column(j) * ritz[j];
                r.norm() / ritz[j]
            })
            .fold(0.0, f64::max);
        if worst <= opts.tol {
            let w = geo.cell_volume();
            let scale = 1.0 / w.sqrt();
            let vectors = (0..k)
                .map(|j| {
                    let compact: Vec<f64> = x.column(j).iter().map(|v| v * scale).collect();
                    let mut full = vec![0.0; geo.num_cells()];
                    st.scatter(&compact, &mut full);
                    normalize_sign(&mut full);
                    full
                })
                .collect();
            return Ok(SpectralBasis {
                geo: geo.clone(),
                eigenvalues: ritz[..k].to_vec(),
                vectors,
                min_capture: opts.min_capture,
            });
        }
    }
    Err(AcnsError::NoConvergence {
        iterations: opts.max_outer,
        residual: worst,
    })
}

/// Makes the largest-magnitude entry positive so bases are reproducible.
fn normalize_sign(v: &mut [f64]) {
    let (mut best, mut idx) = (0.0f64, 0);
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best + 1e-12 {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Rotates `x` onto Ritz vectors (ascending) and returns the Ritz values.
fn rayleigh_ritz(st: &Stencil, x: &mut DMatrix<f64>) -> Result<Vec<f64>> {
    let ax = apply_block(st, x);
    let mut h = x.tr_mul(&ax);
    h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let q = DMatrix::from_fn(order.len(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    *x = &*x * q;
    Ok(order.iter().map(|&i| eig.eigenvalues[i]).collect())
}

const CACHE_MAGIC: &[u8; 4] = b"ACNB";
const CACHE_VERSION: u32 = 1;

pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os("ACNS_CACHE_DIR").map(PathBuf::from)
}

fn cache_path(dir: &Path, geo: &DomainGeometry, k: usize) -> PathBuf {
    dir.join(format!("basis-{:016x}-k{k}.bin", geo.fingerprint()))
}

pub fn write_basis(path: &Path, basis: &SpectralBasis) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&basis.geo.fingerprint().to_le_bytes());
    buf.extend_from_slice(&(basis.rank() as u64).to_le_bytes());
    buf.extend_from_slice(&(basis.geo.num_cells() as u64).to_le_bytes());
    for l in &basis.eigenvalues {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    for v in &basis.vectors {
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let tmp = path.with_extension("tmp");
    fs::File::create(&tmp)?.write_all(&buf)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a cached basis; `Ok(None)` when the file belongs to another
/// geometry or rank.
pub fn read_basis(
    path: &Path,
    geo: &Arc<DomainGeometry>,
    k: usize,
) -> Result<Option<SpectralBasis>> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    let corrupt = |reason: &str| AcnsError::CorruptSnapshot {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if buf.len() < 32 || &buf[..4] != CACHE_MAGIC {
        return Err(corrupt("bad header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
    if u32_at(4) != CACHE_VERSION {
        return Ok(None);
    }
    let (fp, rank, ncells) = (u64_at(8), u64_at(16) as usize, u64_at(24) as usize);
    if fp != geo.fingerprint() || rank != k || ncells != geo.num_cells() {
        return Ok(None);
    }
    let expected = 32 + 8 * (rank + rank * ncells);
    if buf.len() != expected {
        return Err(corrupt("payload length does not match header"));
    }
    let f64_at = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
    let eigenvalues = (0..rank).map(|j| f64_at(32 + 8 * j)).collect();
    let base = 32 + 8 * rank;
    let vectors = (0..rank)
        .map(|j| {
            (0..ncells)
                .map(|c| f64_at(base + 8 * (j * ncells + c)))
                .collect()
        })
        .collect();
    Ok(Some(SpectralBasis {
        geo: geo.clone(),
        eigenvalues,
        vectors,
        min_capture: EigenOptions::default().min_capture,
    }))
}

/// Loads the basis from `cache_dir` when present, otherwise computes it and
/// stores it there.
pub fn load_or_build_basis(
    geo: &Arc<DomainGeometry>,
    k: usize,
    cache_dir: Option<&Path>,
) -> Result<SpectralBasis> {
    if let Some(dir) = cache_dir {
        let path = cache_path(dir, geo, k);
        if path.exists() {
            if let Some(b) = read_basis(&path, geo, k)? {
                return Ok(b);
            }
        }
        let basis = dirichlet_eigenbasis(geo, k)?;
        fs::create_dir_all(dir)?;
        write_basis(&path, &basis)?;
        return Ok(basis);
    }
    dirichlet_eigenbasis(geo, k)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::fields::dirichlet_laplacian;
    use crate::geometry::{GeometrySpec, Obstacle};

    fn unit(n: usize) -> Arc<DomainGeometry> {
        Arc::new(
            DomainGeometry::new(GeometrySpec::boxed(&[1.0, 1.0], &[n, n], Obstacle::None)).unwrap(),
        )
    }

    /// Eigenvalues of the cell-centered 5-point Laplacian with Dirichlet
    /// data on the box faces: Σ_a (4/h²) sin²(k_a π h / 2).
    fn discrete_square_eigs(n: usize, count: usize) -> Vec<f64> {
        let h = 1.0 / n as f64;
        let mut v = Vec::new();
        for i in 1..=n {
            for j in 1..=n {
                let s = |k: usize| 4.0 / (h * h) * (k as f64 * PI * h / 2.0).sin().powi(2);
                v.push(s(i) + s(j));
            }
        }
        v.sort_by(f64::total_cmp);
        v.truncate(count);
        v
    }

    #[test]
    fn unit_square_spectrum() {
        let geo = unit(32);
        let b = dirichlet_eigenbasis(&geo, 20).unwrap();
        let exact = discrete_square_eigs(32, 20);
        for (got, want) in b.eigenvalues().iter().zip(&exact) {
            assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
        }
        assert!((b.eigenvalues()[0] - 2.0 * PI * PI).abs() < 0.02 * 2.0 * PI * PI);
        assert!(b.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigenvectors_orthonormal_with_small_residual() {
        let geo = Arc::new(
            DomainGeometry::new(GeometrySpec::boxed(
                &[4.0, 4.0],
                &[32, 32],
                Obstacle::Ball {
                    center: vec![1.0, 2.0],
                    radius: 0.3,
                },
            ))
            .unwrap(),
        );
        let b = dirichlet_eigenbasis(&geo, 24).unwrap();
        for i in 0..b.rank() {
            let vi = b.vector(i);
            for j in 0..b.rank() {
                let g = vi.dot(&b.vector(j)).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-8);
            }
            let mut r = dirichlet_laplacian(&vi);
            r.axpy(b.eigenvalues()[i], &vi).unwrap();
            let rn = r.dot(&r).unwrap().sqrt();
            assert!(rn <= 1e-6 * b.eigenvalues()[i]);
        }
    }

    #[test]
    fn rank_limit() {
        let geo = unit(16);
        assert!(matches!(
            dirichlet_eigenbasis(&geo, 200),
            Err(AcnsError::RankTooLarge { .. })
        ));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let geo = unit(16);
        let b = load_or_build_basis(&geo, 8, Some(dir.path())).unwrap();
        let c = load_or_build_basis(&geo, 8, Some(dir.path())).unwrap();
        assert_eq!(b.eigenvalues(), c.eigenvalues());
        for j in 0..8 {
            assert_eq!(b.vector_values(j), c.vector_values(j));
        }
    }
}
