//! Python module `acns`: geometry, configuration, single runs, the Leray
//! projection, rate fits and ε sweeps. Fields cross the boundary as flat
//! lists of floats (one list per velocity component).

use std::path::PathBuf;
use std::sync::Arc;

use acns_core::ac_solver::{initialize_on, run_partial_on, RunOutput};
use acns_core::cli::config::ConfigFile;
use acns_core::elliptic::{cache_dir_from_env, load_or_build_basis};
use acns_core::fields::{divergence, lp_norm, staggered_lp_norm, StaggeredField};
use acns_core::geometry::{CellClass, DomainGeometry, GeometrySpec, Obstacle};
use acns_core::hodge::leray_decompose;
use acns_core::sweep::{fit_rate as core_fit_rate, q_decay_theory, run_sweep};
use acns_core::AcnsError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: AcnsError) -> PyErr {
    match e {
        AcnsError::Blowup { .. } | AcnsError::NoConvergence { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Computational domain: a box, optionally periodic, with an optional disk
/// or ball obstacle.
#[pyclass(name = "Geometry", frozen)]
struct PyGeometry {
    inner: Arc<DomainGeometry>,
}

#[pymethods]
impl PyGeometry {
    #[new]
    #[pyo3(signature = (extents, cells, obstacle_center=None, obstacle_radius=None, periodic=false))]
    fn new(
        extents: Vec<f64>,
        cells: Vec<usize>,
        obstacle_center: Option<Vec<f64>>,
        obstacle_radius: Option<f64>,
        periodic: bool,
    ) -> PyResult<Self> {
        let spec = if periodic {
            GeometrySpec::periodic(&extents, &cells)
        } else {
            let obstacle = match (obstacle_center, obstacle_radius) {
                (Some(center), Some(radius)) => Obstacle::Ball { center, radius },
                (None, None) => Obstacle::None,
                _ => {
                    return Err(PyValueError::new_err(
                        "obstacle_center and obstacle_radius go together",
                    ))
                }
            };
            GeometrySpec::boxed(&extents, &cells, obstacle)
        };
        let inner = DomainGeometry::new(spec).map_err(to_py)?;
        Ok(Self {
            inner: Arc::new(inner),
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn cells(&self) -> Vec<usize> {
        self.inner.cells()[..self.inner.dim()].to_vec()
    }

    #[getter]
    fn spacing(&self) -> Vec<f64> {
        self.inner.spacing()[..self.inner.dim()].to_vec()
    }

    /// Number of faces normal to each axis.
    fn face_counts(&self) -> Vec<usize> {
        (0..self.inner.dim()).map(|a| self.inner.num_faces(a)).collect()
    }

    /// Counts of (fluid, obstacle boundary, far-field boundary, solid) cells.
    fn class_counts(&self) -> (usize, usize, usize, usize) {
        (
            self.inner.count(CellClass::Fluid),
            self.inner.count(CellClass::ObstacleBoundary),
            self.inner.count(CellClass::FarfieldBoundary),
            self.inner.count(CellClass::Solid),
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "Geometry(cells={:?}, spacing={:?})",
            self.cells(),
            self.spacing()
        )
    }
}

/// Parsed run configuration (TOML).
#[pyclass(name = "Config", frozen)]
struct PyConfig {
    inner: ConfigFile,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ConfigFile::parse(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ConfigFile::load(&path).map_err(to_py)?,
        })
    }

    /// Fully resolved configuration text.
    fn echo(&self) -> String {
        self.inner.echo()
    }

    fn geometry(&self) -> PyResult<PyGeometry> {
        let inner = DomainGeometry::new(self.inner.geometry.clone()).map_err(to_py)?;
        Ok(PyGeometry {
            inner: Arc::new(inner),
        })
    }

    /// Copy of this configuration with a different random seed.
    fn with_seed(&self, seed: u64) -> Self {
        let mut inner = self.inner.clone();
        inner.override_seed(seed);
        Self { inner }
    }
}

/// Result of one run: snapshots and the per-step energy ledger.
#[pyclass(name = "Run", frozen)]
struct PyRun {
    output: RunOutput,
    error: Option<String>,
}

#[pymethods]
impl PyRun {
    /// Error that stopped the run early, if any.
    #[getter]
    fn error(&self) -> Option<String> {
        self.error.clone()
    }

    #[getter]
    fn epsilon(&self) -> Option<f64> {
        self.output.trajectory.epsilon
    }

    fn __len__(&self) -> usize {
        self.output.trajectory.len()
    }

    fn times(&self) -> Vec<f64> {
        self.output.trajectory.times()
    }

    fn steps(&self) -> Vec<usize> {
        self.output.trajectory.snapshots.iter().map(|s| s.step).collect()
    }

    /// Per-step (time, energy, dissipation, residual) columns.
    fn ledger(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let l = &self.output.ledger;
        (
            l.times.clone(),
            l.energy.clone(),
            l.dissipation.clone(),
            l.residual.clone(),
        )
    }

    /// |E(T) + ∫μ‖∇u‖² − E(0)| / E(0).
    fn relative_residual(&self) -> f64 {
        self.output.ledger.relative_final_residual()
    }

    fn velocity(&self, n: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.snapshot(n)?.velocity.components().to_vec())
    }

    fn pressure(&self, n: usize) -> PyResult<Vec<f64>> {
        Ok(self.snapshot(n)?.pressure.values().to_vec())
    }

    /// ‖div u‖_{L²} at snapshot `n`.
    fn divergence_norm(&self, n: usize) -> PyResult<f64> {
        lp_norm(&divergence(&self.snapshot(n)?.velocity), 2.0).map_err(to_py)
    }
}

impl PyRun {
    fn snapshot(&self, n: usize) -> PyResult<&acns_core::trajectory::Snapshot> {
        self.output
            .trajectory
            .snapshots
            .get(n)
            .ok_or_else(|| PyValueError::new_err(format!("no snapshot {n}")))
    }
}

/// Runs one artificial-compressibility simulation; `epsilon` overrides the
/// configured value.
#[pyfunction]
#[pyo3(signature = (config, epsilon=None))]
fn run(py: Python<'_>, config: &PyConfig, epsilon: Option<f64>) -> PyResult<PyRun> {
    let cfg = config.inner.clone();
    py.detach(move || {
        let sim = cfg.sim_config(epsilon).map_err(to_py)?;
        let geo = Arc::new(DomainGeometry::new(sim.geometry.clone()).map_err(to_py)?);
        let init = initialize_on(&geo, &sim).map_err(to_py)?;
        let (output, err) = run_partial_on(&geo, &sim, init);
        Ok(PyRun {
            output,
            error: err.map(|e| e.to_string()),
        })
    })
}

/// Splits a velocity field into (solenoidal, gradient) components.
type Components = Vec<Vec<f64>>;

#[pyfunction]
fn leray_split(geometry: &PyGeometry, components: Components) -> PyResult<(Components, Components)> {
    let u = StaggeredField::from_components(&geometry.inner, components).map_err(to_py)?;
    let pair = leray_decompose(&u).map_err(to_py)?;
    Ok((
        pair.solenoidal.into_components(),
        pair.gradient_part.into_components(),
    ))
}

/// L^p norm of a velocity field given as component lists.
#[pyfunction]
fn velocity_norm(geometry: &PyGeometry, components: Vec<Vec<f64>>, p: f64) -> PyResult<f64> {
    let u = StaggeredField::from_components(&geometry.inner, components).map_err(to_py)?;
    staggered_lp_norm(&u, p).map_err(to_py)
}

/// Log-log least-squares fit of y ≈ C x^s: (slope, slope_low, slope_high).
#[pyfunction]
fn fit_rate(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let f = core_fit_rate(&points).map_err(to_py)?;
    Ok((f.slope, f.slope_low, f.slope_high))
}

/// Decay exponent predicted for ‖Qu^ε‖_{L²L^p}.
#[pyfunction]
fn q_decay_exponent(p: f64) -> f64 {
    q_decay_theory(p)
}

/// Runs the ε sweep of a configuration with a `[sweep]` section and returns
/// (report CSV, fits CSV, summary text).
#[pyfunction]
fn sweep(py: Python<'_>, config: &PyConfig) -> PyResult<(String, String, String)> {
    let cfg = config.inner.clone();
    py.detach(move || {
        let section = cfg
            .sweep
            .clone()
            .ok_or_else(|| PyValueError::new_err("configuration has no [sweep] section"))?;
        let first = *section
            .epsilons
            .first()
            .ok_or_else(|| PyValueError::new_err("empty epsilon list"))?;
        let base = cfg.sim_config(Some(first)).map_err(to_py)?;
        let geo = Arc::new(DomainGeometry::new(base.geometry.clone()).map_err(to_py)?);
        let basis = load_or_build_basis(&geo, cfg.basis_rank(), cache_dir_from_env().as_deref())
            .map_err(to_py)?;
        let outcome =
            run_sweep(&section.scenario, &base, &section.epsilons, &basis).map_err(to_py)?;
        let r = &outcome.report;
        Ok((r.to_csv(), r.fits_csv(), r.summary()))
    })
}

#[pymodule]
pub fn acns(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(leray_split, m)?)?;
    m.add_function(wrap_pyfunction!(velocity_norm, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(q_decay_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
