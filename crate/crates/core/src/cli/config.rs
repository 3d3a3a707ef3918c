//! Run configuration: `key = value` lines grouped under `[geometry]`,
//! `[solver]`, `[initial_data]`, `[sweep]` and `[output]` (TOML syntax).
//! Unknown keys are rejected with the line they appear on.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ac_solver::{InitialData, SimConfig};
use crate::elliptic::DEFAULT_TOL;
use crate::error::{AcnsError, Result};
use crate::geometry::GeometrySpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Required by `run`; a sweep takes its values from `[sweep]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "one")]
    pub mu: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one_step")]
    pub snapshot_every: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "custom")]
    pub scenario: String,
    pub epsilons: Vec<f64>,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Rank of the Dirichlet eigenbasis used for fractional norms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_rank: Option<usize>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            basis_rank: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub geometry: GeometrySpec,
    pub solver: SolverSection,
    #[serde(default)]
    pub initial_data: InitialData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> f64 {
    1.0
}

fn one_step() -> usize {
    1
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn custom() -> String {
    "custom".into()
}

fn default_directory() -> PathBuf {
    PathBuf::from("acns-out")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: ConfigFile = toml::from_str(text).map_err(|e| AcnsError::Config {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        cfg.resolve();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AcnsError::Unreadable {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Fills in defaults that depend on other sections.
    fn resolve(&mut self) {
        if self.output.basis_rank.is_none() {
            let rank = if self.geometry.cells.len() == 3 { 128 } else { 256 };
            self.output.basis_rank = Some(rank);
        }
    }

    pub fn basis_rank(&self) -> usize {
        self.output.basis_rank.unwrap_or(256)
    }

    /// Replaces the seed of random initial data.
    pub fn override_seed(&mut self, new_seed: u64) {
        if let InitialData::RandomSolenoidal { seed, .. } = &mut self.initial_data {
            *seed = new_seed;
        }
    }

    /// Solver configuration at `epsilon`, or at `[solver] epsilon` when
    /// `None`.
    pub fn sim_config(&self, epsilon: Option<f64>) -> Result<SimConfig> {
        let eps = epsilon.or(self.solver.epsilon).ok_or_else(|| AcnsError::Config {
            line: 0,
            message: "[solver] epsilon is required".into(),
        })?;
        let cfg = SimConfig {
            epsilon: eps,
            mu: self.solver.mu,
            dt: self.solver.dt,
            t_end: self.solver.t_end,
            geometry: self.geometry.clone(),
            initial: self.initial_data.clone(),
            snapshot_every: self.solver.snapshot_every,
            tol: self.solver.tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fully resolved configuration as written to every output directory.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STANDARD: &str = r#"
[geometry]
extents = [4.0, 4.0]
cells = [64, 64]

[geometry.obstacle]
shape = "ball"
center = [1.0, 2.0]
radius = 0.3

[solver]
epsilon = 1e-2
dt = 3.90625e-4
t_end = 0.5
snapshot_every = 32

[initial_data]
kind = "random_solenoidal"
seed = 42

[sweep]
scenario = "standard"
epsilons = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
"#;

    #[test]
    fn parses_and_echo_round_trips() {
        let cfg = ConfigFile::parse(STANDARD).unwrap();
        assert_eq!(cfg.basis_rank(), 256);
        assert_eq!(cfg.solver.mu, 1.0);
        let sim = cfg.sim_config(None).unwrap();
        assert_eq!(sim.num_steps(), 1280);
        let again = ConfigFile::parse(&cfg.echo()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let text = STANDARD.replace("t_end = 0.5", "t_end = 0.5\nt_ned = 1.0");
        match ConfigFile::parse(&text) {
            Err(AcnsError::Config { line, message }) => {
                assert_eq!(line, 15, "{message}");
                assert!(message.contains("t_ned"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_names_the_path() {
        let e = ConfigFile::load(Path::new("/nonexistent/acns.toml")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/acns.toml"));
    }

    #[test]
    fn seed_override_applies_to_random_data() {
        let mut cfg = ConfigFile::parse(STANDARD).unwrap();
        cfg.override_seed(7);
        assert!(matches!(
            cfg.initial_data,
            InitialData::RandomSolenoidal { seed: 7, .. }
        ));
    }
}
