//! Artificial-compressibility approximation of the incompressible
//! Navier-Stokes equations on a box with an embedded obstacle, with the
//! projections, acoustic splitting and diagnostics needed to measure how the
//! approximation converges as ε → 0.

pub mod ac_solver;
pub mod acoustics;
pub mod cli;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod hodge;
pub mod ns_reference;
pub mod sweep;
pub mod trajectory;

pub use error::{AcnsError, Result};
