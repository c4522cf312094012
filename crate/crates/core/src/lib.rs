//! Immersed finite element solver for incompressible fluid-structure interaction in 2D.

pub mod assembly;
pub mod config;
pub mod constitutive;
pub mod error;
pub mod fem;
pub mod harness;
pub mod locate;
pub mod mesh;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
