//! Sparsity, residual and Jacobian of the monolithic fluid/solid system.
//!
//! The fluid equations are integrated over the whole control volume; the
//! solid contributes through quadrature on its reference mesh, with every
//! solid quadrature point located in the fluid mesh at `s + h(s)`.

mod coupling;
mod jacobian;
mod residual;
mod system;

pub use coupling::Coupling;
pub use system::{
    AssemblyOptions, BoundarySetup, CoupledSystem, PhysicalConstants, PressureConstraint, FLUID_GEOMETRY,
    SOLID_GEOMETRY,
};
