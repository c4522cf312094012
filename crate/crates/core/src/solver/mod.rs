//! Linear solves, Newton iterations and implicit-Euler time stepping.

mod linear;
mod newton;
mod state;

pub use linear::{linear_solve, Factorization, LinearSolver};
pub use newton::{advance, newton_solve, NewtonOptions, NewtonReport, TimeStepper};
pub use state::SystemState;
