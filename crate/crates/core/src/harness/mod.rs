//! Simulation driver shared by the command-line tool and the test suites:
//! mesh descriptors, the run loop, error norms against the ring solution,
//! and VTK/CSV output.

mod analytic;
mod meshes;
mod norms;
mod output;
mod run;

pub use analytic::analytic_ring_pressure;
pub use meshes::load_mesh;
pub use norms::{compute_error_norms, observed_rate, pressure_region_mean, ErrorNorms};
pub use output::{
    fluid_vtk, solid_vtk, write_errors_csv, write_fluid_vtk, write_report_csv, write_solid_vtk, ERRORS_HEADER,
    REPORT_HEADER,
};
pub use run::{compute_solid_area, convergence_study, RunReport, Simulation, StepRecord, StudyLevel};
