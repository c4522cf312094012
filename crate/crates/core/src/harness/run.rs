use std::path::{Path, PathBuf};

use log::info;
use nalgebra::{Matrix2, Vector2};

use crate::assembly::{BoundarySetup, CoupledSystem, PhysicalConstants};
use crate::config::Parameters;
use crate::constitutive::{ModelKind, SolidModel};
use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::solver::{NewtonOptions, SystemState, TimeStepper};
use crate::sparse::BlockedVector;

use super::analytic::analytic_ring_pressure;
use super::meshes::load_mesh;
use super::norms::{compute_error_norms, observed_rate, ErrorNorms};
use super::output;

/// One row of the time series.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub u_max: f64,
    pub newton_iterations: usize,
    pub solid_area: f64,
    pub area_change_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// One record per output interval plus the final step.
    pub records: Vec<StepRecord>,
    /// Present when the run has an analytic reference solution.
    pub errors: Option<ErrorNorms>,
    pub steps: usize,
    pub fluid_cells: usize,
    pub fluid_dofs: usize,
    pub initial_area: f64,
    /// Largest `|Bu|_inf` after any step.
    pub max_continuity_defect: f64,
    /// Largest `|area change|` in percent after any step.
    pub max_area_change_pct: f64,
    /// Largest `|u|_inf` after any step.
    pub max_velocity: f64,
}

/// `int_B J[w] dV` for the solid coefficients of `system`.
pub fn compute_solid_area(system: &CoupledSystem, w: &[f64]) -> Result<f64> {
    system.solid_area(w)
}

/// A coupled system built from a parameter set, ready to be stepped.
pub struct Simulation {
    parameters: Parameters,
    system: CoupledSystem,
    initial: BlockedVector,
    output_base: PathBuf,
}

impl Simulation {
    /// Meshes given as relative paths, and the output base, are resolved
    /// against `base_dir`.
    pub fn from_parameters(parameters: &Parameters, base_dir: &Path) -> Result<Self> {
        if parameters.velocity_degree != 2 {
            return Err(Error::InvalidArgument(format!(
                "only biquadratic velocity is supported, got degree {}",
                parameters.velocity_degree
            )));
        }
        let p = parameters;
        let fluid = load_mesh(&p.fluid_mesh, p.fluid_refinement, base_dir)?;
        let solid = load_mesh(&p.solid_mesh, p.solid_refinement, base_dir)?;
        let mut constants = PhysicalConstants::new(p.density, p.viscosity, p.phi_b);
        constants.body_force = p.force.parse(3)?;
        constants.dirichlet_data = p.ug.parse(3)?;
        let model = match p.model {
            ModelKind::CircumferentialFiber => {
                SolidModel::fiber(p.elastic_modulus, Point::new(p.ring.center[0], p.ring.center[1]))
            }
            kind => SolidModel::new(kind, p.elastic_modulus),
        };
        let boundary = BoundarySetup {
            all_dirichlet: p.all_dirichlet,
            dirichlet_marker: p.dirichlet_marker,
            fix_one_pressure_dof: p.fix_one_pressure_dof,
        };
        let system = CoupledSystem::new(fluid, solid, p.pressure_family, constants, model, boundary)?;
        let initial = system.initial_state(&p.u0.parse(3)?, &p.w0.parse(2)?, 0.0)?;
        Ok(Self { parameters: p.clone(), system, initial, output_base: base_dir.join(&p.output_base) })
    }

    pub fn system(&self) -> &CoupledSystem {
        &self.system
    }

    pub fn parameters(&self) -> &Parameters {
        &self.parameters
    }

    pub fn initial_state(&self) -> SystemState {
        SystemState::new(self.initial.clone(), 0.0, self.parameters.delta_t)
    }

    pub fn steps(&self) -> usize {
        (self.parameters.final_t / self.parameters.delta_t).round().max(1.0) as usize
    }

    /// Whether the run is compared against the equilibrium ring solution.
    pub fn has_analytic_solution(&self) -> bool {
        self.parameters.model == ModelKind::CircumferentialFiber
    }

    pub fn output_path(&self, suffix: &str) -> PathBuf {
        let mut s = self.output_base.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    }

    /// Zero velocity and the equilibrium ring pressure.
    pub fn error_norms(&self, fluid: &[f64]) -> Result<ErrorNorms> {
        let r = &self.parameters.ring;
        let center = Point::new(r.center[0], r.center[1]);
        let mu = self.parameters.elastic_modulus;
        compute_error_norms(
            &self.system,
            fluid,
            |_| (Vector2::zeros(), Matrix2::zeros()),
            |x| analytic_ring_pressure((x - center).norm(), r.inner_radius, r.width, r.edge_length, mu),
        )
    }

    fn snapshot(&self, step: usize, xi: &BlockedVector) -> Result<()> {
        output::write_fluid_vtk(&self.output_path(&format!("-fluid-{step}.vtk")), &self.system, &xi.fluid)?;
        output::write_solid_vtk(&self.output_path(&format!("-solid-{step}.vtk")), &self.system, &xi.solid)
    }

    /// Runs every time step; with `write_outputs` also writes the VTK
    /// snapshots and CSV files next to the output base.
    pub fn run(&self, write_outputs: bool) -> Result<(RunReport, SystemState)> {
        let p = &self.parameters;
        let system = &self.system;
        let nu = system.n_velocity();
        if write_outputs {
            if let Some(dir) = self.output_base.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        let mut state = self.initial_state();
        let mut stepper = TimeStepper::new(system, NewtonOptions::from_parameters(p))?;
        let initial_area = compute_solid_area(system, &state.xi.solid)?;
        if write_outputs {
            self.snapshot(0, &state.xi)?;
        }
        let steps = self.steps();
        let mut report = RunReport {
            records: Vec::new(),
            errors: None,
            steps,
            fluid_cells: system.fluid_mesh().n_cells(),
            fluid_dofs: system.n_fluid(),
            initial_area,
            max_continuity_defect: 0.0,
            max_area_change_pct: 0.0,
            max_velocity: 0.0,
        };
        for step in 1..=steps {
            let newton = stepper.advance(&mut state)?;
            let velocity = &state.xi.fluid[..nu];
            let u_max = velocity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let defect = system.continuity_defect(velocity).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let area = compute_solid_area(system, &state.xi.solid)?;
            let change = 100.0 * (area - initial_area) / initial_area;
            report.max_continuity_defect = report.max_continuity_defect.max(defect);
            report.max_area_change_pct = report.max_area_change_pct.max(change.abs());
            report.max_velocity = report.max_velocity.max(u_max);
            let at_output = step % p.output_interval == 0;
            if at_output || step == steps {
                info!(
                    "step {step}: t = {:.6}, |u| = {u_max:.3e}, {} Newton iterations, area change {change:.4}%",
                    state.t, newton.iterations
                );
                report.records.push(StepRecord {
                    step,
                    t: state.t,
                    u_max,
                    newton_iterations: newton.iterations,
                    solid_area: area,
                    area_change_pct: change,
                });
            }
            if write_outputs && at_output {
                self.snapshot(step, &state.xi)?;
            }
        }
        if self.has_analytic_solution() {
            report.errors = Some(self.error_norms(&state.xi.fluid)?);
        }
        if write_outputs {
            output::write_report_csv(&self.output_path("-report.csv"), &report.records)?;
            if let Some(e) = &report.errors {
                output::write_errors_csv(&self.output_path("-errors.csv"), report.fluid_cells, report.fluid_dofs, e)?;
            }
        }
        Ok((report, state))
    }
}

/// One level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyLevel {
    pub refinement: usize,
    pub cells: usize,
    pub dofs: usize,
    pub errors: ErrorNorms,
    /// Observed `(L2_u, H1_u, L2_p)` rates against the previous level.
    pub rates: Option<[f64; 3]>,
    pub report: RunReport,
}

/// Runs `parameters` once per fluid refinement level and compares
/// consecutive levels.
pub fn convergence_study(parameters: &Parameters, refinements: &[usize], base_dir: &Path) -> Result<Vec<StudyLevel>> {
    if refinements.len() < 2 {
        return Err(Error::InvalidArgument("a convergence study needs at least two levels".into()));
    }
    let mut levels: Vec<StudyLevel> = Vec::with_capacity(refinements.len());
    for &refinement in refinements {
        let p = Parameters { fluid_refinement: refinement, ..parameters.clone() };
        let sim = Simulation::from_parameters(&p, base_dir)?;
        let (report, state) = sim.run(false)?;
        let errors = match report.errors {
            Some(e) => e,
            None => sim.error_norms(&state.xi.fluid)?,
        };
        let rates = levels.last().map(|prev| {
            let apart = refinement.abs_diff(prev.refinement);
            let (a, b) = (prev.errors.as_array(), errors.as_array());
            [0, 1, 2].map(|i| observed_rate(a[i], b[i], apart))
        });
        levels.push(StudyLevel { refinement, cells: report.fluid_cells, dofs: report.fluid_dofs, errors, rates, report });
    }
    Ok(levels)
}
