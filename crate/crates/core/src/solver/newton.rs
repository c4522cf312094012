use log::debug;

use super::linear::{Factorization, LinearSolver};
use super::state::SystemState;
use crate::assembly::{AssemblyOptions, CoupledSystem, Coupling, PressureConstraint};
use crate::config::Parameters;
use crate::error::{Error, Result};

/// Residual reduction below which a reused Jacobian counts as adequate.
const STALL_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Target for `|G|_inf`.
    pub abs_tol: f64,
    /// Maximum number of Newton corrections per step.
    pub max_iterations: usize,
    /// Refactorize at the first iteration of every step.
    pub force_jacobian_each_step: bool,
    /// Refactorize at every iteration.
    pub update_jacobian_every_iteration: bool,
    pub semi_implicit: bool,
    pub use_spread_operator: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_iterations: 25,
            force_jacobian_each_step: true,
            update_jacobian_every_iteration: false,
            semi_implicit: true,
            use_spread_operator: false,
        }
    }
}

impl NewtonOptions {
    pub fn from_parameters(p: &Parameters) -> Self {
        Self {
            abs_tol: p.newton_tolerance,
            max_iterations: p.max_newton_iterations,
            force_jacobian_each_step: p.force_jacobian_each_step,
            update_jacobian_every_iteration: p.update_jacobian_every_iteration,
            semi_implicit: p.semi_implicit,
            use_spread_operator: p.use_spread_operator,
        }
    }

    pub fn assembly(&self) -> AssemblyOptions {
        AssemblyOptions { semi_implicit: self.semi_implicit, use_spread_operator: self.use_spread_operator }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("Newton tolerance must be positive, got {}", self.abs_tol)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("at least one Newton iteration is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    /// Residual evaluations, including the initial one.
    pub iterations: usize,
    pub residual: f64,
    /// Residual norm after each evaluation.
    pub history: Vec<f64>,
    pub factorizations: usize,
}

/// Newton driver for one coupled system; keeps the factorized Jacobian
/// between iterations and steps according to the update policy.
pub struct TimeStepper<'a> {
    system: &'a CoupledSystem,
    options: NewtonOptions,
    linear: LinearSolver,
    factorization: Option<Factorization>,
}

impl<'a> TimeStepper<'a> {
    pub fn new(system: &'a CoupledSystem, options: NewtonOptions) -> Result<Self> {
        options.validate()?;
        Ok(Self { system, options, linear: LinearSolver::new(), factorization: None })
    }

    pub fn options(&self) -> &NewtonOptions {
        &self.options
    }

    fn coupling(&self, state: &SystemState) -> Result<Coupling> {
        self.system.coupling(self.system.placement(state, &self.options.assembly()))
    }

    fn refactor(&mut self, state: &SystemState, coupling: &Coupling) -> Result<()> {
        let jac = self.system.assemble_jacobian_with(state, 1.0 / state.h, coupling)?;
        self.factorization = Some(self.linear.factorize(&jac)?);
        Ok(())
    }

    /// Solves `G(xi_n) = 0` starting from the current `state.xi`.
    pub fn newton_solve(&mut self, state: &mut SystemState) -> Result<NewtonReport> {
        let opts = self.options;
        let aopts = opts.assembly();
        let mut coupling = self.coupling(state)?;
        let mut g = self.system.assemble_residual_with(state, &aopts, &coupling)?;
        let mut norm = g.norm_inf();
        let mut history = vec![norm];
        let mut factorizations = 0;
        let mut refresh = self.factorization.is_none() || opts.force_jacobian_each_step;
        let mut corrections = 0;
        loop {
            debug!("step {} iteration {}: |G| = {norm:e}", state.step_index, history.len());
            if norm <= opts.abs_tol {
                return Ok(NewtonReport { iterations: history.len(), residual: norm, history, factorizations });
            }
            if corrections == opts.max_iterations || !norm.is_finite() {
                return Err(Error::NoConvergence { iterations: corrections, residual: norm });
            }
            let fresh = refresh || opts.update_jacobian_every_iteration;
            if fresh {
                self.refactor(state, &coupling)?;
                factorizations += 1;
            }
            let fact = self.factorization.as_ref().expect("factorized above");
            let dx = fact.solve(&g.to_global())?;
            for (i, d) in dx.iter().enumerate() {
                *state.xi.get_mut(i) -= d;
            }
            corrections += 1;
            if !opts.semi_implicit {
                coupling = self.coupling(state)?;
            }
            g = self.system.assemble_residual_with(state, &aopts, &coupling)?;
            let next = g.norm_inf();
            history.push(next);
            // a stale Jacobian that no longer contracts is rebuilt
            refresh = !fresh && next > STALL_RATIO * norm;
            norm = next;
        }
    }

    /// One implicit Euler step: `xi_{n-1} <- xi_n`, `t <- t + h`, Newton solve.
    pub fn advance(&mut self, state: &mut SystemState) -> Result<NewtonReport> {
        state.previous_xi.clone_from(&state.xi);
        state.t += state.h;
        state.step_index += 1;
        let report = self.newton_solve(state)?;
        if self.system.pressure_constraint() == PressureConstraint::MeanZero {
            self.system.normalize_pressure(&mut state.xi.fluid);
        }
        Ok(report)
    }
}

/// One Newton solve with a fresh factorization cache.
pub fn newton_solve(system: &CoupledSystem, state: &mut SystemState, options: NewtonOptions) -> Result<NewtonReport> {
    TimeStepper::new(system, options)?.newton_solve(state)
}

/// One implicit Euler step with a fresh factorization cache.
pub fn advance(system: &CoupledSystem, state: &mut SystemState, options: NewtonOptions) -> Result<NewtonReport> {
    TimeStepper::new(system, options)?.advance(state)
}
