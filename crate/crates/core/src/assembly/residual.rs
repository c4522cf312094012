use nalgebra::Matrix2;

use super::coupling::Coupling;
use super::system::{field_gradient, field_value, CoupledSystem, PressureConstraint, FLUID_GEOMETRY};
use crate::config::Expression;
use crate::constitutive::DeformationGradient;
use crate::error::Result;
use crate::fem::{cell_map, gauss_legendre_1d, MappingConfig, ReferenceElement};
use crate::mesh::Point;
use crate::solver::SystemState;
use crate::sparse::{BlockedSparseMatrix, BlockedVector, CsrMatrix, PatternBuilder};

use super::system::AssemblyOptions;

pub(crate) fn eval2(e: &Expression, x: Point, t: f64) -> Result<[f64; 2]> {
    Ok([e.evaluate_component(0, x.x, x.y, t)?, e.evaluate_component(1, x.x, x.y, t)?])
}

impl CoupledSystem {
    /// `h` used for the change of variables: `w_{n-1}` semi-implicit, `w_n` otherwise.
    pub fn placement<'a>(&self, state: &'a SystemState, options: &AssemblyOptions) -> &'a [f64] {
        if options.semi_implicit {
            &state.previous_xi.solid
        } else {
            &state.xi.solid
        }
    }

    /// Constrained residual `G(xi_n)` of the implicit Euler step.
    pub fn assemble_residual(&self, state: &SystemState, options: &AssemblyOptions) -> Result<BlockedVector> {
        let coupling = self.coupling(self.placement(state, options))?;
        self.assemble_residual_with(state, options, &coupling)
    }

    /// As [`Self::assemble_residual`] with a precomputed coupling for `h`.
    pub fn assemble_residual_with(
        &self,
        state: &SystemState,
        options: &AssemblyOptions,
        coupling: &Coupling,
    ) -> Result<BlockedVector> {
        let mut out = self.residual_unconstrained(state, options, coupling)?;
        self.apply_constraints(None, Some(&mut out), state)?;
        Ok(out)
    }

    pub(crate) fn residual_unconstrained(
        &self,
        state: &SystemState,
        options: &AssemblyOptions,
        coupling: &Coupling,
    ) -> Result<BlockedVector> {
        let mut out = self.zero_vector();
        self.add_fluid_terms(state, &mut out)?;
        self.add_neumann_terms(state.t, &mut out)?;
        self.add_solid_terms(state, options, coupling, &mut out)?;
        Ok(out)
    }

    fn add_fluid_terms(&self, state: &SystemState, out: &mut BlockedVector) -> Result<()> {
        let c = &self.constants;
        let (rho, mu) = (c.density, c.viscosity);
        let t = &self.fluid;
        let ns = self.velocity.n_scalar();
        let nu = self.n_velocity();
        let np = self.pressure.element().n_basis();
        let (u, u_old) = (&state.xi.fluid, &state.previous_xi.fluid);
        let inv_h = 1.0 / state.h;
        let force = !c.body_force.is_zero();
        let mut local = vec![0.0; 2 * t.nb + np];
        let mut dofs = Vec::new();
        for cell in 0..self.fluid_mesh.n_cells() {
            local.fill(0.0);
            let nodes = self.velocity.cell_nodes(cell);
            let pnodes = self.pressure.cell_nodes(cell);
            for q in 0..t.n_q {
                let k = cell * t.n_q + q;
                let jxw = t.jxw[k];
                let (phi, g) = (t.shape_values(q), t.shape_grads(cell, q));
                let psi = &self.pressure_values[q * np..(q + 1) * np];
                let uq = field_value(u, ns, nodes, phi);
                let gu = field_gradient(u, ns, nodes, g);
                let p: f64 = pnodes.iter().zip(psi).map(|(&k, v)| u[nu + k] * v).sum();
                let b = if force { eval2(&c.body_force, t.points[k], state.t)? } else { [0.0; 2] };
                let acc = (uq - field_value(u_old, ns, nodes, phi)) * (rho * inv_h) + gu * uq * rho
                    - Point::new(b[0], b[1]) * rho;
                let sym = (gu + gu.transpose()) * mu;
                for comp in 0..2 {
                    for a in 0..t.nb {
                        local[comp * t.nb + a] += jxw
                            * (acc[comp] * phi[a] + sym[(comp, 0)] * g[a][0] + sym[(comp, 1)] * g[a][1]
                                - p * g[a][comp]);
                    }
                }
                let div = gu.trace();
                for (kk, v) in psi.iter().enumerate() {
                    local[2 * t.nb + kk] -= jxw * v * div;
                }
            }
            self.fluid_cell_dofs(cell, &mut dofs);
            for (&d, v) in dofs.iter().zip(&local) {
                out.fluid[d] += v;
            }
        }
        Ok(())
    }

    fn add_neumann_terms(&self, time: f64, out: &mut BlockedVector) -> Result<()> {
        let tau = &self.constants.neumann_data;
        if tau.is_zero() || self.neumann_faces.is_empty() {
            return Ok(());
        }
        let element = ReferenceElement::q2();
        let ns = self.velocity.n_scalar();
        let (pts, wts) = gauss_legendre_1d(3);
        let cfg = MappingConfig::reference(FLUID_GEOMETRY);
        let mut phi = [0.0; 9];
        for &(cell, face) in &self.neumann_faces {
            let map = cell_map(&self.fluid_mesh, &cfg, cell)?;
            let nodes = self.velocity.cell_nodes(cell);
            for (&s, &wq) in pts.iter().zip(&wts) {
                let p = match face {
                    0 => [s, 0.0],
                    1 => [1.0, s],
                    2 => [s, 1.0],
                    _ => [0.0, s],
                };
                let ds = map.jacobian(p).column(face % 2).norm() * wq;
                let v = eval2(tau, map.point(p), time)?;
                element.fill_values(p, &mut phi);
                for comp in 0..2 {
                    for (a, &k) in nodes.iter().enumerate() {
                        out.fluid[comp * ns + k] -= ds * v[comp] * phi[a];
                    }
                }
            }
        }
        Ok(())
    }

    fn add_solid_terms(
        &self,
        state: &SystemState,
        options: &AssemblyOptions,
        coupling: &Coupling,
        out: &mut BlockedVector,
    ) -> Result<()> {
        let c = &self.constants;
        let t = &self.solid;
        let ns = self.displacement.n_scalar();
        let nsu = self.velocity.n_scalar();
        let (w, w_old, u) = (&state.xi.solid, &state.previous_xi.solid, &state.xi.fluid);
        let spread = match options.use_spread_operator {
            true => Some(self.spread_coefficients(w)?),
            false => None,
        };
        let force = !c.body_force.is_zero();
        for cell in 0..self.solid_mesh.n_cells() {
            let nodes = self.displacement.cell_nodes(cell);
            for q in 0..t.n_q {
                let k = cell * t.n_q + q;
                let jxw = t.jxw[k];
                let (phi, g) = (t.shape_values(q), t.shape_grads(cell, q));
                let vnodes = self.velocity.cell_nodes(coupling.fluid_cell[k]);
                let (fphi, fg) = (coupling.shape_values(k), coupling.shape_grads(k));
                let f = DeformationGradient::from_displacement_gradient(field_gradient(w, ns, nodes, g));

                if let Some(z) = &spread {
                    let zq = field_value(z, ns, nodes, phi);
                    for comp in 0..2 {
                        for (&kv, v) in vnodes.iter().zip(fphi) {
                            out.fluid[comp * nsu + kv] += jxw * zq[comp] * v;
                        }
                    }
                } else {
                    let pf = self.model.elastic_pk1(&f, t.points[k])? * coupling.grad_map[k].transpose();
                    for comp in 0..2 {
                        for (b, &kv) in vnodes.iter().enumerate() {
                            out.fluid[comp * nsu + kv] += jxw * (pf[(comp, 0)] * fg[b][0] + pf[(comp, 1)] * fg[b][1]);
                        }
                    }
                }

                if force {
                    let coef = c.solid_reference_density - c.density * f.j();
                    let bq = eval2(&c.body_force, coupling.points[k], state.t)?;
                    for comp in 0..2 {
                        for (b, &kv) in vnodes.iter().enumerate() {
                            out.fluid[comp * nsu + kv] -= jxw * coef * bq[comp] * fphi[b];
                        }
                    }
                }

                let wdot = (field_value(w, ns, nodes, phi) - field_value(w_old, ns, nodes, phi)) / state.h;
                let uq = field_value(u, nsu, vnodes, fphi);
                for comp in 0..2 {
                    for (a, &kw) in nodes.iter().enumerate() {
                        out.solid[comp * ns + kw] += c.phi_b * jxw * (wdot[comp] - uq[comp]) * phi[a];
                    }
                }
            }
        }
        Ok(())
    }

    /// `A_gamma(w)_i = int_B P[w] : grad_s y_i`.
    pub fn elastic_functional(&self, w: &[f64]) -> Result<Vec<f64>> {
        let t = &self.solid;
        let ns = self.displacement.n_scalar();
        let mut out = vec![0.0; self.n_solid()];
        for cell in 0..self.solid_mesh.n_cells() {
            let nodes = self.displacement.cell_nodes(cell);
            for q in 0..t.n_q {
                let k = cell * t.n_q + q;
                let g = t.shape_grads(cell, q);
                let f = DeformationGradient::from_displacement_gradient(field_gradient(w, ns, nodes, g));
                let p = self.model.elastic_pk1(&f, t.points[k])?;
                for comp in 0..2 {
                    for (a, &kw) in nodes.iter().enumerate() {
                        out[comp * ns + kw] += t.jxw[k] * (p[(comp, 0)] * g[a][0] + p[(comp, 1)] * g[a][1]);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `z = M^{-1} A_gamma(w)`, componentwise with the scalar solid mass matrix.
    pub fn spread_coefficients(&self, w: &[f64]) -> Result<Vec<f64>> {
        let a = self.elastic_functional(w)?;
        let ns = self.displacement.n_scalar();
        let mut z = self.solid_mass_lu.solve(&a[..ns])?;
        z.extend(self.solid_mass_lu.solve(&a[ns..])?);
        Ok(z)
    }

    /// Elastic force on the fluid through the solid mass projection,
    /// `M_gamma1(h)^T M^{-1} A_gamma(w)`, as a fluid-block vector.
    pub fn assemble_spread_elastic_force(&self, w: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        let coupling = self.coupling(h)?;
        let z = self.spread_coefficients(w)?;
        let t = &self.solid;
        let ns = self.displacement.n_scalar();
        let nsu = self.velocity.n_scalar();
        let mut out = vec![0.0; self.n_fluid()];
        for cell in 0..self.solid_mesh.n_cells() {
            let nodes = self.displacement.cell_nodes(cell);
            for q in 0..t.n_q {
                let k = cell * t.n_q + q;
                let zq = field_value(&z, ns, nodes, t.shape_values(q));
                let vnodes = self.velocity.cell_nodes(coupling.fluid_cell[k]);
                for comp in 0..2 {
                    for (&kv, v) in vnodes.iter().zip(coupling.shape_values(k)) {
                        out[comp * nsu + kv] += t.jxw[k] * zq[comp] * v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Elastic force on the fluid, `int_B P[w] F[h]^T : grad_x v(s + h)`.
    pub fn assemble_direct_elastic_force(&self, w: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        let coupling = self.coupling(h)?;
        let t = &self.solid;
        let ns = self.displacement.n_scalar();
        let nsu = self.velocity.n_scalar();
        let mut out = vec![0.0; self.n_fluid()];
        for cell in 0..self.solid_mesh.n_cells() {
            let nodes = self.displacement.cell_nodes(cell);
            for q in 0..t.n_q {
                let k = cell * t.n_q + q;
                let g = t.shape_grads(cell, q);
                let f = DeformationGradient::from_displacement_gradient(field_gradient(w, ns, nodes, g));
                let pf: Matrix2<f64> = self.model.elastic_pk1(&f, t.points[k])? * coupling.grad_map[k].transpose();
                let vnodes = self.velocity.cell_nodes(coupling.fluid_cell[k]);
                for comp in 0..2 {
                    for (&kv, gv) in vnodes.iter().zip(coupling.shape_grads(k)) {
                        out[comp * nsu + kv] += t.jxw[k] * (pf[(comp, 0)] * gv[0] + pf[(comp, 1)] * gv[1]);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `M_gamma1(h)`: rows solid dofs, columns velocity dofs, `int_B v_j(s + h) . y_i`.
    pub fn coupling_matrix(&self, coupling: &Coupling) -> CsrMatrix {
        let t = &self.solid;
        let ns = self.displacement.n_scalar();
        let nsu = self.velocity.n_scalar();
        let mut pattern = PatternBuilder::new(self.n_solid(), self.n_velocity());
        let mut sd = Vec::new();
        let mut fd = Vec::new();
        for &(s, f) in &coupling.pairs {
            self.displacement.fill_cell_dofs(s, &mut sd);
            self.velocity.fill_cell_dofs(f, &mut fd);
            pattern.insert_block(&sd, &fd);
        }
        let mut m = pattern.build();
        for cell in 0..self.solid_mesh.n_cells() {
            let nodes = self.displacement.cell_nodes(cell);
            for q in 0..t.n_q {
                let k = cell * t.n_q + q;
                let vnodes = self.velocity.cell_nodes(coupling.fluid_cell[k]);
                for (&kw, y) in nodes.iter().zip(t.shape_values(q)) {
                    for (&kv, v) in vnodes.iter().zip(coupling.shape_values(k)) {
                        for comp in 0..2 {
                            m.add(comp * ns + kw, comp * nsu + kv, t.jxw[k] * y * v)
                                .expect("coupled cells are in the pattern");
                        }
                    }
                }
            }
        }
        m
    }

    /// Replaces Dirichlet velocity rows and the pinned pressure row by
    /// identity rows, with residual `xi_i - g_i`.
    pub fn apply_constraints(
        &self,
        matrix: Option<&mut BlockedSparseMatrix>,
        residual: Option<&mut BlockedVector>,
        state: &SystemState,
    ) -> Result<()> {
        let pin = self.pinned_pressure_dof();
        if let Some(m) = matrix {
            for d in &self.dirichlet {
                m.set_identity_row(d.dof)?;
            }
            if let Some(p) = pin {
                m.set_identity_row(p)?;
            }
        }
        if let Some(r) = residual {
            for d in &self.dirichlet {
                r.fluid[d.dof] = state.xi.fluid[d.dof] - self.dirichlet_value(d, state.t)?;
            }
            if let Some(p) = pin {
                r.fluid[p] = match self.pressure_constraint {
                    PressureConstraint::FixOneDof => state.xi.fluid[p],
                    _ => state.xi.fluid[p] - state.previous_xi.fluid[p],
                };
            }
        }
        Ok(())
    }
}
