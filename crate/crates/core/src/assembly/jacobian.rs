use nalgebra::Matrix2;

use super::coupling::Coupling;
use super::residual::eval2;
use super::system::{field_gradient, field_value, AssemblyOptions, CoupledSystem};
use crate::constitutive::DeformationGradient;
use crate::error::Result;
use crate::solver::SystemState;
use crate::sparse::{BlockedSparseMatrix, PatternBuilder};

impl CoupledSystem {
    /// Block pattern for the configuration displaced by `h`.
    pub fn build_sparsity(&self, h: &[f64]) -> Result<BlockedSparseMatrix> {
        Ok(self.sparsity_for(&self.coupling(h)?))
    }

    /// Cell couplings of both meshes plus every fluid dof of each located
    /// fluid cell against every dof of the straddling solid cell.
    pub fn sparsity_for(&self, coupling: &Coupling) -> BlockedSparseMatrix {
        let nf = self.n_fluid();
        let n = nf + self.n_solid();
        let mut p = PatternBuilder::new(n, n);
        let mut fd = Vec::new();
        let mut sd = Vec::new();
        for cell in 0..self.fluid_mesh.n_cells() {
            self.fluid_cell_dofs(cell, &mut fd);
            p.insert_block(&fd, &fd);
        }
        let solid_dofs = |cell: usize, out: &mut Vec<usize>| {
            self.displacement.fill_cell_dofs(cell, out);
            out.iter_mut().for_each(|d| *d += nf);
        };
        for cell in 0..self.solid_mesh.n_cells() {
            solid_dofs(cell, &mut sd);
            p.insert_block(&sd, &sd);
        }
        for &(s, f) in &coupling.pairs {
            solid_dofs(s, &mut sd);
            self.fluid_cell_dofs(f, &mut fd);
            p.insert_block(&fd, &sd);
            p.insert_block(&sd, &fd);
        }
        BlockedSparseMatrix::from_global_pattern(nf, self.n_solid(), &p)
    }

    fn zeroed_pattern(&self, coupling: &Coupling) -> BlockedSparseMatrix {
        let mut cache = self.pattern_cache.lock().unwrap_or_else(|e| e.into_inner());
        match &*cache {
            Some((pairs, m)) if *pairs == coupling.pairs => {
                let mut m = m.clone();
                m.clear_values();
                m
            }
            _ => {
                let m = self.sparsity_for(coupling);
                *cache = Some((coupling.pairs.clone(), m.clone()));
                m
            }
        }
    }

    /// Constrained Jacobian `dG/dxi + alpha dG/dxi'` of the direct-form residual,
    /// with the dependence on the placement `h` left out.
    pub fn assemble_jacobian(&self, state: &SystemState, options: &AssemblyOptions, alpha: f64) -> Result<BlockedSparseMatrix> {
        let coupling = self.coupling(self.placement(state, options))?;
        self.assemble_jacobian_with(state, alpha, &coupling)
    }

    pub fn assemble_jacobian_with(&self, state: &SystemState, alpha: f64, coupling: &Coupling) -> Result<BlockedSparseMatrix> {
        let mut m = self.zeroed_pattern(coupling);
        self.add_fluid_jacobian(state, alpha, &mut m)?;
        self.add_solid_jacobian(state, alpha, coupling, &mut m)?;
        self.apply_constraints(Some(&mut m), None, state)?;
        Ok(m)
    }

    fn add_fluid_jacobian(&self, state: &SystemState, alpha: f64, m: &mut BlockedSparseMatrix) -> Result<()> {
        let (rho, mu) = (self.constants.density, self.constants.viscosity);
        let t = &self.fluid;
        let nb = t.nb;
        let ns = self.velocity.n_scalar();
        let np = self.pressure.element().n_basis();
        let nl = 2 * nb + np;
        let u = &state.xi.fluid;
        let mut local = vec![0.0; nl * nl];
        let mut dofs = Vec::new();
        for cell in 0..self.fluid_mesh.n_cells() {
            local.fill(0.0);
            let nodes = self.velocity.cell_nodes(cell);
            for q in 0..t.n_q {
                let jxw = t.jxw[cell * t.n_q + q];
                let (phi, g) = (t.shape_values(q), t.shape_grads(cell, q));
                let psi = &self.pressure_values[q * np..(q + 1) * np];
                let uq = field_value(u, ns, nodes, phi);
                let gu = field_gradient(u, ns, nodes, g);
                for c in 0..2 {
                    for a in 0..nb {
                        let i = c * nb + a;
                        for e in 0..2 {
                            for b in 0..nb {
                                let mut v = rho * gu[(c, e)] * phi[b] * phi[a] + mu * g[b][c] * g[a][e];
                                if c == e {
                                    v += rho * alpha * phi[a] * phi[b]
                                        + rho * (g[b][0] * uq.x + g[b][1] * uq.y) * phi[a]
                                        + mu * (g[b][0] * g[a][0] + g[b][1] * g[a][1]);
                                }
                                local[i * nl + e * nb + b] += jxw * v;
                            }
                        }
                        for (k, s) in psi.iter().enumerate() {
                            let v = -jxw * s * g[a][c];
                            local[i * nl + 2 * nb + k] += v;
                            local[(2 * nb + k) * nl + i] += v;
                        }
                    }
                }
            }
            self.fluid_cell_dofs(cell, &mut dofs);
            for (i, &r) in dofs.iter().enumerate() {
                for (j, &c) in dofs.iter().enumerate() {
                    m.add(r, c, local[i * nl + j])?;
                }
            }
        }
        Ok(())
    }

    fn add_solid_jacobian(
        &self,
        state: &SystemState,
        alpha: f64,
        coupling: &Coupling,
        m: &mut BlockedSparseMatrix,
    ) -> Result<()> {
        let c = &self.constants;
        let t = &self.solid;
        let nb = t.nb;
        let nl = 2 * nb;
        let nf = self.n_fluid();
        let ns = self.displacement.n_scalar();
        let w = &state.xi.solid;
        let force = !c.body_force.is_zero();
        let mut ww = vec![0.0; nl * nl];
        // per fluid cell: (cell, d(fluid rows)/dw, d(solid rows)/du)
        let mut groups: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
        let mut sd = Vec::new();
        let mut fd = Vec::new();
        for cell in 0..self.solid_mesh.n_cells() {
            ww.fill(0.0);
            groups.clear();
            let nodes = self.displacement.cell_nodes(cell);
            for q in 0..t.n_q {
                let k = cell * t.n_q + q;
                let jxw = t.jxw[k];
                let (phi, g) = (t.shape_values(q), t.shape_grads(cell, q));
                let fc = coupling.fluid_cell[k];
                let gi = match groups.iter().position(|grp| grp.0 == fc) {
                    Some(i) => i,
                    None => {
                        groups.push((fc, vec![0.0; nl * nl], vec![0.0; nl * nl]));
                        groups.len() - 1
                    }
                };
                let (_, uw, wu) = &mut groups[gi];
                let (fphi, fg) = (coupling.shape_values(k), coupling.shape_grads(k));

                for comp in 0..2 {
                    for a in 0..nb {
                        for b in 0..nb {
                            ww[(comp * nb + a) * nl + comp * nb + b] += alpha * c.phi_b * jxw * phi[a] * phi[b];
                            wu[(comp * nb + a) * nl + comp * nb + b] -= c.phi_b * jxw * phi[a] * fphi[b];
                        }
                    }
                }

                let f = DeformationGradient::from_displacement_gradient(field_gradient(w, ns, nodes, g));
                let fh_t = coupling.grad_map[k].transpose();
                let s = t.points[k];
                let body = match force {
                    true => Some((eval2(&c.body_force, coupling.points[k], state.t)?, f.inverse_transpose()?)),
                    false => None,
                };
                for e in 0..2 {
                    for a in 0..nb {
                        let mut h = Matrix2::zeros();
                        h[(e, 0)] = g[a][0];
                        h[(e, 1)] = g[a][1];
                        let tt = self.model.elastic_tangent(&f, s, &h)? * fh_t;
                        let j = e * nb + a;
                        for comp in 0..2 {
                            for b in 0..nb {
                                uw[(comp * nb + b) * nl + j] +=
                                    jxw * (tt[(comp, 0)] * fg[b][0] + tt[(comp, 1)] * fg[b][1]);
                            }
                        }
                        if let Some((bq, fit)) = &body {
                            // dJ = J tr(F^{-1} H) = J (F^{-T} : H)
                            let dj = f.j() * (fit[(e, 0)] * g[a][0] + fit[(e, 1)] * g[a][1]);
                            for comp in 0..2 {
                                for b in 0..nb {
                                    uw[(comp * nb + b) * nl + j] += jxw * c.density * dj * bq[comp] * fphi[b];
                                }
                            }
                        }
                    }
                }
            }
            self.displacement.fill_cell_dofs(cell, &mut sd);
            sd.iter_mut().for_each(|d| *d += nf);
            for (i, &r) in sd.iter().enumerate() {
                for (j, &col) in sd.iter().enumerate() {
                    m.add(r, col, ww[i * nl + j])?;
                }
            }
            for (fc, uw, wu) in &groups {
                self.velocity.fill_cell_dofs(*fc, &mut fd);
                for (i, &r) in fd.iter().enumerate() {
                    for (j, &col) in sd.iter().enumerate() {
                        m.add(r, col, uw[i * nl + j])?;
                        m.add(col, r, wu[j * nl + i])?;
                    }
                }
            }
        }
        Ok(())
    }
}
