use nalgebra::{Matrix2, Vector2};

use crate::assembly::{CoupledSystem, FLUID_GEOMETRY};
use crate::error::{Error, Result};
use crate::fem::{cell_map, gauss_rule, MappingConfig};
use crate::mesh::Point;

/// `|u_h - u|_0`, `|u_h - u|_1` (full norm) and `|p_h - p|_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2_u: f64,
    pub h1_u: f64,
    pub l2_p: f64,
}

impl ErrorNorms {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l2_u, self.h1_u, self.l2_p]
    }
}

/// Cellwise Gauss quadrature (four points per direction) of the velocity and
/// pressure errors. The discrete pressure is shifted to zero mean first.
pub fn compute_error_norms(
    system: &CoupledSystem,
    fluid: &[f64],
    exact_velocity: impl Fn(Point) -> (Vector2<f64>, Matrix2<f64>),
    exact_pressure: impl Fn(Point) -> f64,
) -> Result<ErrorNorms> {
    let mesh = system.fluid_mesh();
    let vel = system.velocity_dofs();
    let pre = system.pressure_dofs();
    let ns = vel.n_scalar();
    let nu = system.n_velocity();
    let rule = gauss_rule(vel.element().degree() + 2)?;
    let cfg = MappingConfig::reference(FLUID_GEOMETRY);
    let mean = system.pressure_mean(fluid);
    let (ve, pe) = (vel.element(), pre.element());
    let mut phi = vec![0.0; ve.n_basis()];
    let mut grad = vec![[0.0; 2]; ve.n_basis()];
    let mut psi = vec![0.0; pe.n_basis()];
    let (mut l2u, mut h1u, mut l2p) = (0.0, 0.0, 0.0);
    for cell in 0..mesh.n_cells() {
        let map = cell_map(mesh, &cfg, cell)?;
        let nodes = vel.cell_nodes(cell);
        let pnodes = pre.cell_nodes(cell);
        for (&p, &wq) in rule.points.iter().zip(&rule.weights) {
            let jac = map.jacobian(p);
            let det = jac.determinant();
            let inv_t = jac.try_inverse().unwrap_or_else(Matrix2::zeros).transpose();
            let jxw = det * wq;
            let x = map.point(p);
            ve.fill_values(p, &mut phi);
            ve.fill_gradients(p, &mut grad);
            pe.fill_values(p, &mut psi);
            let mut u = Vector2::zeros();
            let mut gu = Matrix2::zeros();
            for (a, &k) in nodes.iter().enumerate() {
                let g = inv_t * Vector2::new(grad[a][0], grad[a][1]);
                for c in 0..2 {
                    let v = fluid[c * ns + k];
                    u[c] += v * phi[a];
                    gu[(c, 0)] += v * g[0];
                    gu[(c, 1)] += v * g[1];
                }
            }
            let ph: f64 = pnodes.iter().zip(&psi).map(|(&k, s)| fluid[nu + k] * s).sum::<f64>() - mean;
            let (ue, ge) = exact_velocity(x);
            let du = (u - ue).norm_squared();
            l2u += du * jxw;
            h1u += (du + (gu - ge).norm_squared()) * jxw;
            l2p += (ph - exact_pressure(x)).powi(2) * jxw;
        }
    }
    Ok(ErrorNorms { l2_u: l2u.sqrt(), h1_u: h1u.sqrt(), l2_p: l2p.sqrt() })
}

/// Area-weighted mean of the zero-mean discrete pressure over the part of
/// the fluid domain where `inside` holds, sampled at the Gauss points.
pub fn pressure_region_mean(system: &CoupledSystem, fluid: &[f64], inside: impl Fn(Point) -> bool) -> Result<f64> {
    let mesh = system.fluid_mesh();
    let pre = system.pressure_dofs();
    let nu = system.n_velocity();
    let rule = gauss_rule(4)?;
    let cfg = MappingConfig::reference(FLUID_GEOMETRY);
    let mean = system.pressure_mean(fluid);
    let pe = pre.element();
    let mut psi = vec![0.0; pe.n_basis()];
    let (mut integral, mut area) = (0.0, 0.0);
    for cell in 0..mesh.n_cells() {
        let map = cell_map(mesh, &cfg, cell)?;
        let pnodes = pre.cell_nodes(cell);
        for (&p, &wq) in rule.points.iter().zip(&rule.weights) {
            if !inside(map.point(p)) {
                continue;
            }
            let jxw = map.jacobian(p).determinant() * wq;
            pe.fill_values(p, &mut psi);
            let ph: f64 = pnodes.iter().zip(&psi).map(|(&k, s)| fluid[nu + k] * s).sum();
            integral += (ph - mean) * jxw;
            area += jxw;
        }
    }
    if area == 0.0 {
        return Err(Error::InvalidArgument("pressure region contains no quadrature point".into()));
    }
    Ok(integral / area)
}

/// `log2(e_coarse / e_fine)` per halving of the mesh size; zero for
/// identical levels.
pub fn observed_rate(coarse: f64, fine: f64, levels_apart: usize) -> f64 {
    if levels_apart == 0 || coarse == fine {
        return 0.0;
    }
    (coarse / fine).log2() / levels_apart as f64
}
