use nalgebra::Matrix2;

use super::system::{apply, field_gradient, field_value, inverse_transpose, CoupledSystem};
use crate::error::{Error, Result};
use crate::fem::{cell_map, MappingConfig, ReferenceElement};
use crate::locate::PointLocator;
use crate::mesh::Point;

use super::system::FLUID_GEOMETRY;

/// Fluid-side data at the solid quadrature points displaced by `h`.
///
/// Indices are flat over solid quadrature points, `cell * n_q + q`.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub(crate) nb: usize,
    /// Owning fluid cell of `s + h(s)`.
    pub(crate) fluid_cell: Vec<usize>,
    /// `s + h(s)`.
    pub(crate) points: Vec<Point>,
    /// `F[h] = I + grad_s h`.
    pub(crate) grad_map: Vec<Matrix2<f64>>,
    /// Fluid velocity shape values, `k * nb + b`.
    pub(crate) values: Vec<f64>,
    /// Fluid velocity shape gradients with respect to `x`.
    pub(crate) grads: Vec<[f64; 2]>,
    /// Distinct `(solid cell, fluid cell)` pairs, sorted.
    pub(crate) pairs: Vec<(usize, usize)>,
}

impl Coupling {
    pub fn n_points(&self) -> usize {
        self.fluid_cell.len()
    }

    /// Sorted `(solid cell, fluid cell)` pairs that share a quadrature point.
    pub fn cell_pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn fluid_cell(&self, k: usize) -> usize {
        self.fluid_cell[k]
    }

    pub fn point(&self, k: usize) -> Point {
        self.points[k]
    }

    pub(crate) fn shape_values(&self, k: usize) -> &[f64] {
        &self.values[k * self.nb..(k + 1) * self.nb]
    }

    pub(crate) fn shape_grads(&self, k: usize) -> &[[f64; 2]] {
        &self.grads[k * self.nb..(k + 1) * self.nb]
    }
}

impl CoupledSystem {
    /// Locates every solid quadrature point at `s + h(s)` in the fluid mesh.
    pub fn coupling(&self, h: &[f64]) -> Result<Coupling> {
        if h.len() != self.n_solid() {
            return Err(Error::InvalidArgument(format!(
                "displacement has {} entries, expected {}",
                h.len(),
                self.n_solid()
            )));
        }
        let t = &self.solid;
        let ns = self.displacement.n_scalar();
        let element = ReferenceElement::q2();
        let nb = element.n_basis();
        let n = self.solid_mesh.n_cells() * t.n_q;
        let locator = PointLocator::new(&self.fluid_mesh);
        let fluid_cfg = MappingConfig::reference(FLUID_GEOMETRY);
        let mut out = Coupling {
            nb,
            fluid_cell: Vec::with_capacity(n),
            points: Vec::with_capacity(n),
            grad_map: Vec::with_capacity(n),
            values: Vec::with_capacity(n * nb),
            grads: Vec::with_capacity(n * nb),
            pairs: Vec::new(),
        };
        let mut hint = None;
        let mut ref_grads = vec![[0.0; 2]; nb];
        for cell in 0..self.solid_mesh.n_cells() {
            let nodes = self.displacement.cell_nodes(cell);
            for q in 0..t.n_q {
                let k = cell * t.n_q + q;
                let x = t.points[k] + field_value(h, ns, nodes, t.shape_values(q));
                let (fc, p) = locator
                    .locate(x, hint)?
                    .ok_or(Error::PointOutsideDomain { index: k, x: x.x, y: x.y })?;
                hint = Some(fc);
                let jac = cell_map(&self.fluid_mesh, &fluid_cfg, fc)?.jacobian(p);
                let det = jac.determinant();
                if det <= 0.0 {
                    return Err(Error::DegenerateMapping { cell: fc, det });
                }
                let inv_t = inverse_transpose(&jac, det);
                let start = out.values.len();
                out.values.resize(start + nb, 0.0);
                element.fill_values(p, &mut out.values[start..]);
                element.fill_gradients(p, &mut ref_grads);
                out.grads.extend(ref_grads.iter().map(|g| apply(&inv_t, *g)));
                out.grad_map.push(Matrix2::identity() + field_gradient(h, ns, nodes, t.shape_grads(cell, q)));
                out.fluid_cell.push(fc);
                out.points.push(x);
                if out.pairs.last() != Some(&(cell, fc)) {
                    out.pairs.push((cell, fc));
                }
            }
        }
        out.pairs.sort_unstable();
        out.pairs.dedup();
        Ok(out)
    }
}
