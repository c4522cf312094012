use std::collections::HashMap;

use super::element::ReferenceElement;
use super::mapping::{reference_point, GeometryOrder};
use crate::mesh::{Mesh, Point};

/// Global numbering of a (possibly vector-valued) finite element field.
///
/// Vector fields are stacked scalar fields: global dof of component `c` at
/// scalar node `k` is `c * n_scalar + k`. Local dofs on a cell follow the same
/// pattern, `c * n_basis + i`.
#[derive(Debug, Clone)]
pub struct DofHandler {
    element: ReferenceElement,
    components: usize,
    n_cells: usize,
    n_scalar: usize,
    cell_nodes: Vec<usize>,
}

/// Which cell entity a Lagrange node sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Entity {
    Vertex(usize),
    Edge(usize, usize, usize),
    Interior(usize, usize),
}

fn node_entity(mesh: &Mesh, degree: usize, cell: usize, i: usize, j: usize) -> Entity {
    let v = mesh.cells()[cell];
    let r = degree;
    let edge = |f: usize, t: usize| {
        let (a, b) = (v[f], v[(f + 1) % 4]);
        // position along the edge measured from the lower vertex id
        let t = if a < b { t } else { r - t };
        Entity::Edge(a.min(b), a.max(b), t)
    };
    match (i, j) {
        (0, 0) => Entity::Vertex(v[0]),
        (i, 0) if i == r => Entity::Vertex(v[1]),
        (i, j) if i == r && j == r => Entity::Vertex(v[2]),
        (0, j) if j == r => Entity::Vertex(v[3]),
        (i, 0) => edge(0, i),
        (i, j) if i == r => edge(1, j),
        (i, j) if j == r => edge(2, r - i),
        (0, j) => edge(3, r - j),
        (i, j) => Entity::Interior(cell, j * (r + 1) + i),
    }
}

impl DofHandler {
    pub fn new(mesh: &Mesh, element: ReferenceElement, components: usize) -> Self {
        let nb = element.n_basis();
        let mut cell_nodes = Vec::with_capacity(mesh.n_cells() * nb);
        let n_scalar;
        if element.is_continuous() {
            let r = element.degree();
            let mut ids: HashMap<Entity, usize> = HashMap::new();
            for c in 0..mesh.n_cells() {
                for j in 0..=r {
                    for i in 0..=r {
                        let next = ids.len();
                        cell_nodes.push(*ids.entry(node_entity(mesh, r, c, i, j)).or_insert(next));
                    }
                }
            }
            n_scalar = ids.len();
        } else {
            cell_nodes.extend(0..mesh.n_cells() * nb);
            n_scalar = mesh.n_cells() * nb;
        }
        DofHandler { element, components, n_cells: mesh.n_cells(), n_scalar, cell_nodes }
    }

    pub fn element(&self) -> ReferenceElement {
        self.element
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_scalar(&self) -> usize {
        self.n_scalar
    }

    pub fn n_dofs(&self) -> usize {
        self.components * self.n_scalar
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.components * self.element.n_basis()
    }

    /// Scalar node index of each local basis function on `cell`.
    pub fn cell_nodes(&self, cell: usize) -> &[usize] {
        let nb = self.element.n_basis();
        &self.cell_nodes[cell * nb..(cell + 1) * nb]
    }

    pub fn cell_dofs(&self, cell: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dofs_per_cell());
        self.fill_cell_dofs(cell, &mut out);
        out
    }

    pub fn fill_cell_dofs(&self, cell: usize, out: &mut Vec<usize>) {
        out.clear();
        for c in 0..self.components {
            out.extend(self.cell_nodes(cell).iter().map(|&k| c * self.n_scalar + k));
        }
    }

    /// Physical location of every scalar Lagrange node.
    pub fn support_points(&self, mesh: &Mesh, geometry: GeometryOrder) -> Vec<Point> {
        assert!(self.element.is_continuous(), "support points need a nodal element");
        let mut out = vec![Point::zeros(); self.n_scalar];
        let nodes = self.element.nodes();
        for cell in 0..self.n_cells {
            for (i, &k) in self.cell_nodes(cell).iter().enumerate() {
                out[k] = reference_point(mesh, geometry, cell, nodes[i]);
            }
        }
        out
    }

    /// Scalar nodes lying on boundary faces with the given marker, ascending.
    pub fn boundary_nodes(&self, mesh: &Mesh, marker: u32) -> Vec<usize> {
        assert!(self.element.is_continuous(), "boundary nodes need a nodal element");
        let r = self.element.degree();
        let mut out = Vec::new();
        for bf in mesh.boundary_faces().iter().filter(|b| b.marker == marker) {
            let nodes = self.cell_nodes(bf.cell);
            for t in 0..=r {
                let (i, j) = match bf.face {
                    0 => (t, 0),
                    1 => (r, t),
                    2 => (t, r),
                    _ => (0, t),
                };
                out.push(nodes[j * (r + 1) + i]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Nodal interpolant of `f`; `f` returns one value per component.
    pub fn interpolate(
        &self,
        mesh: &Mesh,
        geometry: GeometryOrder,
        mut f: impl FnMut(Point) -> Vec<f64>,
    ) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (k, p) in self.support_points(mesh, geometry).into_iter().enumerate() {
            let v = f(p);
            for c in 0..self.components {
                out[c * self.n_scalar + k] = v[c];
            }
        }
        out
    }
}

pub fn distribute_dofs(mesh: &Mesh, element: ReferenceElement, components: usize) -> DofHandler {
    DofHandler::new(mesh, element, components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::quadrature::gauss_rule;
    use crate::mesh::{generate_annulus_grid, generate_disk_grid, generate_square_grid};

    fn unit(n: usize) -> Mesh {
        generate_square_grid(Point::zeros(), 1.0, n).unwrap()
    }

    #[test]
    fn fluid_dof_counts() {
        let m = unit(16);
        let v = distribute_dofs(&m, ReferenceElement::q2(), 2);
        let dgp = distribute_dofs(&m, ReferenceElement::p1_discontinuous(), 1);
        let q1 = distribute_dofs(&m, ReferenceElement::q1(), 1);
        assert_eq!(v.n_dofs() + dgp.n_dofs(), 2946);
        assert_eq!(v.n_dofs() + q1.n_dofs(), 2467);
        assert_eq!(distribute_dofs(&unit(1), ReferenceElement::q1(), 1).n_dofs(), 4);
        let m = unit(32);
        let v = distribute_dofs(&m, ReferenceElement::q2(), 2);
        assert_eq!(v.n_dofs() + 3 * m.n_cells(), 11522);
        assert_eq!(v.n_dofs() + distribute_dofs(&m, ReferenceElement::q1(), 1).n_dofs(), 9539);
    }

    #[test]
    fn solid_dof_counts() {
        let ring = generate_annulus_grid(Point::new(0.5, 0.5), 0.25, 0.0625, 1, 29)
            .unwrap()
            .refine_globally(3);
        assert_eq!(distribute_dofs(&ring, ReferenceElement::q2(), 2).n_dofs(), 15776);
        let disk = generate_disk_grid(Point::new(0.6, 0.5), 0.2).unwrap().refine_globally(3);
        assert_eq!(distribute_dofs(&disk, ReferenceElement::q2(), 2).n_dofs(), 2626);
    }

    #[test]
    fn shared_nodes_coincide() {
        for m in [
            unit(3),
            generate_disk_grid(Point::zeros(), 1.0).unwrap(),
            generate_annulus_grid(Point::zeros(), 0.5, 0.2, 2, 5).unwrap(),
        ] {
            for e in [ReferenceElement::q1(), ReferenceElement::q2()] {
                let dh = distribute_dofs(&m, e, 1);
                let nodes = e.nodes();
                let mut pos = vec![None::<Point>; dh.n_scalar()];
                for c in 0..m.n_cells() {
                    for (i, &k) in dh.cell_nodes(c).iter().enumerate() {
                        let p = reference_point(&m, GeometryOrder::Bilinear, c, nodes[i]);
                        match pos[k] {
                            Some(q) => assert!((p - q).norm() < 1e-14),
                            None => pos[k] = Some(p),
                        }
                    }
                }
                assert!(pos.iter().all(Option::is_some));
            }
        }
    }

    #[test]
    fn linear_field_reproduced_and_continuous() {
        let m = generate_disk_grid(Point::new(0.1, -0.2), 1.0).unwrap().refine_globally(1);
        let e = ReferenceElement::q2();
        let dh = distribute_dofs(&m, e, 2);
        let field = |p: Point| vec![2.0 * p.x - p.y + 0.5, 0.25 * p.x + 3.0 * p.y];
        let coef = dh.interpolate(&m, GeometryOrder::Biquadratic, field);
        let q = gauss_rule(4).unwrap();
        for c in 0..m.n_cells() {
            let dofs = dh.cell_dofs(c);
            for p in &q.points {
                let x = reference_point(&m, GeometryOrder::Biquadratic, c, *p);
                let phi = e.values(*p);
                for comp in 0..2 {
                    let uh: f64 = (0..9).map(|i| coef[dofs[comp * 9 + i]] * phi[i]).sum();
                    assert!((uh - field(x)[comp]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn boundary_nodes_of_unit_square() {
        let m = unit(2);
        let dh = distribute_dofs(&m, ReferenceElement::q2(), 1);
        let pts = dh.support_points(&m, GeometryOrder::Bilinear);
        let b = dh.boundary_nodes(&m, 1);
        assert_eq!(b.len(), 16);
        for k in 0..dh.n_scalar() {
            let p = pts[k];
            let on = p.x.abs() < 1e-14 || p.y.abs() < 1e-14 || (p.x - 1.0).abs() < 1e-14 || (p.y - 1.0).abs() < 1e-14;
            assert_eq!(on, b.contains(&k));
        }
        assert!(dh.boundary_nodes(&m, 5).is_empty());
    }
}
