//! Reference-to-physical cell maps, including the displaced solid map
//! `x = s + w_h(s)`.

use nalgebra::Matrix2;

use super::dofs::DofHandler;
use super::element::{Family, ReferenceElement};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Polynomial degree of the undisplaced cell geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryOrder {
    /// Straight-sided cells through the four vertices.
    Bilinear,
    /// Nine-point geometry following the mesh manifold.
    Biquadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingKind {
    Reference,
    Eulerian,
}

#[derive(Debug, Clone, Copy)]
pub struct MappingConfig<'a> {
    pub kind: MappingKind,
    pub geometry: GeometryOrder,
    /// Displacement field and its numbering; required for [`MappingKind::Eulerian`].
    pub displacement: Option<(&'a DofHandler, &'a [f64])>,
}

impl<'a> MappingConfig<'a> {
    pub fn reference(geometry: GeometryOrder) -> Self {
        Self { kind: MappingKind::Reference, geometry, displacement: None }
    }

    pub fn eulerian(geometry: GeometryOrder, dofs: &'a DofHandler, w: &'a [f64]) -> Self {
        Self { kind: MappingKind::Eulerian, geometry, displacement: Some((dofs, w)) }
    }
}

/// Isoparametric cell map `x(p) = sum_i N_i(p) X_i` over a Q1 or Q2 basis.
#[derive(Debug, Clone, Copy)]
pub struct CellMap {
    element: ReferenceElement,
    points: [Point; 9],
}

impl CellMap {
    fn new(element: ReferenceElement, pts: &[Point]) -> Self {
        let mut points = [Point::zeros(); 9];
        points[..pts.len()].copy_from_slice(pts);
        Self { element, points }
    }

    /// Control points in the lexicographic order of the element nodes.
    pub fn control_points(&self) -> &[Point] {
        &self.points[..self.element.n_basis()]
    }

    pub fn point(&self, p: [f64; 2]) -> Point {
        let mut phi = [0.0; 9];
        self.element.fill_values(p, &mut phi);
        self.control_points()
            .iter()
            .zip(phi)
            .fold(Point::zeros(), |acc, (x, v)| acc + x * v)
    }

    /// `dx/dp`, columns are the reference directions.
    pub fn jacobian(&self, p: [f64; 2]) -> Matrix2<f64> {
        let mut g = [[0.0; 2]; 9];
        self.element.fill_gradients(p, &mut g);
        let mut jac = Matrix2::zeros();
        for (x, g) in self.control_points().iter().zip(g) {
            jac[(0, 0)] += x.x * g[0];
            jac[(0, 1)] += x.x * g[1];
            jac[(1, 0)] += x.y * g[0];
            jac[(1, 1)] += x.y * g[1];
        }
        jac
    }
}

fn reference_map(mesh: &Mesh, order: GeometryOrder, cell: usize) -> CellMap {
    match order {
        GeometryOrder::Bilinear => {
            let v = mesh.cell_corners(cell);
            CellMap::new(ReferenceElement::q1(), &[v[0], v[1], v[3], v[2]])
        }
        GeometryOrder::Biquadratic => CellMap::new(ReferenceElement::q2(), &mesh.q2_geometry_points(cell)),
    }
}

pub fn reference_point(mesh: &Mesh, order: GeometryOrder, cell: usize, p: [f64; 2]) -> Point {
    reference_map(mesh, order, cell).point(p)
}

pub fn cell_map(mesh: &Mesh, cfg: &MappingConfig, cell: usize) -> Result<CellMap> {
    let reference = reference_map(mesh, cfg.geometry, cell);
    if cfg.kind == MappingKind::Reference {
        return Ok(reference);
    }
    let (dh, w) = cfg.displacement.ok_or(Error::MissingDisplacement)?;
    let element = dh.element();
    if element.family() != Family::LagrangeQ || dh.components() != 2 {
        return Err(Error::InvalidArgument(
            "displacement must be a two-component Lagrange field".into(),
        ));
    }
    if w.len() != dh.n_dofs() {
        return Err(Error::InvalidArgument(format!(
            "displacement has {} entries, expected {}",
            w.len(),
            dh.n_dofs()
        )));
    }
    let ns = dh.n_scalar();
    let mut pts = [Point::zeros(); 9];
    for (i, (node, &k)) in element.nodes().into_iter().zip(dh.cell_nodes(cell)).enumerate() {
        pts[i] = reference.point(node) + Point::new(w[k], w[ns + k]);
    }
    Ok(CellMap::new(element, &pts[..element.n_basis()]))
}

pub fn map_point(mesh: &Mesh, cfg: &MappingConfig, cell: usize, p: [f64; 2]) -> Result<Point> {
    Ok(cell_map(mesh, cfg, cell)?.point(p))
}

/// Jacobian of the cell map and its determinant; nonpositive determinants
/// are reported as [`Error::DegenerateMapping`].
pub fn mapping_jacobian(
    mesh: &Mesh,
    cfg: &MappingConfig,
    cell: usize,
    p: [f64; 2],
) -> Result<(Matrix2<f64>, f64)> {
    let jac = cell_map(mesh, cfg, cell)?.jacobian(p);
    let det = jac.determinant();
    if det <= 0.0 {
        return Err(Error::DegenerateMapping { cell, det });
    }
    Ok((jac, det))
}
