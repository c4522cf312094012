//! Conforming quadrilateral meshes for the control volume and the immersed solid.
//!
//! Cells store their four vertices counterclockwise starting at the lower-left
//! corner of the reference square. Local face `f` joins local vertices `f` and
//! `(f + 1) % 4`, so face 0 is `eta = 0`, face 1 is `xi = 1`, face 2 is
//! `eta = 1` and face 3 is `xi = 0`.

mod ucd;

use std::collections::HashMap;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub use ucd::{read_ucd, write_ucd};

pub type Point = Vector2<f64>;

/// Marker carried by every outer face of generated control volumes.
pub const DEFAULT_BOUNDARY_MARKER: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub face: usize,
    pub marker: u32,
}

/// Geometric description used to place new points during refinement and to
/// build curved (biquadratic) cell geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manifold {
    /// Straight edges everywhere.
    Flat,
    /// Every point is placed by averaging in polar coordinates about `center`.
    /// Used for annuli, where both boundary circles stay exact.
    Polar { center: Point },
    /// Straight interior edges, boundary edges on the circle of `radius`.
    Disk { center: Point, radius: f64 },
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 4]>,
    boundary_faces: Vec<BoundaryFace>,
    level: usize,
    manifold: Manifold,
    neighbors: Vec<[Option<usize>; 4]>,
    face_markers: Vec<[Option<u32>; 4]>,
}

pub(crate) fn bilinear_weights(p: [f64; 2]) -> [f64; 4] {
    let [x, y] = p;
    [(1.0 - x) * (1.0 - y), x * (1.0 - y), x * y, (1.0 - x) * y]
}

pub(crate) fn bilinear_point(v: &[Point; 4], p: [f64; 2]) -> Point {
    let w = bilinear_weights(p);
    v[0] * w[0] + v[1] * w[1] + v[2] * w[2] + v[3] * w[3]
}

/// d x / d xi of the bilinear cell map; columns are the two reference directions.
pub(crate) fn bilinear_jacobian(v: &[Point; 4], p: [f64; 2]) -> Matrix2<f64> {
    let [x, y] = p;
    let dxi = (v[1] - v[0]) * (1.0 - y) + (v[2] - v[3]) * y;
    let deta = (v[3] - v[0]) * (1.0 - x) + (v[2] - v[1]) * x;
    Matrix2::from_columns(&[dxi, deta])
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

impl Mesh {
    /// Builds a mesh and validates orientation and conformity.
    ///
    /// Boundary faces not listed in `markers` are added with marker 0.
    pub fn new(
        vertices: Vec<Point>,
        cells: Vec<[usize; 4]>,
        markers: Vec<BoundaryFace>,
        manifold: Manifold,
    ) -> Result<Self> {
        Self::with_level(vertices, cells, markers, manifold, 0)
    }

    fn with_level(
        vertices: Vec<Point>,
        cells: Vec<[usize; 4]>,
        markers: Vec<BoundaryFace>,
        manifold: Manifold,
        level: usize,
    ) -> Result<Self> {
        for (c, cell) in cells.iter().enumerate() {
            for (k, &v) in cell.iter().enumerate() {
                if v >= vertices.len() {
                    return Err(Error::Consistency(format!(
                        "cell {c} references vertex {v} but only {} vertices exist",
                        vertices.len()
                    )));
                }
                if cell[..k].contains(&v) {
                    return Err(Error::Consistency(format!(
                        "cell {c} repeats vertex {v}"
                    )));
                }
            }
            let corners = cell.map(|v| vertices[v]);
            let det = bilinear_jacobian(&corners, [0.5, 0.5]).determinant();
            if det <= 0.0 {
                return Err(Error::Consistency(format!(
                    "cell {c} is not counterclockwise (det = {det:e})"
                )));
            }
        }

        let mut owners: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (c, cell) in cells.iter().enumerate() {
            for f in 0..4 {
                let (a, b) = (cell[f], cell[(f + 1) % 4]);
                owners.entry((a.min(b), a.max(b))).or_default().push((c, f));
            }
        }
        let mut neighbors = vec![[None; 4]; cells.len()];
        let mut is_boundary = vec![[false; 4]; cells.len()];
        for shared in owners.values() {
            match shared.as_slice() {
                [(c, f)] => is_boundary[*c][*f] = true,
                [(c0, f0), (c1, f1)] => {
                    neighbors[*c0][*f0] = Some(*c1);
                    neighbors[*c1][*f1] = Some(*c0);
                }
                _ => {
                    let (c, f) = shared[0];
                    return Err(Error::Consistency(format!(
                        "face {f} of cell {c} is shared by {} cells",
                        shared.len()
                    )));
                }
            }
        }

        let mut face_markers = vec![[None; 4]; cells.len()];
        for bf in &markers {
            if bf.cell >= cells.len() || bf.face >= 4 || !is_boundary[bf.cell][bf.face] {
                return Err(Error::Consistency(format!(
                    "face {} of cell {} is not on the boundary",
                    bf.face, bf.cell
                )));
            }
            if face_markers[bf.cell][bf.face].is_some() {
                return Err(Error::Consistency(format!(
                    "boundary face {} of cell {} listed twice",
                    bf.face, bf.cell
                )));
            }
            face_markers[bf.cell][bf.face] = Some(bf.marker);
        }
        let mut boundary_faces = Vec::new();
        for (c, flags) in is_boundary.iter().enumerate() {
            for f in 0..4 {
                if flags[f] {
                    let marker = *face_markers[c][f].get_or_insert(0);
                    boundary_faces.push(BoundaryFace { cell: c, face: f, marker });
                }
            }
        }

        Ok(Mesh {
            vertices,
            cells,
            boundary_faces,
            level,
            manifold,
            neighbors,
            face_markers,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    /// Number of global refinements applied since construction.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    /// Cells across each local face, `None` on the boundary.
    pub fn face_neighbors(&self, cell: usize) -> [Option<usize>; 4] {
        self.neighbors[cell]
    }

    pub fn face_marker(&self, cell: usize, face: usize) -> Option<u32> {
        self.face_markers[cell][face]
    }

    pub fn cell_corners(&self, cell: usize) -> [Point; 4] {
        self.cells[cell].map(|v| self.vertices[v])
    }

    /// Exact area of the bilinear cell.
    pub fn cell_area(&self, cell: usize) -> f64 {
        let v = self.cell_corners(cell);
        0.5 * (cross(v[0], v[1]) + cross(v[1], v[2]) + cross(v[2], v[3]) + cross(v[3], v[0]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    pub fn cell_bounding_box(&self, cell: usize) -> (Point, Point) {
        let v = self.cell_corners(cell);
        let mut lo = v[0];
        let mut hi = v[0];
        for p in &v[1..] {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn cell_diameter(&self, cell: usize) -> f64 {
        let v = self.cell_corners(cell);
        (v[2] - v[0]).norm().max((v[3] - v[1]).norm())
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    fn edge_midpoint(&self, a: Point, b: Point, on_boundary: bool) -> Point {
        match self.manifold {
            Manifold::Flat => (a + b) * 0.5,
            Manifold::Polar { center } => {
                let (ra, rb) = ((a - center).norm(), (b - center).norm());
                let dir = (a - center) / ra + (b - center) / rb;
                center + dir.normalize() * (0.5 * (ra + rb))
            }
            Manifold::Disk { center, radius } => {
                let mid = (a + b) * 0.5;
                if on_boundary {
                    center + (mid - center).normalize() * radius
                } else {
                    mid
                }
            }
        }
    }

    fn face_midpoint(&self, cell: usize, face: usize) -> Point {
        let v = self.cell_corners(cell);
        let on_boundary = self.neighbors[cell][face].is_none();
        self.edge_midpoint(v[face], v[(face + 1) % 4], on_boundary)
    }

    fn cell_center(&self, cell: usize, mids: &[Point; 4]) -> Point {
        let v = self.cell_corners(cell);
        match self.manifold {
            Manifold::Polar { center } => {
                let mut dir = Point::zeros();
                let mut r = 0.0;
                for p in &v {
                    let d = p - center;
                    r += 0.25 * d.norm();
                    dir += d.normalize();
                }
                center + dir.normalize() * r
            }
            // transfinite interpolation of the four (possibly curved) edges
            _ => (mids[0] + mids[1] + mids[2] + mids[3]) * 0.5 - (v[0] + v[1] + v[2] + v[3]) * 0.25,
        }
    }

    /// The nine support points of the biquadratic geometry of `cell`, in
    /// lexicographic order (`index = 3 * j + i` for reference node `(i/2, j/2)`).
    ///
    /// Edge and center points follow the manifold, so curved boundaries are
    /// represented to second order.
    pub fn q2_geometry_points(&self, cell: usize) -> [Point; 9] {
        let v = self.cell_corners(cell);
        let mids = [0, 1, 2, 3].map(|f| self.face_midpoint(cell, f));
        let c = self.cell_center(cell, &mids);
        [v[0], mids[0], v[1], mids[3], c, mids[1], v[3], mids[2], v[2]]
    }

    /// Quadrisects every cell `levels` times.
    pub fn refine_globally(&self, levels: usize) -> Mesh {
        let mut mesh = self.clone();
        for _ in 0..levels {
            mesh = mesh.refine_once();
        }
        mesh
    }

    fn refine_once(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cells = Vec::with_capacity(4 * self.n_cells());
        let mut markers = Vec::with_capacity(2 * self.boundary_faces.len());

        for (c, cell) in self.cells.iter().enumerate() {
            let mut mid_ids = [0usize; 4];
            let mut mids = [Point::zeros(); 4];
            for f in 0..4 {
                let (a, b) = (cell[f], cell[(f + 1) % 4]);
                let key = (a.min(b), a.max(b));
                let id = match edge_vertex.get(&key) {
                    Some(&id) => id,
                    None => {
                        vertices.push(self.face_midpoint(c, f));
                        edge_vertex.insert(key, vertices.len() - 1);
                        vertices.len() - 1
                    }
                };
                mid_ids[f] = id;
                mids[f] = vertices[id];
            }
            vertices.push(self.cell_center(c, &mids));
            let center = vertices.len() - 1;
            let [v0, v1, v2, v3] = *cell;
            let [m0, m1, m2, m3] = mid_ids;
            cells.push([v0, m0, center, m3]);
            cells.push([m0, v1, m1, center]);
            cells.push([center, m1, v2, m2]);
            cells.push([m3, center, m2, v3]);
        }
        // children k and k+1 (mod 4) carry the two halves of parent face k
        for bf in &self.boundary_faces {
            for child in [bf.face, (bf.face + 1) % 4] {
                markers.push(BoundaryFace {
                    cell: 4 * bf.cell + child,
                    face: bf.face,
                    marker: bf.marker,
                });
            }
        }
        markers.sort_by_key(|b| (b.cell, b.face));
        Mesh::with_level(vertices, cells, markers, self.manifold, self.level + 1)
            .expect("refinement preserves mesh validity")
    }
}

/// Uniform `n x n` grid of the square `[lower, lower + edge_length]^2`.
/// Every outer face carries marker 1.
pub fn generate_square_grid(lower: Point, edge_length: f64, subdivisions: usize) -> Result<Mesh> {
    if !(edge_length > 0.0) || subdivisions == 0 {
        return Err(Error::InvalidArgument(format!(
            "square grid needs positive size and subdivisions (got {edge_length}, {subdivisions})"
        )));
    }
    let n = subdivisions;
    let h = edge_length / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(lower + Point::new(i as f64 * h, j as f64 * h));
        }
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    let mut markers = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let c = cells.len();
            cells.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            let outer = [j == 0, i == n - 1, j == n - 1, i == 0];
            for (face, &on) in outer.iter().enumerate() {
                if on {
                    markers.push(BoundaryFace { cell: c, face, marker: DEFAULT_BOUNDARY_MARKER });
                }
            }
        }
    }
    Mesh::new(vertices, cells, markers, Manifold::Flat)
}

/// Structured polar grid of the annulus `inner_radius <= r <= inner_radius + width`.
///
/// Local `xi` runs radially and `eta` counterclockwise. The inner circle carries
/// marker 1 and the outer circle marker 2.
pub fn generate_annulus_grid(
    center: Point,
    inner_radius: f64,
    width: f64,
    cells_radial: usize,
    cells_circumferential: usize,
) -> Result<Mesh> {
    if !(inner_radius > 0.0) || !(width > 0.0) || cells_radial == 0 || cells_circumferential < 4 {
        return Err(Error::InvalidArgument(format!(
            "annulus needs positive radii, >= 1 radial and >= 4 circumferential cells \
             (got R={inner_radius}, w={width}, {cells_radial}x{cells_circumferential})"
        )));
    }
    let (nr, nt) = (cells_radial, cells_circumferential);
    let mut vertices = Vec::with_capacity((nr + 1) * nt);
    for k in 0..=nr {
        let r = inner_radius + width * k as f64 / nr as f64;
        for i in 0..nt {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / nt as f64;
            vertices.push(center + Point::new(r * theta.cos(), r * theta.sin()));
        }
    }
    let vid = |k: usize, i: usize| k * nt + (i % nt);
    let mut cells = Vec::with_capacity(nr * nt);
    let mut markers = Vec::new();
    for k in 0..nr {
        for i in 0..nt {
            let c = cells.len();
            cells.push([vid(k, i), vid(k + 1, i), vid(k + 1, i + 1), vid(k, i + 1)]);
            if k == 0 {
                markers.push(BoundaryFace { cell: c, face: 3, marker: 1 });
            }
            if k == nr - 1 {
                markers.push(BoundaryFace { cell: c, face: 1, marker: 2 });
            }
        }
    }
    Mesh::new(vertices, cells, markers, Manifold::Polar { center })
}

/// Five-cell disk: a central square surrounded by four curved cells, with the
/// boundary on the circle of `radius`. Boundary marker 1.
pub fn generate_disk_grid(center: Point, radius: f64) -> Result<Mesh> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("disk radius must be positive (got {radius})")));
    }
    let outer = radius / std::f64::consts::SQRT_2;
    let inner = outer / (1.0 + std::f64::consts::SQRT_2);
    let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let mut vertices = Vec::with_capacity(8);
    for (sx, sy) in corners {
        vertices.push(center + Point::new(sx * outer, sy * outer));
    }
    for (sx, sy) in corners {
        vertices.push(center + Point::new(sx * inner, sy * inner));
    }
    let cells = vec![
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ];
    let markers = (1..5)
        .map(|cell| BoundaryFace { cell, face: 0, marker: DEFAULT_BOUNDARY_MARKER })
        .collect();
    Mesh::new(vertices, cells, markers, Manifold::Disk { center, radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn square_grid_counts() {
        let m = generate_square_grid(Point::zeros(), 1.0, 1).unwrap();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.vertices()[3], Point::new(1.0, 1.0));
        let m = generate_square_grid(Point::zeros(), 1.0, 4).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices()), (16, 25));
        let m = generate_square_grid(Point::zeros(), 1.0, 16).unwrap();
        assert_eq!(m.n_cells(), 256);
        assert!(m.boundary_faces().iter().all(|b| b.marker == 1));
        assert_eq!(m.boundary_faces().len(), 64);
    }

    #[test]
    fn invalid_sizes_are_rejected() {
        assert!(matches!(
            generate_square_grid(Point::zeros(), 0.0, 2),
            Err(Error::InvalidArgument(_))
        ));
        assert!(generate_square_grid(Point::zeros(), 1.0, 0).is_err());
        assert!(generate_annulus_grid(Point::zeros(), -1.0, 0.1, 1, 4).is_err());
        assert!(generate_annulus_grid(Point::zeros(), 1.0, 0.1, 1, 3).is_err());
        assert!(generate_disk_grid(Point::zeros(), 0.0).is_err());
    }

    #[test]
    fn annulus_vertices_lie_on_circles() {
        let c = Point::new(0.5, 0.5);
        let m = generate_annulus_grid(c, 0.25, 0.0625, 1, 4).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices()), (4, 8));
        for v in m.vertices() {
            let r = (v - c).norm();
            assert!((r - 0.25).abs() < 1e-15 || (r - 0.3125).abs() < 1e-15);
        }
        for (nr, nt) in [(1, 4), (3, 7), (5, 29)] {
            let m = generate_annulus_grid(c, 0.25, 0.0625, nr, nt).unwrap();
            assert_eq!(m.n_vertices(), nt * (nr + 1));
        }
        let m = generate_annulus_grid(c, 0.25, 0.0625, 1, 29).unwrap().refine_globally(3);
        assert_eq!(m.n_cells(), 1856);
        // every refined vertex sits on one of the 9 radial circles
        for v in m.vertices() {
            let k = ((v - c).norm() - 0.25) / (0.0625 / 8.0);
            assert!((k - k.round()).abs() < 1e-9, "vertex off its circle: {k}");
        }
    }

    #[test]
    fn refinement_multiplies_cells_and_preserves_area() {
        let m = generate_square_grid(Point::zeros(), 1.0, 1).unwrap();
        assert_eq!(m.refine_globally(2).n_cells(), 16);
        let m = generate_square_grid(Point::zeros(), 1.0, 16).unwrap();
        let fine = m.refine_globally(1);
        assert_eq!(fine.n_cells(), 1024);
        assert_eq!(fine.level(), 1);
        for c in 0..m.n_cells() {
            let sum: f64 = (0..4).map(|k| fine.cell_area(4 * c + k)).sum();
            assert_relative_eq!(sum, m.cell_area(c), epsilon = 1e-12);
        }
        assert!(fine.boundary_faces().iter().all(|b| b.marker == 1));
        assert_eq!(fine.boundary_faces().len(), 128);
    }

    #[test]
    fn square_area_is_exact() {
        let m = generate_square_grid(Point::new(-0.3, 0.2), 2.5, 7).unwrap();
        assert_relative_eq!(m.total_area(), 6.25, epsilon = 1e-12);
    }

    #[test]
    fn annulus_area_converges_at_second_order() {
        let c = Point::new(0.5, 0.5);
        let exact = std::f64::consts::PI * (0.3125f64.powi(2) - 0.25f64.powi(2));
        let base = generate_annulus_grid(c, 0.25, 0.0625, 1, 8).unwrap();
        let errs: Vec<f64> = (0..4)
            .map(|l| (base.refine_globally(l).total_area() - exact).abs())
            .collect();
        for pair in errs.windows(2) {
            let rate = (pair[0] / pair[1]).log2();
            assert!(rate > 1.9, "rate {rate}");
        }
    }

    #[test]
    fn disk_counts_match_benchmark_resolution() {
        let m = generate_disk_grid(Point::new(0.6, 0.5), 0.2).unwrap().refine_globally(3);
        assert_eq!(m.n_cells(), 320);
        for bf in m.boundary_faces() {
            let v = m.cell_corners(bf.cell)[bf.face];
            assert_relative_eq!((v - Point::new(0.6, 0.5)).norm(), 0.2, epsilon = 1e-14);
        }
    }

    #[test]
    fn q2_geometry_of_flat_cell_is_bilinear_image() {
        let m = generate_square_grid(Point::new(1.0, 2.0), 2.0, 1).unwrap();
        let pts = m.q2_geometry_points(0);
        for j in 0..3 {
            for i in 0..3 {
                let p = [i as f64 / 2.0, j as f64 / 2.0];
                let expected = bilinear_point(&m.cell_corners(0), p);
                assert_relative_eq!(pts[3 * j + i], expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn rejects_nonconforming_and_clockwise_cells() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let err = Mesh::new(v.clone(), vec![[0, 3, 2, 1]], vec![], Manifold::Flat).unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
        let err = Mesh::new(v, vec![[0, 1, 2, 7]], vec![], Manifold::Flat).unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn interior_faces_shared_by_two_cells(n in 1usize..6, levels in 0usize..3, which in 0usize..3) {
                let base = match which {
                    0 => generate_square_grid(Point::zeros(), 1.0, n).unwrap(),
                    1 => generate_annulus_grid(Point::zeros(), 0.5, 0.2, n, 4 + n).unwrap(),
                    _ => generate_disk_grid(Point::zeros(), 1.0).unwrap(),
                };
                let mesh = base.refine_globally(levels);
                let mut count: HashMap<(usize, usize), usize> = HashMap::new();
                for cell in mesh.cells() {
                    for f in 0..4 {
                        let (a, b) = (cell[f], cell[(f + 1) % 4]);
                        *count.entry((a.min(b), a.max(b))).or_default() += 1;
                    }
                }
                let n_boundary = count.values().filter(|&&k| k == 1).count();
                prop_assert!(count.values().all(|&k| k == 1 || k == 2));
                prop_assert_eq!(n_boundary, mesh.boundary_faces().len());
                // orientation at the 2x2 Gauss points
                let g = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
                for c in 0..mesh.n_cells() {
                    let v = mesh.cell_corners(c);
                    for &x in &g {
                        for &y in &g {
                            prop_assert!(bilinear_jacobian(&v, [x, y]).determinant() > 0.0);
                        }
                    }
                }
            }
        }
    }
}
