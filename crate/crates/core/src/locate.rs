//! Locating physical points in the (bilinear) fluid mesh.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::{bilinear_jacobian, bilinear_point, Mesh, Point};

/// Reference-coordinate tolerance for accepting a point as inside a cell.
pub const INSIDE_TOLERANCE: f64 = 1e-10;

/// Margin under which a hinted cell is trusted without consulting the bins.
const INTERIOR_MARGIN: f64 = 1e-8;

/// Located points grouped by owning cell, in order of first appearance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointLocationResult {
    pub cells: Vec<usize>,
    pub reference_points: Vec<Vec<[f64; 2]>>,
    pub back_map: Vec<Vec<usize>>,
}

impl PointLocationResult {
    pub fn n_points(&self) -> usize {
        self.back_map.iter().map(Vec::len).sum()
    }
}

/// Newton inversion of the bilinear map of `cell`.
///
/// Returns `Ok(None)` when `x` is not inside the cell (up to
/// [`INSIDE_TOLERANCE`]); accepted coordinates are clamped to `[0,1]^2`.
pub fn invert_mapping(mesh: &Mesh, cell: usize, x: Point) -> Result<Option<[f64; 2]>> {
    let v = mesh.cell_corners(cell);
    let det_center = bilinear_jacobian(&v, [0.5, 0.5]).determinant();
    if !(det_center > 0.0) {
        return Err(Error::DegenerateMapping { cell, det: det_center });
    }
    let scale = mesh.cell_diameter(cell).max(1.0);
    let mut p = [0.5, 0.5];
    for _ in 0..40 {
        let r = bilinear_point(&v, p) - x;
        if r.norm() < 1e-12 * scale {
            let inside = p.iter().all(|&c| (-INSIDE_TOLERANCE..=1.0 + INSIDE_TOLERANCE).contains(&c));
            return Ok(inside.then(|| p.map(|c| c.clamp(0.0, 1.0))));
        }
        let Some(inv) = bilinear_jacobian(&v, p).try_inverse() else {
            return Ok(None);
        };
        let d = inv * r;
        p = [p[0] - d.x, p[1] - d.y];
        // far outside the cell the bilinear extension is meaningless
        if p.iter().any(|c| c.abs() > 1e3) {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Uniform bin index over expanded cell bounding boxes.
#[derive(Debug, Clone)]
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    lower: Point,
    bin_size: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let mut diam: Vec<f64> = (0..mesh.n_cells()).map(|c| mesh.cell_diameter(c)).collect();
        diam.sort_by(f64::total_cmp);
        let median = diam[diam.len() / 2];
        let extent = hi - lo;
        let bin_size = median.max(extent.max() / 2048.0);
        let nx = ((extent.x / bin_size).ceil() as usize).max(1);
        let ny = ((extent.y / bin_size).ceil() as usize).max(1);
        let mut bins = vec![Vec::new(); nx * ny];
        let mut loc = PointLocator { mesh, lower: lo, bin_size, nx, ny, bins: Vec::new() };
        for c in 0..mesh.n_cells() {
            let (clo, chi) = mesh.cell_bounding_box(c);
            let pad = 1e-9 * mesh.cell_diameter(c);
            let (i0, j0) = loc.bin_of(clo - Point::repeat(pad));
            let (i1, j1) = loc.bin_of(chi + Point::repeat(pad));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    bins[j * nx + i].push(c);
                }
            }
        }
        loc.bins = bins;
        loc
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    fn bin_of(&self, x: Point) -> (usize, usize) {
        let f = (x - self.lower) / self.bin_size;
        let clamp = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        (clamp(f.x, self.nx), clamp(f.y, self.ny))
    }

    fn search_bins(&self, x: Point) -> Result<Option<(usize, [f64; 2])>> {
        let (i, j) = self.bin_of(x);
        for &c in &self.bins[j * self.nx + i] {
            if let Some(p) = invert_mapping(self.mesh, c, x)? {
                return Ok(Some((c, p)));
            }
        }
        Ok(None)
    }

    /// Owning cell and reference coordinates of `x`. Points on shared faces
    /// or vertices go to the lowest-index owner, with or without a hint.
    pub fn locate(&self, x: Point, hint: Option<usize>) -> Result<Option<(usize, [f64; 2])>> {
        if let Some(h) = hint.filter(|&h| h < self.mesh.n_cells()) {
            let interior = |p: [f64; 2]| p.iter().all(|&c| c > INTERIOR_MARGIN && c < 1.0 - INTERIOR_MARGIN);
            let candidates = std::iter::once(h).chain(self.mesh.face_neighbors(h).into_iter().flatten());
            for c in candidates {
                if let Some(p) = invert_mapping(self.mesh, c, x)? {
                    if interior(p) {
                        return Ok(Some((c, p)));
                    }
                }
            }
        }
        self.search_bins(x)
    }

    pub fn locate_point(&self, x: Point, hint: Option<usize>) -> Result<(usize, [f64; 2])> {
        self.locate(x, hint)?
            .ok_or(Error::PointOutsideDomain { index: 0, x: x.x, y: x.y })
    }

    pub fn compute_point_locations(&self, points: &[Point]) -> Result<PointLocationResult> {
        let mut out = PointLocationResult::default();
        let mut group_of: HashMap<usize, usize> = HashMap::new();
        let mut hint = None;
        for (index, &x) in points.iter().enumerate() {
            let (cell, p) = self
                .locate(x, hint)?
                .ok_or(Error::PointOutsideDomain { index, x: x.x, y: x.y })?;
            hint = Some(cell);
            let g = *group_of.entry(cell).or_insert_with(|| {
                out.cells.push(cell);
                out.reference_points.push(Vec::new());
                out.back_map.push(Vec::new());
                out.cells.len() - 1
            });
            out.reference_points[g].push(p);
            out.back_map[g].push(index);
        }
        Ok(out)
    }
}

pub fn locate_point(mesh: &Mesh, x: Point, hint: Option<usize>) -> Result<(usize, [f64; 2])> {
    PointLocator::new(mesh).locate_point(x, hint)
}

pub fn compute_point_locations(mesh: &Mesh, points: &[Point]) -> Result<PointLocationResult> {
    PointLocator::new(mesh).compute_point_locations(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_disk_grid, generate_square_grid};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn brute_force(mesh: &Mesh, x: Point) -> Option<(usize, [f64; 2])> {
        (0..mesh.n_cells()).find_map(|c| invert_mapping(mesh, c, x).unwrap().map(|p| (c, p)))
    }

    #[test]
    fn affine_inversion() {
        let h = 0.5;
        let m = generate_square_grid(Point::zeros(), h, 1).unwrap();
        let p = invert_mapping(&m, 0, Point::new(h / 4.0, h / 2.0)).unwrap().unwrap();
        assert!((p[0] - 0.25).abs() < 1e-14 && (p[1] - 0.5).abs() < 1e-14);
        assert_eq!(invert_mapping(&m, 0, Point::new(2.0 * h + h, 0.1)).unwrap(), None);
    }

    #[test]
    fn round_trip_on_curved_cells() {
        let m = generate_disk_grid(Point::zeros(), 1.0).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let c = rng.random_range(0..m.n_cells());
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            let x = bilinear_point(&m.cell_corners(c), p);
            let q = invert_mapping(&m, c, x).unwrap().unwrap();
            assert!((bilinear_point(&m.cell_corners(c), q) - x).norm() < 1e-10);
        }
    }

    #[test]
    fn single_cell_and_tolerance_band() {
        let m = generate_square_grid(Point::zeros(), 1.0, 1).unwrap();
        assert_eq!(locate_point(&m, Point::new(0.25, 0.5), None).unwrap(), (0, [0.25, 0.5]));
        let (c, p) = locate_point(&m, Point::new(1.0 + 1e-12, 0.5), None).unwrap();
        assert_eq!((c, p[0]), (0, 1.0));
        assert!(matches!(
            locate_point(&m, Point::new(1.1, 0.5), None),
            Err(Error::PointOutsideDomain { .. })
        ));
    }

    #[test]
    fn vertex_goes_to_lowest_cell() {
        let m = generate_square_grid(Point::zeros(), 1.0, 4).unwrap();
        let x = Point::new(0.5, 0.5);
        // cells 5, 6, 9, 10 share this vertex
        for hint in [None, Some(10), Some(9), Some(6)] {
            assert_eq!(locate_point(&m, x, hint).unwrap().0, 5);
        }
    }

    #[test]
    fn straddling_points_form_four_groups() {
        let m = generate_square_grid(Point::zeros(), 1.0, 4).unwrap();
        let c = Point::new(0.5, 0.5);
        let pts: Vec<Point> = (0..9)
            .map(|k| c + Point::new(0.1 * ((k % 3) as f64 - 1.0) + 0.01, 0.1 * ((k / 3) as f64 - 1.0) + 0.01))
            .collect();
        let r = compute_point_locations(&m, &pts).unwrap();
        assert_eq!(r.cells.len(), 4);
        let mut all: Vec<usize> = r.back_map.concat();
        all.sort_unstable();
        assert_eq!(all, (0..9).collect::<Vec<_>>());
        let one = compute_point_locations(&m, &[Point::new(0.3, 0.3), Point::new(0.4, 0.45)]).unwrap();
        assert_eq!(one.cells, vec![5]);
        assert_eq!(one.back_map, vec![vec![0, 1]]);
    }

    #[test]
    fn outside_point_reports_its_index() {
        let m = generate_square_grid(Point::zeros(), 1.0, 2).unwrap();
        let err = compute_point_locations(&m, &[Point::new(0.5, 0.5), Point::new(-0.5, 0.5)]).unwrap_err();
        assert!(matches!(err, Error::PointOutsideDomain { index: 1, .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn grouping_agrees_with_brute_force(seed in 0u64..1000, n in 1usize..8) {
            let m = generate_disk_grid(Point::zeros(), 1.0).unwrap().refine_globally(n % 3);
            let m2 = generate_square_grid(Point::new(-1.0, -1.0), 2.0, n).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            for mesh in [&m, &m2] {
                let pts: Vec<Point> = (0..100)
                    .map(|_| {
                        let c = rng.random_range(0..mesh.n_cells());
                        let k = rng.random_range(0..4);
                        // mix of interior points and exact vertices
                        if rng.random::<f64>() < 0.2 {
                            mesh.cell_corners(c)[k]
                        } else {
                            bilinear_point(&mesh.cell_corners(c), [rng.random(), rng.random()])
                        }
                    })
                    .collect();
                let loc = PointLocator::new(mesh);
                let grouped = loc.compute_point_locations(&pts).unwrap();
                prop_assert_eq!(grouped.n_points(), pts.len());
                for (g, &cell) in grouped.cells.iter().enumerate() {
                    for (k, &i) in grouped.back_map[g].iter().enumerate() {
                        let (bc, bp) = brute_force(mesh, pts[i]).unwrap();
                        prop_assert_eq!(bc, cell);
                        prop_assert!((bp[0] - grouped.reference_points[g][k][0]).abs() < 1e-9);
                        let y = bilinear_point(&mesh.cell_corners(cell), grouped.reference_points[g][k]);
                        prop_assert!((y - pts[i]).norm() < 1e-9);
                        prop_assert_eq!(loc.locate(pts[i], None).unwrap().unwrap().0, cell);
                    }
                }
                prop_assert_eq!(loc.compute_point_locations(&pts).unwrap(), grouped);
            }
        }
    }
}
