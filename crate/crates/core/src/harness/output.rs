use std::fmt::Write as _;
use std::path::Path;

use crate::assembly::CoupledSystem;
use crate::error::{Error, Result};
use crate::fem::DofHandler;
use crate::mesh::{Mesh, Point};

use super::norms::ErrorNorms;
use super::run::StepRecord;

pub const REPORT_HEADER: [&str; 6] = ["step", "t", "u_max", "newton_iters", "solid_area", "area_change_pct"];
pub const ERRORS_HEADER: [&str; 5] = ["cells", "dofs", "l2_u", "h1_u", "l2_p"];

const CORNERS: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
const VTK_QUAD: u8 = 9;

/// Vertex values of a field, averaged over the cells sharing each vertex
/// (only discontinuous fields actually differ between cells).
fn vertex_values(mesh: &Mesh, dofs: &DofHandler, coefficients: &[f64]) -> Vec<Vec<f64>> {
    let element = dofs.element();
    let ns = dofs.n_scalar();
    let nc = dofs.components();
    let mut sum = vec![vec![0.0; nc]; mesh.n_vertices()];
    let mut hits = vec![0usize; mesh.n_vertices()];
    let mut phi = vec![0.0; element.n_basis()];
    for (cell, verts) in mesh.cells().iter().enumerate() {
        let nodes = dofs.cell_nodes(cell);
        for (corner, &v) in CORNERS.iter().zip(verts) {
            element.fill_values(*corner, &mut phi);
            for (c, s) in sum[v].iter_mut().enumerate() {
                *s += nodes.iter().zip(&phi).map(|(&k, f)| coefficients[c * ns + k] * f).sum::<f64>();
            }
            hits[v] += 1;
        }
    }
    for (s, &n) in sum.iter_mut().zip(&hits) {
        s.iter_mut().for_each(|x| *x /= n.max(1) as f64);
    }
    sum
}

fn vtk_grid(title: &str, points: &[Point], mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", points.len());
    for p in points {
        let _ = writeln!(s, "{:e} {:e} 0", p.x, p.y);
    }
    let nc = mesh.n_cells();
    let _ = writeln!(s, "CELLS {nc} {}", 5 * nc);
    for c in mesh.cells() {
        let _ = writeln!(s, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        let _ = writeln!(s, "{VTK_QUAD}");
    }
    let _ = writeln!(s, "POINT_DATA {}", points.len());
    s
}

fn vectors(s: &mut String, name: &str, values: &[Vec<f64>]) {
    let _ = writeln!(s, "VECTORS {name} double");
    for v in values {
        let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Fluid grid with vertex velocity `u` and pressure `p`.
pub fn fluid_vtk(system: &CoupledSystem, fluid: &[f64]) -> String {
    let mesh = system.fluid_mesh();
    let u = vertex_values(mesh, system.velocity_dofs(), fluid);
    let p = vertex_values(mesh, system.pressure_dofs(), &fluid[system.n_velocity()..]);
    let mut s = vtk_grid("fluid", mesh.vertices(), mesh);
    vectors(&mut s, "u", &u);
    let _ = writeln!(s, "SCALARS p double 1\nLOOKUP_TABLE default");
    for v in &p {
        let _ = writeln!(s, "{:e}", v[0]);
    }
    s
}

/// Solid grid at the deformed vertex positions `s + w(s)` with the displacement.
pub fn solid_vtk(system: &CoupledSystem, w: &[f64]) -> String {
    let mesh = system.solid_mesh();
    let d = vertex_values(mesh, system.displacement_dofs(), w);
    let moved: Vec<Point> = mesh.vertices().iter().zip(&d).map(|(x, d)| x + Point::new(d[0], d[1])).collect();
    let mut s = vtk_grid("solid", &moved, mesh);
    vectors(&mut s, "displacement", &d);
    s
}

pub fn write_fluid_vtk(path: &Path, system: &CoupledSystem, fluid: &[f64]) -> Result<()> {
    write_file(path, &fluid_vtk(system, fluid))
}

pub fn write_solid_vtk(path: &Path, system: &CoupledSystem, w: &[f64]) -> Result<()> {
    write_file(path, &solid_vtk(system, w))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Consistency(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_report_csv(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(REPORT_HEADER).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.write_record([
            r.step.to_string(),
            r.t.to_string(),
            format!("{:e}", r.u_max),
            r.newton_iterations.to_string(),
            format!("{:.12e}", r.solid_area),
            format!("{:e}", r.area_change_pct),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_errors_csv(path: &Path, cells: usize, dofs: usize, norms: &ErrorNorms) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(ERRORS_HEADER).map_err(|e| csv_error(path, e))?;
    w.write_record([
        cells.to_string(),
        dofs.to_string(),
        format!("{:e}", norms.l2_u),
        format!("{:e}", norms.h1_u),
        format!("{:e}", norms.l2_p),
    ])
    .map_err(|e| csv_error(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
