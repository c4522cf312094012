//! AVS-UCD ASCII reader and writer for 2D quadrilateral meshes.
//!
//! Quads are read as `id material quad v0 v1 v2 v3`; `line` elements attach
//! their material id as a boundary marker to the matching boundary face.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{BoundaryFace, Manifold, Mesh, Point};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from '{tok}'")))
}

pub fn read_ucd(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty mesh file"))?;
    let mut toks = header.split_whitespace();
    let n_vertices: usize = field(toks.next(), hline, "vertex count")?;
    let n_elements: usize = field(toks.next(), hline, "cell count")?;

    let mut vertices = Vec::with_capacity(n_vertices);
    let mut vertex_index = HashMap::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(hline, "file ends inside vertex list"))?;
        let mut t = l.split_whitespace();
        let id: i64 = field(t.next(), ln, "vertex id")?;
        let x: f64 = field(t.next(), ln, "x coordinate")?;
        let y: f64 = field(t.next(), ln, "y coordinate")?;
        if vertex_index.insert(id, vertices.len()).is_some() {
            return Err(parse_err(ln, format!("duplicate vertex id {id}")));
        }
        vertices.push(Point::new(x, y));
    }

    let lookup = |id: i64, ln: usize| -> Result<usize> {
        vertex_index.get(&id).copied().ok_or_else(|| {
            Error::Consistency(format!(
                "element on line {ln} references vertex {id}, but the file defines {n_vertices} vertices"
            ))
        })
    };

    let mut cells = Vec::new();
    let mut lines_with_marker = Vec::new();
    for _ in 0..n_elements {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(hline, "file ends inside cell list"))?;
        let mut t = l.split_whitespace();
        let _id: i64 = field(t.next(), ln, "cell id")?;
        let material: u32 = field(t.next(), ln, "material id")?;
        let kind = t.next().ok_or_else(|| parse_err(ln, "missing cell type"))?;
        match kind {
            "quad" => {
                let mut v = [0usize; 4];
                for slot in &mut v {
                    *slot = lookup(field(t.next(), ln, "vertex index")?, ln)?;
                }
                let p = v.map(|i| vertices[i]);
                let signed = (p[2] - p[0]).perp(&(p[3] - p[1]));
                if signed < 0.0 {
                    v = [v[0], v[3], v[2], v[1]];
                }
                cells.push(v);
            }
            "line" => {
                let a = lookup(field(t.next(), ln, "vertex index")?, ln)?;
                let b = lookup(field(t.next(), ln, "vertex index")?, ln)?;
                lines_with_marker.push((ln, a, b, material));
            }
            other => return Err(parse_err(ln, format!("unsupported cell type '{other}'"))),
        }
    }

    let mut face_of_edge = HashMap::new();
    for (c, cell) in cells.iter().enumerate() {
        for f in 0..4 {
            let (a, b) = (cell[f], cell[(f + 1) % 4]);
            face_of_edge.insert((a.min(b), a.max(b)), (c, f));
        }
    }
    let mut markers = Vec::with_capacity(lines_with_marker.len());
    for (ln, a, b, marker) in lines_with_marker {
        let &(cell, face) = face_of_edge.get(&(a.min(b), a.max(b))).ok_or_else(|| {
            Error::Consistency(format!("line element on line {ln} is not an edge of any cell"))
        })?;
        markers.push(BoundaryFace { cell, face, marker });
    }
    Mesh::new(vertices, cells, markers, Manifold::Flat)
}

/// Serializes `mesh` with 1-based ids; every boundary face is written as a
/// `line` element carrying its marker.
pub fn write_ucd(mesh: &Mesh) -> String {
    let mut out = String::new();
    let n_elements = mesh.n_cells() + mesh.boundary_faces().len();
    let _ = writeln!(out, "{} {} 0 0 0", mesh.n_vertices(), n_elements);
    for (i, v) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(out, "{} {} {} 0", i + 1, v.x, v.y);
    }
    for (c, cell) in mesh.cells().iter().enumerate() {
        let _ = writeln!(
            out,
            "{} 0 quad {} {} {} {}",
            c + 1,
            cell[0] + 1,
            cell[1] + 1,
            cell[2] + 1,
            cell[3] + 1
        );
    }
    for (k, bf) in mesh.boundary_faces().iter().enumerate() {
        let cell = mesh.cells()[bf.cell];
        let _ = writeln!(
            out,
            "{} {} line {} {}",
            mesh.n_cells() + k + 1,
            bf.marker,
            cell[bf.face] + 1,
            cell[(bf.face + 1) % 4] + 1
        );
    }
    out
}
