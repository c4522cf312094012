use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{generate_annulus_grid, generate_disk_grid, generate_square_grid, read_ucd, Mesh, Point};

fn numbers(kind: &str, args: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(format!("{kind} mesh arguments '{args}': {e}")))?;
    if v.len() != n {
        return Err(Error::InvalidArgument(format!("{kind} mesh expects {n} arguments, got {}", v.len())));
    }
    Ok(v)
}

fn count(kind: &str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidArgument(format!("{kind} mesh subdivision count must be a positive integer, got {v}")))
    }
}

/// Builds a mesh from a descriptor and refines it `refinement` times.
///
/// Accepted descriptors:
/// - `square:x0,y0,l,n` square `[x0, x0+l] x [y0, y0+l]` with `n x n` cells
/// - `annulus:cx,cy,R,w,nr,nt` polar grid of the annulus `R <= r <= R + w`
/// - `disk:cx,cy,R` five-cell disk
/// - anything else is a UCD file path, relative paths resolved against `base_dir`
pub fn load_mesh(descriptor: &str, refinement: usize, base_dir: &Path) -> Result<Mesh> {
    let coarse = match descriptor.split_once(':') {
        Some(("square", a)) => {
            let v = numbers("square", a, 4)?;
            generate_square_grid(Point::new(v[0], v[1]), v[2], count("square", v[3])?)?
        }
        Some(("annulus", a)) => {
            let v = numbers("annulus", a, 6)?;
            generate_annulus_grid(Point::new(v[0], v[1]), v[2], v[3], count("annulus", v[4])?, count("annulus", v[5])?)?
        }
        Some(("disk", a)) => {
            let v = numbers("disk", a, 3)?;
            generate_disk_grid(Point::new(v[0], v[1]), v[2])?
        }
        _ => {
            let path = base_dir.join(descriptor);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            read_ucd(&text)?
        }
    };
    Ok(coarse.refine_globally(refinement))
}
