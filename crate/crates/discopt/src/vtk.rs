//! Legacy ASCII VTK output (UNSTRUCTURED_GRID) for meshes and nodal fields.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::mesh::{InterfaceMesh, Region};

/// Writes the mesh with its region tag as cell data and, optionally, a
/// nodal scalar field as point data.
pub fn write_vtk<W: Write>(
    out: &mut W,
    mesh: &InterfaceMesh,
    field: Option<(&str, &[f64])>,
) -> std::io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "two-material disc mesh")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.vertices.len())?;
    for v in &mesh.vertices {
        writeln!(out, "{:.16e} {:.16e} 0.0", v.x, v.y)?;
    }
    let n_tri = mesh.triangles.len();
    writeln!(out, "CELLS {} {}", n_tri, 4 * n_tri)?;
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t.vertices[0], t.vertices[1], t.vertices[2])?;
    }
    writeln!(out, "CELL_TYPES {n_tri}")?;
    for _ in 0..n_tri {
        writeln!(out, "5")?;
    }
    writeln!(out, "CELL_DATA {n_tri}")?;
    writeln!(out, "SCALARS region int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for t in &mesh.triangles {
        writeln!(
            out,
            "{}",
            match t.region {
                Region::Matrix => 0,
                Region::Inclusion => 1,
            }
        )?;
    }
    if let Some((name, values)) = field {
        writeln!(out, "POINT_DATA {}", mesh.vertices.len())?;
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(out, "{v:.16e}")?;
        }
    }
    Ok(())
}

/// Writes one trajectory step to `field_{kind}_{k:04}.vtk` in `dir`.
pub fn write_field_step(
    dir: &Path,
    mesh: &InterfaceMesh,
    kind: &str,
    step: usize,
    values: &[f64],
) -> Result<()> {
    let path = dir.join(format!("field_{kind}_{step:04}.vtk"));
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_vtk(&mut file, mesh, Some(("temperature", values)))?;
    Ok(())
}
