//! Recording, serialization and mesh-to-mesh transfer of target
//! trajectories used by the tracking functional.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::assembly::{assemble, PhysicalParams};
use crate::error::{Error, Result};
use crate::geometry::{DiscGeometry, DomainSpec, Vec2};
use crate::mesh::{
    BoundaryEdge, BoundaryKind, InterfaceEdge, InterfaceMesh, MeshParams, MeshTriangle, Region,
};
use crate::solver::{solve_forward, TimeGrid, Trajectory};

const MAGIC: &[u8; 16] = b"DISCOPT-TARGET1\n";

/// A forward trajectory stored on its reference mesh, replayable
/// bit-identically and transferable to other meshes by point location.
#[derive(Debug, Clone)]
pub struct RecordedTarget {
    pub geometry: DiscGeometry,
    pub grid: TimeGrid,
    pub mesh: InterfaceMesh,
    /// `fields[k][node]` on the reference mesh.
    pub fields: Vec<Vec<f64>>,
}

/// Runs a forward solve at the desired geometry and wraps it for storage.
pub fn record_target(
    geom: DiscGeometry,
    domain: &DomainSpec,
    mesh_params: &MeshParams,
    params: &PhysicalParams,
    grid: &TimeGrid,
) -> Result<(RecordedTarget, Trajectory)> {
    let mesh = crate::mesh::generate_mesh(geom, domain, mesh_params)?;
    let ops = assemble(&mesh, params);
    let trajectory = solve_forward(&ops, grid, params)?;
    let recorded = RecordedTarget {
        geometry: geom,
        grid: *grid,
        mesh,
        fields: trajectory.fields.clone(),
    };
    Ok((recorded, trajectory))
}

impl RecordedTarget {
    /// Interpolates the recorded fields onto the vertices of `mesh` by
    /// barycentric point location in the reference triangulation.
    ///
    /// Each vertex belongs to exactly one region of the current mesh
    /// (interface nodes are duplicated), and its location in the reference
    /// mesh prefers that region when both sides contain the point, so the
    /// transferred field carries the correct side of the interface jump.
    pub fn transfer_to(&self, mesh: &InterfaceMesh) -> Vec<Vec<f64>> {
        let locator = self.mesh.locator();
        let mut node_region: Vec<Option<Region>> = vec![None; mesh.vertices.len()];
        for t in &mesh.triangles {
            for v in t.vertices {
                node_region[v] = Some(t.region);
            }
        }
        let placements: Vec<([usize; 3], [f64; 3])> = mesh
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let (t, bary) = locator.locate_preferring(p, node_region[i]);
                (self.mesh.triangles[t].vertices, bary)
            })
            .collect();
        self.fields
            .iter()
            .map(|field| {
                placements
                    .iter()
                    .map(|(vs, bary)| {
                        field[vs[0]] * bary[0] + field[vs[1]] * bary[1] + field[vs[2]] * bary[2]
                    })
                    .collect()
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        w.write_all(MAGIC)?;
        write_u64(&mut w, self.grid.n_steps as u64)?;
        write_f64(&mut w, self.grid.dt)?;
        write_f64(&mut w, self.geometry.center.x)?;
        write_f64(&mut w, self.geometry.center.y)?;
        write_f64(&mut w, self.geometry.radius)?;

        let mesh = &self.mesh;
        write_u64(&mut w, mesh.vertices.len() as u64)?;
        for v in &mesh.vertices {
            write_f64(&mut w, v.x)?;
            write_f64(&mut w, v.y)?;
        }
        write_u64(&mut w, mesh.triangles.len() as u64)?;
        for t in &mesh.triangles {
            for v in t.vertices {
                write_u64(&mut w, v as u64)?;
            }
            w.write_all(&[match t.region {
                Region::Matrix => 0u8,
                Region::Inclusion => 1u8,
            }])?;
        }
        write_u64(&mut w, mesh.interface_edges.len() as u64)?;
        for e in &mesh.interface_edges {
            for idx in [e.s_nodes.0, e.s_nodes.1, e.o_nodes.0, e.o_nodes.1, e.s_triangle, e.o_triangle] {
                write_u64(&mut w, idx as u64)?;
            }
            write_f64(&mut w, e.length)?;
            write_f64(&mut w, e.midpoint.x)?;
            write_f64(&mut w, e.midpoint.y)?;
            write_f64(&mut w, e.arc_angle)?;
        }
        write_u64(&mut w, mesh.boundary_edges.len() as u64)?;
        for e in &mesh.boundary_edges {
            write_u64(&mut w, e.nodes.0 as u64)?;
            write_u64(&mut w, e.nodes.1 as u64)?;
            w.write_all(&[match e.kind {
                BoundaryKind::Gamma0 => 0u8,
                BoundaryKind::GammaN => 1u8,
            }])?;
        }
        write_f64(&mut w, mesh.h)?;
        write_u64(&mut w, mesh.id)?;

        write_u64(&mut w, self.fields.len() as u64)?;
        for field in &self.fields {
            write_u64(&mut w, field.len() as u64)?;
            for &v in field {
                write_f64(&mut w, v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 16];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Config(format!(
                "{} is not a recorded target file",
                path.display()
            )));
        }
        let n_steps = read_u64(&mut r)? as usize;
        let dt = read_f64(&mut r)?;
        let center = Vec2::new(read_f64(&mut r)?, read_f64(&mut r)?);
        let radius = read_f64(&mut r)?;
        let geometry = DiscGeometry::new(center, radius)?;

        let n_vertices = read_u64(&mut r)? as usize;
        let mut vertices = Vec::with_capacity(n_vertices);
        for _ in 0..n_vertices {
            vertices.push(Vec2::new(read_f64(&mut r)?, read_f64(&mut r)?));
        }
        let n_triangles = read_u64(&mut r)? as usize;
        let mut triangles = Vec::with_capacity(n_triangles);
        for _ in 0..n_triangles {
            let vs = [
                read_u64(&mut r)? as usize,
                read_u64(&mut r)? as usize,
                read_u64(&mut r)? as usize,
            ];
            let region = match read_u8(&mut r)? {
                0 => Region::Matrix,
                1 => Region::Inclusion,
                other => {
                    return Err(Error::Config(format!("invalid region tag {other}")));
                }
            };
            triangles.push(MeshTriangle {
                vertices: vs,
                region,
            });
        }
        let n_interface = read_u64(&mut r)? as usize;
        let mut interface_edges = Vec::with_capacity(n_interface);
        for _ in 0..n_interface {
            let s0 = read_u64(&mut r)? as usize;
            let s1 = read_u64(&mut r)? as usize;
            let o0 = read_u64(&mut r)? as usize;
            let o1 = read_u64(&mut r)? as usize;
            let s_triangle = read_u64(&mut r)? as usize;
            let o_triangle = read_u64(&mut r)? as usize;
            let length = read_f64(&mut r)?;
            let midpoint = Vec2::new(read_f64(&mut r)?, read_f64(&mut r)?);
            let arc_angle = read_f64(&mut r)?;
            interface_edges.push(InterfaceEdge {
                s_nodes: (s0, s1),
                o_nodes: (o0, o1),
                length,
                midpoint,
                arc_angle,
                s_triangle,
                o_triangle,
            });
        }
        let n_boundary = read_u64(&mut r)? as usize;
        let mut boundary_edges = Vec::with_capacity(n_boundary);
        for _ in 0..n_boundary {
            let a = read_u64(&mut r)? as usize;
            let b = read_u64(&mut r)? as usize;
            let kind = match read_u8(&mut r)? {
                0 => BoundaryKind::Gamma0,
                1 => BoundaryKind::GammaN,
                other => {
                    return Err(Error::Config(format!("invalid boundary tag {other}")));
                }
            };
            boundary_edges.push(BoundaryEdge { nodes: (a, b), kind });
        }
        let h = read_f64(&mut r)?;
        let id = read_u64(&mut r)?;
        let mesh = InterfaceMesh {
            vertices,
            triangles,
            interface_edges,
            boundary_edges,
            h,
            geometry,
            id,
        };

        let n_fields = read_u64(&mut r)? as usize;
        if n_fields != n_steps + 1 {
            return Err(Error::Config(format!(
                "recorded target holds {n_fields} fields for {n_steps} steps"
            )));
        }
        let mut fields = Vec::with_capacity(n_fields);
        for _ in 0..n_fields {
            let len = read_u64(&mut r)? as usize;
            if len != mesh.vertices.len() {
                return Err(Error::Config(
                    "field length does not match mesh size".into(),
                ));
            }
            let mut field = Vec::with_capacity(len);
            for _ in 0..len {
                field.push(read_f64(&mut r)?);
            }
            fields.push(field);
        }

        Ok(RecordedTarget {
            geometry,
            grid: TimeGrid { n_steps, dt },
            mesh,
            fields,
        })
    }
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_u8<R: Read>(r: &mut R) -> std::io::Result<u8> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf)?;
    Ok(buf[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_mesh;

    fn phys() -> PhysicalParams {
        PhysicalParams {
            kappa: 100.0,
            resistance: 0.01,
            boundary_temperature: 500.0,
            horizon: 0.5,
        }
    }

    #[test]
    fn save_load_roundtrip_is_bit_identical() {
        let geom = DiscGeometry::new(Vec2::new(0.5, 0.75), 0.2).unwrap();
        let params = MeshParams {
            target_h: 0.05,
            interface_segments: 16,
            ..MeshParams::default()
        };
        let grid = TimeGrid::new(0.5, 5).unwrap();
        let (recorded, _) =
            record_target(geom, &DomainSpec::default(), &params, &phys(), &grid).unwrap();
        let dir = std::env::temp_dir().join("discopt-target-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("target.bin");
        recorded.save(&path).unwrap();
        let loaded = RecordedTarget::load(&path).unwrap();
        assert_eq!(loaded.mesh.id, recorded.mesh.id);
        assert_eq!(loaded.grid, recorded.grid);
        assert_eq!(loaded.fields.len(), recorded.fields.len());
        for (a, b) in loaded.fields.iter().zip(&recorded.fields) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn transfer_to_same_mesh_is_identity() {
        let geom = DiscGeometry::new(Vec2::new(0.5, 0.75), 0.2).unwrap();
        let params = MeshParams {
            target_h: 0.05,
            interface_segments: 16,
            ..MeshParams::default()
        };
        let grid = TimeGrid::new(0.5, 5).unwrap();
        let (recorded, _) =
            record_target(geom, &DomainSpec::default(), &params, &phys(), &grid).unwrap();
        let mesh = generate_mesh(geom, &DomainSpec::default(), &params).unwrap();
        let transferred = recorded.transfer_to(&mesh);
        for (k, field) in transferred.iter().enumerate() {
            for (node, &v) in field.iter().enumerate() {
                let reference = recorded.fields[k][node];
                assert!(
                    (v - reference).abs() <= 1e-9 * reference.abs().max(1.0),
                    "step {k} node {node}: {v} vs {reference}"
                );
            }
        }
    }

    #[test]
    fn rejects_wrong_magic() {
        let dir = std::env::temp_dir().join("discopt-target-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bogus.bin");
        std::fs::write(&path, b"not a target file at all").unwrap();
        assert!(RecordedTarget::load(&path).is_err());
        std::fs::remove_file(&path).ok();
    }
}
