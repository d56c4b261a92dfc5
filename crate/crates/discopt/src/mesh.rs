//! Fitted triangulation of the two-material square.
//!
//! The circle is discretized as a regular inscribed polygon whose edges are
//! enforced in a constrained Delaunay triangulation, so every triangle lies
//! entirely in the matrix region `S` or in the inclusion `O`. Interface
//! vertices are then duplicated (one id per side, identical coordinates) so
//! discrete fields may jump across the interface.
//!
//! Point layout around the moving circle is designed to vary smoothly with
//! the disc center: a fixed staggered background lattice is radially
//! compressed away from an exclusion band around the circle, and one
//! structured collar ring per side (offset half a segment) provides the
//! interface-adjacent triangles. Points therefore slide continuously as the
//! center moves, which keeps finite-difference checks of the shape gradient
//! out of the remeshing noise.

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{DiscGeometry, DomainSpec, Vec2};

/// Mesh resolution parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    /// Target edge length of the background lattice.
    pub target_h: f64,
    /// Number of segments of the interface polygon.
    pub interface_segments: usize,
    /// Relative jitter amplitude (fraction of `target_h`) applied to
    /// interior lattice points; 0 keeps generation fully deterministic.
    pub jitter: f64,
    /// Seed for the jitter stream.
    pub jitter_seed: u64,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            target_h: 0.02,
            interface_segments: 64,
            jitter: 0.0,
            jitter_seed: 0,
        }
    }
}

/// Region tag of a triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Matrix material `S` (conductivity 1).
    Matrix,
    /// Disc inclusion `O` (conductivity κ).
    Inclusion,
}

#[derive(Debug, Clone, Copy)]
pub struct MeshTriangle {
    pub vertices: [usize; 3],
    pub region: Region,
}

/// One segment of the duplicated interface polygon.
///
/// `s_nodes`/`o_nodes` are index pairs on the matrix/inclusion side; paired
/// entries have bitwise-identical coordinates.
#[derive(Debug, Clone, Copy)]
pub struct InterfaceEdge {
    pub s_nodes: (usize, usize),
    pub o_nodes: (usize, usize),
    pub length: f64,
    pub midpoint: Vec2,
    /// Polar angle of the midpoint around the disc center.
    pub arc_angle: f64,
    pub s_triangle: usize,
    pub o_triangle: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Heated bottom `y = 0`.
    Gamma0,
    /// Insulated remainder of the square boundary.
    GammaN,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub nodes: (usize, usize),
    pub kind: BoundaryKind,
}

/// Triangulation of the unit square fitted to the disc interface.
#[derive(Debug, Clone)]
pub struct InterfaceMesh {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<MeshTriangle>,
    pub interface_edges: Vec<InterfaceEdge>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub h: f64,
    pub geometry: DiscGeometry,
    /// Deterministic fingerprint used to detect mesh/data mismatches.
    pub id: u64,
}

/// Midpoint-rule quadrature point on the interface.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    /// Chord midpoint radially projected onto the circle (frame evaluation).
    pub position: Vec2,
    /// Chord midpoint (field evaluation; lies on the mesh edge).
    pub chord_midpoint: Vec2,
    pub weight: f64,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub arc_angle: f64,
}

fn smoothstep01(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

struct PointCloud {
    coords: Vec<Vec2>,
    /// Index of the first interface polygon vertex; the polygon occupies
    /// `poly_start .. poly_start + n_segments` in counterclockwise order.
    poly_start: usize,
}

fn build_points(geom: DiscGeometry, params: &MeshParams) -> PointCloud {
    let h = params.target_h;
    let n_seg = params.interface_segments;
    let c = geom.center;
    let r = geom.radius;

    let seg_len = 2.0 * r * (std::f64::consts::PI / n_seg as f64).sin();
    // collar offset and lattice exclusion band around the circle
    let d_collar = 0.75 * seg_len.min(1.2 * h);
    let gap = d_collar + 0.75 * h;
    let band_out = gap + 1.5 * h;
    let band_in = band_out.min(0.8 * r);
    let gap_in = gap.min(0.6 * band_in);
    let delete_tol = d_collar + 0.35 * h;

    let wall_eta = |p: Vec2| -> f64 {
        let d_wall = p.x.min(1.0 - p.x).min(p.y).min(1.0 - p.y);
        smoothstep01(d_wall / (2.0 * h))
    };

    let mut coords: Vec<Vec2> = Vec::new();

    // --- background lattice (staggered rows) ---
    let n_cols = (1.0 / h).round().max(4.0) as usize;
    let hx = 1.0 / n_cols as f64;
    let n_rows = (1.0 / (h * 3f64.sqrt() / 2.0)).round().max(4.0) as usize;
    let hy = 1.0 / n_rows as f64;

    let mut rng = params.jitter_seed;
    for j in 0..=n_rows {
        let y = j as f64 * hy;
        let offset_row = j % 2 == 1 && j != n_rows;
        let row_xs: Vec<f64> = if offset_row {
            std::iter::once(0.0)
                .chain((0..n_cols).map(|i| (i as f64 + 0.5) * hx))
                .chain(std::iter::once(1.0))
                .collect()
        } else {
            (0..=n_cols).map(|i| i as f64 * hx).collect()
        };
        for x in row_xs {
            let mut p = Vec2::new(x, y);
            let interior = x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0;
            if params.jitter > 0.0 && interior {
                let ux = unit_f64(splitmix64(&mut rng));
                let uy = unit_f64(splitmix64(&mut rng));
                p.x += params.jitter * h * (2.0 * ux - 1.0);
                p.y += params.jitter * h * (2.0 * uy - 1.0);
            } else if params.jitter > 0.0 {
                // keep the stream aligned whether or not the point moves
                splitmix64(&mut rng);
                splitmix64(&mut rng);
            }

            let d = p - c;
            let rho = d.norm();
            let sigma = rho - r;
            let (band, gap_side) = if sigma >= 0.0 {
                (band_out, gap)
            } else {
                (band_in, gap_in)
            };
            if sigma.abs() < band && rho > 1e-12 {
                // compress the band radially away from the circle
                let target = sigma.signum() * (gap_side + sigma.abs() * (band - gap_side) / band);
                let eta = wall_eta(p);
                let d_wall = p.x.min(1.0 - p.x).min(p.y).min(1.0 - p.y);
                let shift = ((target - sigma) * eta).clamp(-0.5 * d_wall, 0.5 * d_wall);
                let q = p + d * (shift / rho);
                // drop points the wall taper left too close to the interface
                if ((q - c).norm() - r).abs() < delete_tol {
                    continue;
                }
                coords.push(q);
            } else {
                coords.push(p);
            }
        }
    }

    // --- interface polygon (counterclockwise, first vertex at the top) ---
    let poly_start = coords.len();
    let two_pi = std::f64::consts::TAU;
    for k in 0..n_seg {
        let theta = std::f64::consts::FRAC_PI_2 + two_pi * k as f64 / n_seg as f64;
        coords.push(c + Vec2::new(theta.cos(), theta.sin()) * r);
    }

    // --- collar rings, offset by half a segment ---
    for sign in [-1.0, 1.0] {
        for k in 0..n_seg {
            let theta = std::f64::consts::FRAC_PI_2 + two_pi * (k as f64 + 0.5) / n_seg as f64;
            let dir = Vec2::new(theta.cos(), theta.sin());
            let probe = c + dir * (r + sign * d_collar);
            let eta = wall_eta(probe);
            if eta < 0.5 {
                continue;
            }
            coords.push(c + dir * (r + sign * d_collar * eta));
        }
    }

    PointCloud { coords, poly_start }
}

/// Generates the fitted triangulation with duplicated interface vertices.
///
/// Deterministic for fixed inputs.
pub fn generate_mesh(
    geom: DiscGeometry,
    domain: &DomainSpec,
    params: &MeshParams,
) -> Result<InterfaceMesh> {
    geom.validate_interior(domain.margin)?;
    if params.interface_segments < 16 {
        return Err(Error::Meshing(format!(
            "interface_segments must be >= 16, got {}",
            params.interface_segments
        )));
    }
    if !(params.target_h > 0.0) || params.target_h > geom.radius / 2.0 {
        return Err(Error::Meshing(format!(
            "target_h {} must be positive and at most radius/2 = {}",
            params.target_h,
            geom.radius / 2.0
        )));
    }
    if !(0.0..=0.3).contains(&params.jitter) {
        return Err(Error::Meshing(format!(
            "jitter {} outside [0, 0.3]",
            params.jitter
        )));
    }

    let cloud = build_points(geom, params);
    let n_seg = params.interface_segments;
    let n_points = cloud.coords.len();

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(n_points);
    for p in &cloud.coords {
        let handle = cdt
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::Meshing(format!("point insertion failed: {e:?}")))?;
        handles.push(handle);
    }
    if cdt.num_vertices() != n_points {
        return Err(Error::Meshing(
            "coincident points in generated cloud".into(),
        ));
    }
    for k in 0..n_seg {
        let a = handles[cloud.poly_start + k];
        let b = handles[cloud.poly_start + (k + 1) % n_seg];
        cdt.add_constraint(a, b);
    }

    // --- extract triangles, tag regions by centroid ---
    let c = geom.center;
    let r = geom.radius;
    let polygon: Vec<Vec2> = (0..n_seg)
        .map(|k| cloud.coords[cloud.poly_start + k])
        .collect();
    let seg_len = 2.0 * r * (std::f64::consts::PI / n_seg as f64).sin();
    let inside_polygon = |q: Vec2| -> bool {
        let rho = (q - c).norm();
        if rho < r - seg_len {
            return true;
        }
        if rho > r + seg_len {
            return false;
        }
        (0..n_seg).all(|k| {
            let a = polygon[k];
            let b = polygon[(k + 1) % n_seg];
            (b - a).cross(q - a) > 0.0
        })
    };

    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    let mut face_pos = vec![usize::MAX; cdt.num_all_faces()];
    for (t, face) in cdt.inner_faces().enumerate() {
        face_pos[face.index()] = t;
        let vs = face.vertices().map(|v| v.index());
        let [a, b, cc] = face.positions();
        let centroid = Vec2::new((a.x + b.x + cc.x) / 3.0, (a.y + b.y + cc.y) / 3.0);
        let region = if inside_polygon(centroid) {
            Region::Inclusion
        } else {
            Region::Matrix
        };
        triangles.push(MeshTriangle {
            vertices: vs,
            region,
        });
    }

    // --- interface adjacency (before duplication) ---
    let mut interface_edges = Vec::with_capacity(n_seg);
    for k in 0..n_seg {
        let ia = cloud.poly_start + k;
        let ib = cloud.poly_start + (k + 1) % n_seg;
        let edge = cdt
            .get_edge_from_neighbors(handles[ia], handles[ib])
            .ok_or_else(|| Error::Meshing(format!("interface segment {k} missing from mesh")))?;
        // polygon is counterclockwise: the left face of a->b is inside O
        let o_face = edge
            .face()
            .as_inner()
            .ok_or_else(|| Error::Meshing(format!("interface segment {k} borders outer face")))?;
        let s_face = edge
            .rev()
            .face()
            .as_inner()
            .ok_or_else(|| Error::Meshing(format!("interface segment {k} borders outer face")))?;
        let o_triangle = face_pos[o_face.index()];
        let s_triangle = face_pos[s_face.index()];
        if triangles[o_triangle].region != Region::Inclusion
            || triangles[s_triangle].region != Region::Matrix
        {
            return Err(Error::Meshing(format!(
                "region tags inconsistent across interface segment {k}"
            )));
        }
        let pa = cloud.coords[ia];
        let pb = cloud.coords[ib];
        let midpoint = (pa + pb) * 0.5;
        let rel = midpoint - c;
        interface_edges.push(InterfaceEdge {
            s_nodes: (ia, ib),
            o_nodes: (0, 0), // filled after duplication
            length: (pb - pa).norm(),
            midpoint,
            arc_angle: rel.y.atan2(rel.x),
            s_triangle,
            o_triangle,
        });
    }

    // --- duplicate interface vertices for the inclusion side ---
    let mut vertices = cloud.coords;
    let dup_start = vertices.len();
    for k in 0..n_seg {
        let p = vertices[cloud.poly_start + k];
        vertices.push(p);
    }
    let dup_of = |v: usize| -> usize {
        if (cloud.poly_start..cloud.poly_start + n_seg).contains(&v) {
            dup_start + (v - cloud.poly_start)
        } else {
            v
        }
    };
    for tri in triangles.iter_mut() {
        if tri.region == Region::Inclusion {
            for v in tri.vertices.iter_mut() {
                *v = dup_of(*v);
            }
        }
    }
    for (k, edge) in interface_edges.iter_mut().enumerate() {
        edge.o_nodes = (
            dup_start + k,
            dup_start + (k + 1) % n_seg,
        );
    }

    // --- boundary edges from the convex hull ---
    let mut boundary_edges = Vec::new();
    for edge in cdt.convex_hull() {
        let a = edge.from().index();
        let b = edge.to().index();
        let kind = if vertices[a].y == 0.0 && vertices[b].y == 0.0 {
            BoundaryKind::Gamma0
        } else {
            BoundaryKind::GammaN
        };
        boundary_edges.push(BoundaryEdge { nodes: (a, b), kind });
    }

    let mut mesh = InterfaceMesh {
        vertices,
        triangles,
        interface_edges,
        boundary_edges,
        h: params.target_h,
        geometry: geom,
        id: 0,
    };
    mesh.enforce_orientation();
    mesh.validate()?;
    mesh.id = mesh.fingerprint();
    Ok(mesh)
}

impl InterfaceMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].vertices;
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * (pb - pa).cross(pc - pa)
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.triangles[t].region == region)
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Vertices on the heated bottom side.
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| self.vertices[v].y == 0.0)
            .collect()
    }

    fn enforce_orientation(&mut self) {
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) < 0.0 {
                self.triangles[t].vertices.swap(1, 2);
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let min_area = 1e-3 * self.h * self.h;
        for t in 0..self.triangles.len() {
            let area = self.triangle_area(t);
            if area < min_area {
                return Err(Error::Meshing(format!(
                    "triangle {t} area {area} below threshold {min_area}"
                )));
            }
        }
        for (k, e) in self.interface_edges.iter().enumerate() {
            let ps = (self.vertices[e.s_nodes.0], self.vertices[e.s_nodes.1]);
            let po = (self.vertices[e.o_nodes.0], self.vertices[e.o_nodes.1]);
            if ps.0 != po.0 || ps.1 != po.1 {
                return Err(Error::Meshing(format!(
                    "interface segment {k}: side coordinates are not identical"
                )));
            }
        }
        for e in &self.boundary_edges {
            if e.kind == BoundaryKind::Gamma0
                && (self.vertices[e.nodes.0].y != 0.0 || self.vertices[e.nodes.1].y != 0.0)
            {
                return Err(Error::Meshing("Gamma0 edge off the bottom side".into()));
            }
        }
        Ok(())
    }

    fn fingerprint(&self) -> u64 {
        let mut state = 0xd15c_0b7e_u64 ^ ((self.vertices.len() as u64) << 32) ^ self.triangles.len() as u64;
        let mut mix = |v: u64| {
            state ^= v;
            state = splitmix64(&mut state);
        };
        for v in &self.vertices {
            mix(v.x.to_bits());
            mix(v.y.to_bits());
        }
        for t in &self.triangles {
            mix(t.vertices[0] as u64 ^ (t.vertices[1] as u64) << 21 ^ (t.vertices[2] as u64) << 42);
        }
        mix(self.h.to_bits());
        state
    }

    /// Midpoint-rule quadrature along the interface polygon; weights sum to
    /// the polygon perimeter, frames are evaluated on the true circle.
    pub fn interface_quadrature(&self) -> Vec<QuadPoint> {
        let c = self.geometry.center;
        let r = self.geometry.radius;
        self.interface_edges
            .iter()
            .map(|e| {
                let rel = e.midpoint - c;
                let on_circle = c + rel * (r / rel.norm());
                let frame = self
                    .geometry
                    .interface_frame(on_circle)
                    .expect("projected midpoint lies on the circle");
                QuadPoint {
                    position: on_circle,
                    chord_midpoint: e.midpoint,
                    weight: e.length,
                    tangent: frame.tangent,
                    normal: frame.normal,
                    arc_angle: e.arc_angle,
                }
            })
            .collect()
    }

    /// P1 barycentric coordinates of `p` in triangle `t`.
    pub fn barycentric(&self, t: usize, p: Vec2) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].vertices;
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let area2 = (pb - pa).cross(pc - pa);
        [
            (pb - p).cross(pc - p) / area2,
            (pc - p).cross(pa - p) / area2,
            (pa - p).cross(pb - p) / area2,
        ]
    }

    pub fn locator(&self) -> PointLocator<'_> {
        PointLocator::new(self)
    }
}

/// Uniform-grid point-location accelerator.
pub struct PointLocator<'a> {
    mesh: &'a InterfaceMesh,
    cells: Vec<Vec<usize>>,
    nx: usize,
    ny: usize,
}

impl<'a> PointLocator<'a> {
    fn new(mesh: &'a InterfaceMesh) -> Self {
        let nx = ((1.0 / (2.0 * mesh.h)).ceil() as usize).max(1);
        let ny = nx;
        let mut cells = vec![Vec::new(); nx * ny];
        let clamp_cell = |v: f64, n: usize| -> usize {
            ((v * n as f64).floor() as isize).clamp(0, n as isize - 1) as usize
        };
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.triangles[t].vertices;
            let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            let (x0, x1) = (
                pa.x.min(pb.x).min(pc.x),
                pa.x.max(pb.x).max(pc.x),
            );
            let (y0, y1) = (
                pa.y.min(pb.y).min(pc.y),
                pa.y.max(pb.y).max(pc.y),
            );
            for ix in clamp_cell(x0, nx)..=clamp_cell(x1, nx) {
                for iy in clamp_cell(y0, ny)..=clamp_cell(y1, ny) {
                    cells[iy * nx + ix].push(t);
                }
            }
        }
        PointLocator {
            mesh,
            cells,
            nx,
            ny,
        }
    }

    /// Containing triangle and barycentric coordinates. Points marginally
    /// outside the mesh (roundoff) fall back to the least-violating
    /// candidate over all triangles.
    pub fn locate(&self, p: Vec2) -> (usize, [f64; 3]) {
        self.locate_preferring(p, None)
    }

    /// Like [`locate`](Self::locate), but when the point lies on the
    /// interface (both sides contain it) the triangle of `preferred` region
    /// wins. Fields jump across the interface, so the caller must pick the
    /// side its data lives on.
    pub fn locate_preferring(&self, p: Vec2, preferred: Option<Region>) -> (usize, [f64; 3]) {
        let clamp_cell = |v: f64, n: usize| -> usize {
            ((v * n as f64).floor() as isize).clamp(0, n as isize - 1) as usize
        };
        let cell = &self.cells[clamp_cell(p.y, self.ny) * self.nx + clamp_cell(p.x, self.nx)];
        let mut containing: Option<(usize, [f64; 3])> = None;
        for &t in cell {
            let bary = self.mesh.barycentric(t, p);
            if bary.iter().all(|&l| l >= -1e-12) {
                if preferred.is_none() || Some(self.mesh.triangles[t].region) == preferred {
                    return (t, bary);
                }
                if containing.is_none() {
                    containing = Some((t, bary));
                }
            }
        }
        if let Some(hit) = containing {
            return hit;
        }
        // fallback: scan everything for the least violation; a preferred
        // triangle wins only if it is essentially as close as the best
        let mut best = (0usize, [0.0; 3], f64::NEG_INFINITY);
        let mut best_pref = (0usize, [0.0; 3], f64::NEG_INFINITY);
        for t in 0..self.mesh.triangles.len() {
            let bary = self.mesh.barycentric(t, p);
            let worst = bary.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst > best.2 {
                best = (t, bary, worst);
            }
            if Some(self.mesh.triangles[t].region) == preferred && worst > best_pref.2 {
                best_pref = (t, bary, worst);
            }
        }
        if preferred.is_some() && best_pref.2 >= best.2 - 1e-9 {
            (best_pref.0, best_pref.1)
        } else {
            (best.0, best.1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiscGeometry;

    fn default_geom() -> DiscGeometry {
        DiscGeometry::new(Vec2::new(0.5, 0.6), 0.2).unwrap()
    }

    fn build(geom: DiscGeometry, params: &MeshParams) -> InterfaceMesh {
        generate_mesh(geom, &DomainSpec::default(), params).unwrap()
    }

    #[test]
    fn perimeter_matches_inscribed_polygon() {
        let mesh = build(default_geom(), &MeshParams::default());
        let total: f64 = mesh.interface_edges.iter().map(|e| e.length).sum();
        let expected = 2.0 * 64.0 * 0.2 * (std::f64::consts::PI / 64.0).sin();
        assert!(
            (total - expected).abs() < 1e-12 * expected,
            "perimeter {total} vs {expected}"
        );
        assert!((total - 1.2561).abs() < 1e-3);
    }

    #[test]
    fn quadrature_weights_sum_to_perimeter_and_normals_cancel() {
        let mesh = build(default_geom(), &MeshParams::default());
        let quad = mesh.interface_quadrature();
        let total: f64 = quad.iter().map(|q| q.weight).sum();
        let expected: f64 = mesh.interface_edges.iter().map(|e| e.length).sum();
        assert!((total - expected).abs() < 1e-13);
        let moment = quad
            .iter()
            .fold(Vec2::default(), |acc, q| acc + q.normal * q.weight);
        assert!(moment.x.abs() < 1e-12, "sum n_x = {}", moment.x);
        assert!(moment.y.abs() < 1e-12, "sum n_y = {}", moment.y);
        for q in &quad {
            assert!(q.tangent.dot(q.normal).abs() < 1e-14);
        }
    }

    #[test]
    fn inclusion_area_matches_polygon_and_circle() {
        let mesh = build(default_geom(), &MeshParams::default());
        let n = 64.0;
        let r = 0.2;
        let area_o = mesh.region_area(Region::Inclusion);
        let poly_area = 0.5 * n * r * r * (std::f64::consts::TAU / n).sin();
        assert!(
            (area_o - poly_area).abs() < 1e-12,
            "area {area_o} vs polygon {poly_area}"
        );
        let sagitta = r * (1.0 - (std::f64::consts::PI / n).cos());
        let circle_area = std::f64::consts::PI * r * r;
        assert!((area_o - circle_area).abs() <= std::f64::consts::TAU * r * sagitta);
        // both regions together tile the unit square
        let area_s = mesh.region_area(Region::Matrix);
        assert!((area_s + area_o - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_disc_touching_boundary() {
        let geom = DiscGeometry::new(Vec2::new(0.5, 0.2), 0.2).unwrap();
        let err = generate_mesh(geom, &DomainSpec::default(), &MeshParams::default()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleGeometry(_)));
    }

    #[test]
    fn rejects_coarse_h() {
        let params = MeshParams {
            target_h: 0.15,
            ..MeshParams::default()
        };
        let err = generate_mesh(default_geom(), &DomainSpec::default(), &params).unwrap_err();
        assert!(matches!(err, Error::Meshing(_)));
    }

    #[test]
    fn duplicated_interface_nodes_are_bitwise_equal_and_disjoint() {
        let mesh = build(default_geom(), &MeshParams::default());
        let n_seg = mesh.interface_edges.len();
        assert_eq!(n_seg, 64);
        let mut s_ids = std::collections::BTreeSet::new();
        let mut o_ids = std::collections::BTreeSet::new();
        for e in &mesh.interface_edges {
            assert_eq!(mesh.vertices[e.s_nodes.0], mesh.vertices[e.o_nodes.0]);
            assert_eq!(mesh.vertices[e.s_nodes.1], mesh.vertices[e.o_nodes.1]);
            s_ids.insert(e.s_nodes.0);
            s_ids.insert(e.s_nodes.1);
            o_ids.insert(e.o_nodes.0);
            o_ids.insert(e.o_nodes.1);
        }
        assert_eq!(s_ids.len(), n_seg);
        assert_eq!(o_ids.len(), n_seg);
        assert!(s_ids.is_disjoint(&o_ids));
        // no inclusion triangle touches an S-side interface id and vice versa
        for t in &mesh.triangles {
            for v in t.vertices {
                match t.region {
                    Region::Inclusion => assert!(!s_ids.contains(&v)),
                    Region::Matrix => assert!(!o_ids.contains(&v)),
                }
            }
        }
    }

    #[test]
    fn triangles_positively_oriented_with_area_floor() {
        let mesh = build(default_geom(), &MeshParams::default());
        let floor = 1e-3 * mesh.h * mesh.h;
        for t in 0..mesh.triangles.len() {
            let area = mesh.triangle_area(t);
            assert!(area >= floor, "triangle {t} area {area}");
        }
    }

    #[test]
    fn gamma0_edges_on_bottom() {
        let mesh = build(default_geom(), &MeshParams::default());
        let n_gamma0 = mesh
            .boundary_edges
            .iter()
            .filter(|e| e.kind == BoundaryKind::Gamma0)
            .count();
        assert!(n_gamma0 > 10);
        for e in &mesh.boundary_edges {
            if e.kind == BoundaryKind::Gamma0 {
                assert_eq!(mesh.vertices[e.nodes.0].y, 0.0);
                assert_eq!(mesh.vertices[e.nodes.1].y, 0.0);
            }
        }
        assert!(!mesh.dirichlet_nodes().is_empty());
    }

    #[test]
    fn vertex_set_mirror_symmetric_for_centered_disc() {
        let mesh = build(default_geom(), &MeshParams::default());
        // nearest-vertex search via sorted y buckets
        let mut by_y: Vec<(f64, f64)> = mesh.vertices.iter().map(|v| (v.y, v.x)).collect();
        by_y.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for v in &mesh.vertices {
            let target = (v.y, 1.0 - v.x);
            let idx = by_y.partition_point(|&(y, _)| y < target.0 - 1e-10);
            let found = by_y[idx..]
                .iter()
                .take_while(|&&(y, _)| y <= target.0 + 1e-10)
                .any(|&(y, x)| (y - target.0).abs() <= 1e-12 && (x - target.1).abs() <= 1e-12);
            assert!(found, "no mirror partner for ({}, {})", v.x, v.y);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = build(default_geom(), &MeshParams::default());
        let b = build(default_geom(), &MeshParams::default());
        assert_eq!(a.id, b.id);
        assert_eq!(a.vertices.len(), b.vertices.len());
        for (va, vb) in a.vertices.iter().zip(&b.vertices) {
            assert_eq!(va.x.to_bits(), vb.x.to_bits());
            assert_eq!(va.y.to_bits(), vb.y.to_bits());
        }
    }

    #[test]
    fn jitter_changes_mesh_but_same_seed_reproduces() {
        let base = MeshParams::default();
        let j1 = MeshParams {
            jitter: 0.05,
            jitter_seed: 1,
            ..base
        };
        let j1b = MeshParams {
            jitter: 0.05,
            jitter_seed: 1,
            ..base
        };
        let j2 = MeshParams {
            jitter: 0.05,
            jitter_seed: 2,
            ..base
        };
        let m1 = build(default_geom(), &j1);
        let m1b = build(default_geom(), &j1b);
        let m2 = build(default_geom(), &j2);
        assert_eq!(m1.id, m1b.id);
        assert_ne!(m1.id, m2.id);
    }

    #[test]
    fn refinement_shrinks_polygon_area_error() {
        let geom = default_geom();
        let circle_area = std::f64::consts::PI * geom.radius * geom.radius;
        let mut errs = Vec::new();
        for (h, n) in [(0.04, 32), (0.02, 64), (0.01, 128)] {
            let params = MeshParams {
                target_h: h,
                interface_segments: n,
                ..MeshParams::default()
            };
            let mesh = build(geom, &params);
            errs.push((mesh.region_area(Region::Inclusion) - circle_area).abs());
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "errors {errs:?}");
        // inscribed-polygon error quarters when the segment count doubles
        let ratio = errs[0] / errs[1];
        assert!(ratio > 2.5 && ratio < 6.0, "ratio {ratio}");
    }

    #[test]
    fn locator_finds_containing_triangles() {
        let mesh = build(default_geom(), &MeshParams::default());
        let locator = mesh.locator();
        for &p in &[
            Vec2::new(0.5, 0.6),   // disc center
            Vec2::new(0.1, 0.1),   // matrix corner
            Vec2::new(0.5, 0.405), // just below the interface
        ] {
            let (t, bary) = locator.locate(p);
            assert!(bary.iter().all(|&l| l >= -1e-9));
            let [a, b, c] = mesh.triangles[t].vertices;
            let q = mesh.vertices[a] * bary[0] + mesh.vertices[b] * bary[1] + mesh.vertices[c] * bary[2];
            assert!((q - p).norm() < 1e-10);
        }
        let (t_in, _) = locator.locate(Vec2::new(0.5, 0.6));
        assert_eq!(mesh.triangles[t_in].region, Region::Inclusion);
        let (t_out, _) = locator.locate(Vec2::new(0.1, 0.1));
        assert_eq!(mesh.triangles[t_out].region, Region::Matrix);
    }
}
