//! P1 assembly of the time-independent operators: mass, κ-weighted
//! stiffness, and the interface jump matrix coupling the duplicated node
//! pairs, plus symmetric Dirichlet elimination on the heated side.

use crate::error::{Error, Result};
use crate::mesh::{InterfaceMesh, Region};
use crate::sparse::{BandCholesky, CooMatrix, CsrMatrix};

/// Physical constants of the two-material problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Conductivity of the inclusion relative to the matrix (> 1).
    pub kappa: f64,
    /// Interfacial thermal resistance (> 0).
    pub resistance: f64,
    /// Imposed temperature on the bottom side.
    pub boundary_temperature: f64,
    /// Simulation horizon (> 0).
    pub horizon: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 1.0) {
            return Err(Error::Config(format!("kappa must exceed 1, got {}", self.kappa)));
        }
        if !(self.resistance > 0.0) {
            return Err(Error::Config(format!(
                "resistance must be positive, got {}",
                self.resistance
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Assembled sparse operators of the variational form.
#[derive(Debug, Clone)]
pub struct SystemOperators {
    /// Mass matrix over both regions.
    pub mass: CsrMatrix,
    /// Stiffness with weight 1 on the matrix region and κ on the inclusion.
    pub stiffness: CsrMatrix,
    /// Interface jump matrix `(1/R)∫ [v][w]` over the duplicated pairs.
    pub jump: CsrMatrix,
    /// Mass restricted to matrix-region elements (tracking integrals).
    pub mass_matrix_region: CsrMatrix,
    /// Vertex ids on the heated bottom side.
    pub dirichlet_nodes: Vec<usize>,
    /// Mesh fingerprint the operators were assembled on.
    pub mesh_id: u64,
    pub n: usize,
}

/// Element contributions of a P1 triangle: area and basis gradients.
pub(crate) fn p1_element(
    mesh: &InterfaceMesh,
    t: usize,
) -> ([usize; 3], f64, [f64; 3], [f64; 3]) {
    let vs = mesh.triangles[t].vertices;
    let [a, b, c] = vs.map(|v| mesh.vertices[v]);
    let area2 = (b - a).cross(c - a);
    let area = 0.5 * area2;
    // ∇φ_i = (b_i, c_i): opposite-edge normals scaled by 1/(2A)
    let bs = [
        (b.y - c.y) / area2,
        (c.y - a.y) / area2,
        (a.y - b.y) / area2,
    ];
    let cs = [
        (c.x - b.x) / area2,
        (a.x - c.x) / area2,
        (b.x - a.x) / area2,
    ];
    (vs, area, bs, cs)
}

/// Assembles mass, stiffness, jump and matrix-region mass operators.
///
/// Entry accumulation order is deterministic and transpose-paired, so all
/// operators come out bitwise symmetric.
pub fn assemble(mesh: &InterfaceMesh, params: &PhysicalParams) -> SystemOperators {
    let n = mesh.num_vertices();
    let mut mass = CooMatrix::new(n);
    let mut stiffness = CooMatrix::new(n);
    let mut mass_s = CooMatrix::new(n);

    for t in 0..mesh.triangles.len() {
        let (vs, area, bs, cs) = p1_element(mesh, t);
        let weight = match mesh.triangles[t].region {
            Region::Matrix => 1.0,
            Region::Inclusion => params.kappa,
        };
        for i in 0..3 {
            for j in 0..3 {
                let m = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                mass.push(vs[i], vs[j], m);
                if mesh.triangles[t].region == Region::Matrix {
                    mass_s.push(vs[i], vs[j], m);
                }
                let k = weight * area * (bs[i] * bs[j] + cs[i] * cs[j]);
                stiffness.push(vs[i], vs[j], k);
            }
        }
    }

    let mut jump = CooMatrix::new(n);
    let inv_r = 1.0 / params.resistance;
    for e in &mesh.interface_edges {
        // 2-point edge mass [ℓ/3, ℓ/6; ℓ/6, ℓ/3] expanded over the four
        // coupled unknowns with jump signs (+O, −S)
        let nodes = [e.o_nodes.0, e.o_nodes.1, e.s_nodes.0, e.s_nodes.1];
        let signs = [1.0, 1.0, -1.0, -1.0];
        let mass_edge = |i: usize, j: usize| -> f64 {
            // indices 0/1 and 2/3 refer to the same geometric endpoints
            if i % 2 == j % 2 {
                e.length / 3.0
            } else {
                e.length / 6.0
            }
        };
        for i in 0..4 {
            for j in 0..4 {
                jump.push(
                    nodes[i],
                    nodes[j],
                    inv_r * signs[i] * signs[j] * mass_edge(i, j),
                );
            }
        }
    }

    SystemOperators {
        mass: mass.to_csr(),
        stiffness: stiffness.to_csr(),
        jump: jump.to_csr(),
        mass_matrix_region: mass_s.to_csr(),
        dirichlet_nodes: mesh.dirichlet_nodes(),
        mesh_id: mesh.id,
        n,
    }
}

impl SystemOperators {
    /// `M + dt (K + B)`, the backward Euler step matrix.
    pub fn step_matrix(&self, dt: f64) -> CsrMatrix {
        CsrMatrix::scaled_sum(&[(1.0, &self.mass), (dt, &self.stiffness), (dt, &self.jump)])
    }

    /// `K + B`, the composite bilinear form.
    pub fn composite_form(&self) -> CsrMatrix {
        CsrMatrix::scaled_sum(&[(1.0, &self.stiffness), (1.0, &self.jump)])
    }
}

/// A factorized linear system with Dirichlet rows eliminated symmetrically.
///
/// Solves return full-length vectors that carry the boundary value on the
/// constrained nodes exactly.
#[derive(Debug)]
pub struct ConstrainedSystem {
    factor: BandCholesky,
    /// Couplings (free row, constrained col, value) removed by elimination.
    coupling: Vec<(usize, usize, f64)>,
    dirichlet: Vec<usize>,
    value: f64,
    n: usize,
}

impl ConstrainedSystem {
    /// Eliminates `dirichlet` rows/columns of the SPD matrix `a` and
    /// factorizes the result.
    pub fn new(a: &CsrMatrix, dirichlet: &[usize], value: f64) -> Result<Self> {
        let n = a.n();
        let mut is_dirichlet = vec![false; n];
        for &d in dirichlet {
            is_dirichlet[d] = true;
        }
        let mut reduced = CooMatrix::new(n);
        let mut coupling = Vec::new();
        for i in 0..n {
            let (cols, vals) = a.row(i);
            if is_dirichlet[i] {
                reduced.push(i, i, 1.0);
                continue;
            }
            for (c, v) in cols.iter().zip(vals) {
                if is_dirichlet[*c] {
                    coupling.push((i, *c, *v));
                } else {
                    reduced.push(i, *c, *v);
                }
            }
        }
        let factor = BandCholesky::factor(&reduced.to_csr())?;
        Ok(ConstrainedSystem {
            factor,
            coupling,
            dirichlet: dirichlet.to_vec(),
            value,
            n,
        })
    }

    pub fn boundary_value(&self) -> f64 {
        self.value
    }

    /// Solves `A x = b` subject to `x = value` on the constrained nodes;
    /// `b` is the unconstrained right-hand side.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut rhs = b.to_vec();
        if self.value != 0.0 {
            for &(i, _, v) in &self.coupling {
                rhs[i] -= v * self.value;
            }
        }
        for &d in &self.dirichlet {
            rhs[d] = self.value;
        }
        let mut x = self.factor.solve(&rhs);
        for &d in &self.dirichlet {
            x[d] = self.value;
        }
        x
    }
}
