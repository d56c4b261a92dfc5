//! Shape derivative of the tracking functional with respect to the disc
//! center.
//!
//! For a general smooth interface the Hadamard density involves the
//! tangential gradient of `a = g_S τ·∇u_S − κ g_O τ·∇u_O`, the tangential
//! divergence of `τ`, and second-order normal derivative traces `D²u n·n`
//! on both sides — quantities that are delicate to evaluate with nodal
//! elements. On a circle the frame satisfies `div τ = 0`, `Dτ n·n = 0` and
//! the tangential divergence of `τ` vanishes, which collapses the density
//! to first-order traces plus Laplacian traces; the PDE itself converts
//! those Laplacians into time derivatives on the interface
//! (`Δu_S = ∂t u_S`, `κΔu_O = ∂t u_O`). This module evaluates exactly that
//! circle-specialized form:
//!
//! ```text
//! G(x) = ∫ [ (u_S − target)²
//!            + 2((κ−1)/(κR²) + 1/(rR)) (g_O − g_S)(u_O − u_S)
//!            + 2κ (τ·∇g_O)(τ·∇u_O) − 2 (τ·∇g_S)(τ·∇u_S)
//!            + 2 ∂t u_O g_O − 2 ∂t u_S g_S ] dt
//! ```
//!
//! and integrates it against translation fields:
//! `dJ/dc_i = ∮ (e_i·n) G dσ`.

use std::io::Write;

use crate::assembly::{p1_element, PhysicalParams};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::{InterfaceMesh, QuadPoint};
use crate::solver::{TargetField, TimeGrid, Trajectory, TrajectoryKind};

/// Side traces and derived quantities per quadrature point and time step.
#[derive(Debug, Clone)]
pub struct TraceSeries {
    pub u_s: Vec<f64>,
    pub u_o: Vec<f64>,
    pub g_s: Vec<f64>,
    pub g_o: Vec<f64>,
    /// Tangential derivatives `τ·∇(·)` from the adjacent triangle of the
    /// matching region.
    pub tang_u_s: Vec<f64>,
    pub tang_u_o: Vec<f64>,
    pub tang_g_s: Vec<f64>,
    pub tang_g_o: Vec<f64>,
    /// Backward differences `(fᵏ − fᵏ⁻¹)/dt`; index 0 is unused (zero).
    pub dt_u_s: Vec<f64>,
    pub dt_u_o: Vec<f64>,
}

/// Traces of the forward and adjoint trajectories along the interface.
#[derive(Debug, Clone)]
pub struct InterfaceTraces {
    pub points: Vec<TraceSeries>,
    pub grid: TimeGrid,
}

/// Time-integrated Hadamard density and its per-term split.
#[derive(Debug, Clone)]
pub struct Density {
    /// `G` per quadrature point.
    pub values: Vec<f64>,
    /// Contributions: misfit, jump product, κ tangential, tangential,
    /// inclusion time derivative, matrix time derivative.
    pub terms: Vec<[f64; 6]>,
}

/// The assembled derivative `dJ/d(center)` with its boundary density.
#[derive(Debug, Clone)]
pub struct ShapeGradient {
    pub gradient: Vec2,
    pub density: Vec<f64>,
    pub terms: Vec<[f64; 6]>,
}

impl ShapeGradient {
    /// Derivative along an arbitrary translation `f`; linear in `f` by
    /// construction.
    pub fn directional(&self, f: Vec2) -> f64 {
        self.gradient.dot(f)
    }
}

/// P1 gradient of a nodal field on triangle `t`.
fn triangle_gradient(mesh: &InterfaceMesh, t: usize, field: &[f64]) -> Vec2 {
    let (vs, _, bs, cs) = p1_element(mesh, t);
    let mut g = Vec2::default();
    for i in 0..3 {
        g.x += field[vs[i]] * bs[i];
        g.y += field[vs[i]] * cs[i];
    }
    g
}

/// Extracts side traces, tangential derivatives and time differences at the
/// interface quadrature points.
pub fn extract_traces(
    mesh: &InterfaceMesh,
    quad: &[QuadPoint],
    forward: &Trajectory,
    adjoint: &Trajectory,
) -> Result<InterfaceTraces> {
    if forward.kind != TrajectoryKind::Forward || adjoint.kind != TrajectoryKind::Adjoint {
        return Err(Error::ContractViolation(
            "trace extraction needs one forward and one adjoint trajectory".into(),
        ));
    }
    if forward.mesh_id != mesh.id || adjoint.mesh_id != mesh.id {
        return Err(Error::MeshConsistency(
            "trajectories belong to a different mesh".into(),
        ));
    }
    if forward.grid != adjoint.grid {
        return Err(Error::ContractViolation(
            "forward and adjoint trajectories use different time grids".into(),
        ));
    }
    if quad.len() != mesh.interface_edges.len() {
        return Err(Error::MeshConsistency(
            "quadrature points do not match the interface segments".into(),
        ));
    }

    let grid = forward.grid;
    let n_time = grid.n_steps + 1;
    let inv_dt = 1.0 / grid.dt;
    let mut points = Vec::with_capacity(quad.len());

    for (e, q) in mesh.interface_edges.iter().zip(quad) {
        let mut series = TraceSeries {
            u_s: Vec::with_capacity(n_time),
            u_o: Vec::with_capacity(n_time),
            g_s: Vec::with_capacity(n_time),
            g_o: Vec::with_capacity(n_time),
            tang_u_s: Vec::with_capacity(n_time),
            tang_u_o: Vec::with_capacity(n_time),
            tang_g_s: Vec::with_capacity(n_time),
            tang_g_o: Vec::with_capacity(n_time),
            dt_u_s: vec![0.0; n_time],
            dt_u_o: vec![0.0; n_time],
        };
        for k in 0..n_time {
            let u = &forward.fields[k];
            let g = &adjoint.fields[k];
            series.u_s.push(0.5 * (u[e.s_nodes.0] + u[e.s_nodes.1]));
            series.u_o.push(0.5 * (u[e.o_nodes.0] + u[e.o_nodes.1]));
            series.g_s.push(0.5 * (g[e.s_nodes.0] + g[e.s_nodes.1]));
            series.g_o.push(0.5 * (g[e.o_nodes.0] + g[e.o_nodes.1]));
            series
                .tang_u_s
                .push(triangle_gradient(mesh, e.s_triangle, u).dot(q.tangent));
            series
                .tang_u_o
                .push(triangle_gradient(mesh, e.o_triangle, u).dot(q.tangent));
            series
                .tang_g_s
                .push(triangle_gradient(mesh, e.s_triangle, g).dot(q.tangent));
            series
                .tang_g_o
                .push(triangle_gradient(mesh, e.o_triangle, g).dot(q.tangent));
        }
        for k in 1..n_time {
            series.dt_u_s[k] = (series.u_s[k] - series.u_s[k - 1]) * inv_dt;
            series.dt_u_o[k] = (series.u_o[k] - series.u_o[k - 1]) * inv_dt;
        }
        points.push(series);
    }

    Ok(InterfaceTraces { points, grid })
}

/// Time-integrates the circle-specialized density at every quadrature
/// point, using the same right-endpoint rule as the functional.
pub fn ball_density(
    mesh: &InterfaceMesh,
    traces: &InterfaceTraces,
    params: &PhysicalParams,
    target: &TargetField,
) -> Density {
    let kappa = params.kappa;
    let resistance = params.resistance;
    let radius = mesh.geometry.radius;
    let jump_factor =
        2.0 * ((kappa - 1.0) / (kappa * resistance * resistance) + 1.0 / (radius * resistance));
    let dt = traces.grid.dt;

    let mut values = Vec::with_capacity(traces.points.len());
    let mut term_rows = Vec::with_capacity(traces.points.len());
    for (e, series) in mesh.interface_edges.iter().zip(&traces.points) {
        let s_nodes = [e.s_nodes.0, e.s_nodes.1];
        let weights = [0.5, 0.5];
        let mut terms = [0.0f64; 6];
        for k in 1..=traces.grid.n_steps {
            let misfit = series.u_s[k] - target.at_nodes(k, &s_nodes, &weights);
            terms[0] += dt * misfit * misfit;
            terms[1] += dt
                * jump_factor
                * (series.g_o[k] - series.g_s[k])
                * (series.u_o[k] - series.u_s[k]);
            terms[2] += dt * 2.0 * kappa * series.tang_g_o[k] * series.tang_u_o[k];
            terms[3] += dt * -2.0 * series.tang_g_s[k] * series.tang_u_s[k];
            terms[4] += dt * 2.0 * series.dt_u_o[k] * series.g_o[k];
            terms[5] += dt * -2.0 * series.dt_u_s[k] * series.g_s[k];
        }
        values.push(terms.iter().sum());
        term_rows.push(terms);
    }
    Density {
        values,
        terms: term_rows,
    }
}

/// Integrates the density against the translation basis:
/// `dJ/dc_i = Σ_q w_q (e_i·n_q) G_q`.
pub fn center_gradient(density: &Density, quad: &[QuadPoint]) -> ShapeGradient {
    let mut gradient = Vec2::default();
    for (q, &g) in quad.iter().zip(&density.values) {
        gradient = gradient + q.normal * (q.weight * g);
    }
    ShapeGradient {
        gradient,
        density: density.values.clone(),
        terms: density.terms.clone(),
    }
}

/// Full pipeline: traces → density → center gradient.
pub fn compute_shape_gradient(
    mesh: &InterfaceMesh,
    params: &PhysicalParams,
    target: &TargetField,
    forward: &Trajectory,
    adjoint: &Trajectory,
) -> Result<ShapeGradient> {
    let quad = mesh.interface_quadrature();
    let traces = extract_traces(mesh, &quad, forward, adjoint)?;
    let density = ball_density(mesh, &traces, params, target);
    Ok(center_gradient(&density, &quad))
}

/// Writes the density diagnostics as CSV: one row per quadrature point.
pub fn write_density_csv<W: Write>(
    out: &mut W,
    quad: &[QuadPoint],
    gradient: &ShapeGradient,
) -> std::io::Result<()> {
    writeln!(out, "arc_param,x,y,G,term1,term2,term3,term4,term5,term6")?;
    for (q, (g, terms)) in quad
        .iter()
        .zip(gradient.density.iter().zip(&gradient.terms))
    {
        write!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            q.arc_angle, q.position.x, q.position.y, g
        )?;
        for t in terms {
            write!(out, ",{t:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::geometry::{DiscGeometry, DomainSpec};
    use crate::mesh::{generate_mesh, MeshParams};
    use crate::solver::{solve_adjoint, solve_forward, FunctionalSpec, TimeGrid};
    use crate::target::record_target;
    use std::sync::Arc;

    fn phys() -> PhysicalParams {
        PhysicalParams {
            kappa: 100.0,
            resistance: 0.01,
            boundary_temperature: 500.0,
            horizon: 0.5,
        }
    }

    struct Pipeline {
        mesh: InterfaceMesh,
        quad: Vec<QuadPoint>,
        traces: InterfaceTraces,
        target: TargetField,
        params: PhysicalParams,
    }

    fn run_pipeline(
        center: Vec2,
        h: f64,
        n_seg: usize,
        n_steps: usize,
        params: PhysicalParams,
        spec: &FunctionalSpec,
    ) -> Pipeline {
        let geom = DiscGeometry::new(center, 0.2).unwrap();
        let mesh_params = MeshParams {
            target_h: h,
            interface_segments: n_seg,
            ..MeshParams::default()
        };
        let mesh = generate_mesh(geom, &DomainSpec::default(), &mesh_params).unwrap();
        let ops = assemble(&mesh, &params);
        let grid = TimeGrid::new(params.horizon, n_steps).unwrap();
        let target = spec.resolve(&mesh, &grid, &params).unwrap();
        let u = solve_forward(&ops, &grid, &params).unwrap();
        let g = solve_adjoint(&ops, &grid, &target, &u).unwrap();
        let quad = mesh.interface_quadrature();
        let traces = extract_traces(&mesh, &quad, &u, &g).unwrap();
        Pipeline {
            mesh,
            quad,
            traces,
            target,
            params,
        }
    }

    fn constant_trajectory(
        mesh: &InterfaceMesh,
        grid: TimeGrid,
        value: f64,
        kind: TrajectoryKind,
    ) -> Trajectory {
        Trajectory {
            kind,
            fields: vec![vec![value; mesh.num_vertices()]; grid.n_steps + 1],
            grid,
            mesh_id: mesh.id,
            equilibrium_norms: Vec::new(),
        }
    }

    #[test]
    fn constant_field_has_flat_traces() {
        let geom = DiscGeometry::new(Vec2::new(0.5, 0.6), 0.2).unwrap();
        let mesh = generate_mesh(geom, &DomainSpec::default(), &MeshParams::default()).unwrap();
        let grid = TimeGrid::new(0.5, 5).unwrap();
        let u = constant_trajectory(&mesh, grid, 7.5, TrajectoryKind::Forward);
        let g = constant_trajectory(&mesh, grid, 0.0, TrajectoryKind::Adjoint);
        let quad = mesh.interface_quadrature();
        let traces = extract_traces(&mesh, &quad, &u, &g).unwrap();
        for series in &traces.points {
            for k in 0..=grid.n_steps {
                assert_eq!(series.u_s[k], 7.5);
                assert_eq!(series.u_o[k], 7.5);
                assert!(series.tang_u_s[k].abs() < 1e-12);
                assert!(series.tang_u_o[k].abs() < 1e-12);
                assert_eq!(series.dt_u_s[k], 0.0);
                assert_eq!(series.dt_u_o[k], 0.0);
            }
        }
    }

    #[test]
    fn linear_field_reproduces_tangential_derivative() {
        let geom = DiscGeometry::new(Vec2::new(0.5, 0.5), 0.2).unwrap();
        let mesh = generate_mesh(geom, &DomainSpec::default(), &MeshParams::default()).unwrap();
        let grid = TimeGrid::new(0.5, 2).unwrap();
        let nodal_x: Vec<f64> = mesh.vertices.iter().map(|v| v.x).collect();
        let u = Trajectory {
            kind: TrajectoryKind::Forward,
            fields: vec![nodal_x.clone(); grid.n_steps + 1],
            grid,
            mesh_id: mesh.id,
            equilibrium_norms: Vec::new(),
        };
        let g = constant_trajectory(&mesh, grid, 0.0, TrajectoryKind::Adjoint);
        let quad = mesh.interface_quadrature();
        let traces = extract_traces(&mesh, &quad, &u, &g).unwrap();
        for (q, series) in quad.iter().zip(&traces.points) {
            // ∇u = (1, 0) exactly, so τ·∇u = τ_x on both sides
            assert!(
                (series.tang_u_s[0] - q.tangent.x).abs() < 1e-9,
                "S side at angle {}",
                q.arc_angle
            );
            assert!((series.tang_u_o[0] - q.tangent.x).abs() < 1e-9);
        }
    }

    #[test]
    fn forward_solve_produces_interface_jump() {
        let pipe = run_pipeline(
            Vec2::new(0.5, 0.6),
            0.02,
            64,
            50,
            phys(),
            &FunctionalSpec::ConstantTarget,
        );
        let last = pipe.traces.grid.n_steps;
        let max_jump = pipe
            .traces
            .points
            .iter()
            .map(|s| (s.u_o[last] - s.u_s[last]).abs())
            .fold(0.0f64, f64::max);
        assert!(max_jump > 1e-3, "interface jump {max_jump} unexpectedly small");
    }

    #[test]
    fn zero_boundary_data_gives_zero_density_and_gradient() {
        let params = PhysicalParams {
            boundary_temperature: 0.0,
            ..phys()
        };
        let pipe = run_pipeline(
            Vec2::new(0.5, 0.6),
            0.04,
            32,
            10,
            params,
            &FunctionalSpec::ConstantTarget,
        );
        let density = ball_density(&pipe.mesh, &pipe.traces, &pipe.params, &pipe.target);
        assert!(density.values.iter().all(|&g| g == 0.0));
        let grad = center_gradient(&density, &pipe.quad);
        assert_eq!(grad.gradient.x, 0.0);
        assert_eq!(grad.gradient.y, 0.0);
    }

    #[test]
    fn density_invariant_under_tangent_flip() {
        let pipe = run_pipeline(
            Vec2::new(0.5, 0.6),
            0.02,
            64,
            25,
            phys(),
            &FunctionalSpec::ConstantTarget,
        );
        let density = ball_density(&pipe.mesh, &pipe.traces, &pipe.params, &pipe.target);
        // recompute with every tangent reversed
        let flipped_quad: Vec<QuadPoint> = pipe
            .quad
            .iter()
            .map(|q| QuadPoint {
                tangent: -q.tangent,
                ..*q
            })
            .collect();
        // traces must be re-extracted against the flipped frames
        let mesh = &pipe.mesh;
        let grid = pipe.traces.grid;
        let params = pipe.params;
        let geom_target = &pipe.target;
        let ops = assemble(mesh, &params);
        let u = solve_forward(&ops, &grid, &params).unwrap();
        let g = solve_adjoint(&ops, &grid, geom_target, &u).unwrap();
        let traces_flipped = extract_traces(mesh, &flipped_quad, &u, &g).unwrap();
        let density_flipped =
            ball_density(mesh, &traces_flipped, &params, geom_target);
        for (a, b) in density.values.iter().zip(&density_flipped.values) {
            assert_eq!(a.to_bits(), b.to_bits(), "density changed under τ flip");
        }
    }

    #[test]
    fn constant_density_integrates_to_zero_gradient() {
        let geom = DiscGeometry::new(Vec2::new(0.5, 0.6), 0.2).unwrap();
        let mesh = generate_mesh(geom, &DomainSpec::default(), &MeshParams::default()).unwrap();
        let quad = mesh.interface_quadrature();
        let density = Density {
            values: vec![3.25; quad.len()],
            terms: vec![[0.0; 6]; quad.len()],
        };
        let grad = center_gradient(&density, &quad);
        assert!(grad.gradient.x.abs() < 1e-12);
        assert!(grad.gradient.y.abs() < 1e-12);
    }

    #[test]
    fn directional_derivative_is_exactly_linear() {
        let pipe = run_pipeline(
            Vec2::new(0.5, 0.6),
            0.04,
            32,
            10,
            phys(),
            &FunctionalSpec::ConstantTarget,
        );
        let density = ball_density(&pipe.mesh, &pipe.traces, &pipe.params, &pipe.target);
        let grad = center_gradient(&density, &pipe.quad);
        let e1 = Vec2::new(1.0, 0.0);
        let e2 = Vec2::new(0.0, 1.0);
        let sum = grad.directional(e1) + grad.directional(e2);
        let combined = grad.directional(Vec2::new(1.0, 1.0));
        assert_eq!(sum.to_bits(), combined.to_bits());
    }

    #[test]
    fn symmetric_config_has_negligible_x_gradient() {
        let pipe = run_pipeline(
            Vec2::new(0.5, 0.5),
            0.02,
            64,
            50,
            phys(),
            &FunctionalSpec::ConstantTarget,
        );
        let density = ball_density(&pipe.mesh, &pipe.traces, &pipe.params, &pipe.target);
        let grad = center_gradient(&density, &pipe.quad);
        assert!(
            grad.gradient.x.abs() <= 1e-2 * grad.gradient.y.abs(),
            "gradient {:?} not mirror-symmetric",
            grad.gradient
        );
    }

    #[test]
    fn tracking_a_target_above_pulls_upward() {
        // desired disc above the evaluation disc: J falls when moving up
        let params = phys();
        let geom_target = DiscGeometry::new(Vec2::new(0.5, 0.75), 0.2).unwrap();
        let mesh_params = MeshParams {
            target_h: 0.04,
            interface_segments: 32,
            ..MeshParams::default()
        };
        let grid = TimeGrid::new(params.horizon, 25).unwrap();
        let (recorded, _) = record_target(
            geom_target,
            &DomainSpec::default(),
            &mesh_params,
            &params,
            &grid,
        )
        .unwrap();
        let spec = FunctionalSpec::RecordedTarget(Arc::new(recorded));
        let pipe = run_pipeline(Vec2::new(0.5, 0.35), 0.04, 32, 25, params, &spec);
        let density = ball_density(&pipe.mesh, &pipe.traces, &pipe.params, &pipe.target);
        let grad = center_gradient(&density, &pipe.quad);
        assert!(
            grad.gradient.y < 0.0,
            "expected dJ/dc_y < 0, got {:?}",
            grad.gradient
        );
    }

    #[test]
    fn density_csv_has_header_and_rows() {
        let pipe = run_pipeline(
            Vec2::new(0.5, 0.6),
            0.04,
            32,
            10,
            phys(),
            &FunctionalSpec::ConstantTarget,
        );
        let density = ball_density(&pipe.mesh, &pipe.traces, &pipe.params, &pipe.target);
        let grad = center_gradient(&density, &pipe.quad);
        let mut buf = Vec::new();
        write_density_csv(&mut buf, &pipe.quad, &grad).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "arc_param,x,y,G,term1,term2,term3,term4,term5,term6"
        );
        assert_eq!(lines.count(), 32);
    }
}
