//! Backward Euler time stepping for the forward heat problem and its
//! backward-in-time adjoint, plus evaluation of the tracking functional.
//!
//! Both problems share the step matrix `M + dt(K + B)`, factorized once per
//! mesh and reused across all steps.

use std::sync::Arc;

use crate::assembly::{ConstrainedSystem, PhysicalParams, SystemOperators};
use crate::error::{Error, Result};
use crate::mesh::InterfaceMesh;
use crate::target::RecordedTarget;

/// Uniform time grid `t_k = k·dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub n_steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Config("time grid needs at least one step".into()));
        }
        if !(horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(TimeGrid {
            n_steps,
            dt: horizon / n_steps as f64,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Forward,
    Adjoint,
}

/// Time-indexed nodal fields from a transient solve.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    /// `fields[k]` is the nodal vector at `t_k`, `k = 0..=n_steps`.
    pub fields: Vec<Vec<f64>>,
    pub grid: TimeGrid,
    pub mesh_id: u64,
    /// Forward solves record `‖u^k − U_M‖_M` per step (dissipation monitor).
    pub equilibrium_norms: Vec<f64>,
}

/// Which tracking target defines the functional.
#[derive(Debug, Clone)]
pub enum FunctionalSpec {
    /// Track the imposed boundary temperature.
    ConstantTarget,
    /// Track a recorded trajectory from a reference geometry.
    RecordedTarget(Arc<RecordedTarget>),
    /// Track zero (mean temperature minimization).
    ZeroTarget,
}

/// Target values materialized on a concrete mesh.
#[derive(Debug, Clone)]
pub enum TargetField {
    Uniform(f64),
    /// `values[k][node]`, aligned with the trajectory time grid.
    PerStep(Vec<Vec<f64>>),
}

impl TargetField {
    /// `u_k − target_k` as a full nodal vector.
    pub fn residual(&self, u_k: &[f64], k: usize) -> Vec<f64> {
        match self {
            TargetField::Uniform(value) => u_k.iter().map(|u| u - value).collect(),
            TargetField::PerStep(values) => u_k
                .iter()
                .zip(&values[k])
                .map(|(u, t)| u - t)
                .collect(),
        }
    }

    /// Target value at an arbitrary point expressed through nodal weights.
    pub fn at_nodes(&self, k: usize, nodes: &[usize], weights: &[f64]) -> f64 {
        match self {
            TargetField::Uniform(value) => *value,
            TargetField::PerStep(values) => nodes
                .iter()
                .zip(weights)
                .map(|(&n, w)| values[k][n] * w)
                .sum(),
        }
    }
}

impl FunctionalSpec {
    /// Materializes the target on `mesh` for the given grid.
    pub fn resolve(
        &self,
        mesh: &InterfaceMesh,
        grid: &TimeGrid,
        params: &PhysicalParams,
    ) -> Result<TargetField> {
        match self {
            FunctionalSpec::ConstantTarget => {
                Ok(TargetField::Uniform(params.boundary_temperature))
            }
            FunctionalSpec::ZeroTarget => Ok(TargetField::Uniform(0.0)),
            FunctionalSpec::RecordedTarget(recorded) => {
                if recorded.grid != *grid {
                    return Err(Error::ContractViolation(format!(
                        "recorded target grid ({} steps, dt {}) differs from requested ({} steps, dt {})",
                        recorded.grid.n_steps, recorded.grid.dt, grid.n_steps, grid.dt
                    )));
                }
                Ok(TargetField::PerStep(recorded.transfer_to(mesh)))
            }
        }
    }
}

/// Worst relative increase of `‖u^k − U_M‖_M` along a forward solve;
/// nonpositive when the scheme dissipates monotonically.
pub fn dissipation_violation(trajectory: &Trajectory) -> f64 {
    let norms = &trajectory.equilibrium_norms;
    if norms.len() < 2 {
        return 0.0;
    }
    let scale = norms[0].max(1e-300);
    norms
        .windows(2)
        .map(|w| (w[1] - w[0]) / scale)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn check_finite(field: &[f64], step: usize) -> Result<()> {
    if field.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver {
            step,
            message: "non-finite value in solution field".into(),
        });
    }
    Ok(())
}

/// Runs the forward problem: zero initial state, imposed temperature on the
/// heated side, insulated elsewhere, implicit Euler in time.
pub fn solve_forward(
    ops: &SystemOperators,
    grid: &TimeGrid,
    params: &PhysicalParams,
) -> Result<Trajectory> {
    let n = ops.n;
    let u_m = params.boundary_temperature;
    let a = ops.step_matrix(grid.dt);
    let system = ConstrainedSystem::new(&a, &ops.dirichlet_nodes, u_m)?;

    let equilibrium_norm = |u: &[f64]| -> f64 {
        let v: Vec<f64> = u.iter().map(|x| x - u_m).collect();
        ops.mass.quadratic_form(&v, &v).max(0.0).sqrt()
    };

    let mut fields = Vec::with_capacity(grid.n_steps + 1);
    let mut norms = Vec::with_capacity(grid.n_steps + 1);
    fields.push(vec![0.0; n]);
    norms.push(equilibrium_norm(&fields[0]));
    for k in 0..grid.n_steps {
        let rhs = ops.mass.mul_vec_alloc(&fields[k]);
        let next = system.solve(&rhs);
        check_finite(&next, k + 1)?;
        norms.push(equilibrium_norm(&next));
        fields.push(next);
    }

    Ok(Trajectory {
        kind: TrajectoryKind::Forward,
        fields,
        grid: *grid,
        mesh_id: ops.mesh_id,
        equilibrium_norms: norms,
    })
}

/// Runs the adjoint problem backwards in time. The source `u_S − target`
/// acts on the matrix region only and the heated side is held at zero.
pub fn solve_adjoint(
    ops: &SystemOperators,
    grid: &TimeGrid,
    target: &TargetField,
    forward: &Trajectory,
) -> Result<Trajectory> {
    if forward.kind != TrajectoryKind::Forward {
        return Err(Error::ContractViolation(
            "adjoint solve requires a forward trajectory".into(),
        ));
    }
    if forward.mesh_id != ops.mesh_id {
        return Err(Error::ContractViolation(
            "forward trajectory belongs to a different mesh".into(),
        ));
    }
    if forward.grid != *grid {
        return Err(Error::ContractViolation(
            "forward trajectory uses a different time grid".into(),
        ));
    }

    let n = ops.n;
    let n_steps = grid.n_steps;
    let a = ops.step_matrix(grid.dt);
    let system = ConstrainedSystem::new(&a, &ops.dirichlet_nodes, 0.0)?;

    let mut fields = vec![Vec::new(); n_steps + 1];
    fields[n_steps] = vec![0.0; n];
    for k in (0..n_steps).rev() {
        let mut rhs = ops.mass.mul_vec_alloc(&fields[k + 1]);
        let residual = target.residual(&forward.fields[k], k);
        let source = ops.mass_matrix_region.mul_vec_alloc(&residual);
        for i in 0..n {
            rhs[i] += grid.dt * source[i];
        }
        let g = system.solve(&rhs);
        check_finite(&g, k)?;
        fields[k] = g;
    }

    Ok(Trajectory {
        kind: TrajectoryKind::Adjoint,
        fields,
        grid: *grid,
        mesh_id: ops.mesh_id,
        equilibrium_norms: Vec::new(),
    })
}

/// Tracking functional: right-endpoint rectangle rule over the matrix-region
/// squared misfit, `Σ_{k=1..N} dt · rᵏᵀ M_S rᵏ`.
pub fn evaluate_j(
    forward: &Trajectory,
    target: &TargetField,
    ops: &SystemOperators,
) -> Result<f64> {
    if forward.kind != TrajectoryKind::Forward {
        return Err(Error::ContractViolation(
            "functional evaluation requires a forward trajectory".into(),
        ));
    }
    if forward.mesh_id != ops.mesh_id {
        return Err(Error::ContractViolation(
            "trajectory belongs to a different mesh".into(),
        ));
    }
    let mut j = 0.0;
    for k in 1..=forward.grid.n_steps {
        let r = target.residual(&forward.fields[k], k);
        j += forward.grid.dt * ops.mass_matrix_region.quadratic_form(&r, &r);
    }
    Ok(j)
}
