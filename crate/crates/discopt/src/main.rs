//! Command-line front end: single solves, target recording, placement
//! optimization, gradient verification and mesh inspection.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 solver or meshing
//! failure, 4 verification failure.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use discopt::config::{FunctionalVariant, RunConfig};
use discopt::error::Error;
use discopt::geometry::{project_center, DiscGeometry};
use discopt::gradient::write_density_csv;
use discopt::mesh::generate_mesh;
use discopt::optimizer::{fd_gradient_oracle, optimize, HistoryRow, Problem};
use discopt::solver::FunctionalSpec;
use discopt::target::{record_target, RecordedTarget};
use discopt::vtk::{write_field_step, write_vtk};

#[derive(Parser)]
#[command(
    name = "discopt",
    about = "Optimal placement of a conductive disc inclusion in a heated square plate"
)]
struct Cli {
    /// Run configuration (INI format)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print progress details
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one forward solve and report the tracking functional
    Solve,
    /// Solve at the configured geometry and store the trajectory as a
    /// reusable target
    RecordTarget {
        /// File the recorded target is written to
        #[arg(long)]
        target: PathBuf,
    },
    /// Descend on the disc center and write the iteration history
    Optimize,
    /// Compare the adjoint shape gradient against central finite differences
    FdCheck {
        /// Central difference step
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        /// Flip the density sign (debug aid proving the check can fail)
        #[arg(long, hide = true)]
        flip_density_sign: bool,
    },
    /// Write the fitted mesh as legacy VTK
    MeshDump,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::InfeasibleGeometry(_) => 2,
                Error::Meshing(_)
                | Error::Solver { .. }
                | Error::ContractViolation(_)
                | Error::MeshConsistency(_)
                | Error::Io(_) => 3,
            }
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> discopt::Result<i32> {
    let config_path = cli.config.as_deref().ok_or_else(|| {
        Error::Config("missing --config <path> (required for every subcommand)".into())
    })?;
    let mut config = RunConfig::load(config_path)?;
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    std::fs::create_dir_all(&config.output_dir)?;
    std::fs::write(
        config.output_dir.join("effective_config.ini"),
        config.canonical(),
    )?;

    match &cli.command {
        Command::Solve => cmd_solve(&config, cli.verbose),
        Command::RecordTarget { target } => cmd_record_target(&config, target, cli.verbose),
        Command::Optimize => cmd_optimize(&config, cli.verbose),
        Command::FdCheck {
            delta,
            flip_density_sign,
        } => cmd_fd_check(&config, *delta, *flip_density_sign, cli.verbose),
        Command::MeshDump => cmd_mesh_dump(&config),
    }
}

fn build_problem(config: &RunConfig) -> discopt::Result<Problem> {
    let functional = match &config.functional {
        FunctionalVariant::Constant => FunctionalSpec::ConstantTarget,
        FunctionalVariant::Zero => FunctionalSpec::ZeroTarget,
        FunctionalVariant::Recorded { target_path } => {
            FunctionalSpec::RecordedTarget(Arc::new(RecordedTarget::load(target_path)?))
        }
    };
    Ok(Problem {
        domain: config.domain(),
        mesh: config.mesh_params(),
        physics: config.physics,
        grid: config.grid()?,
        functional,
    })
}

fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn cmd_solve(config: &RunConfig, verbose: bool) -> discopt::Result<i32> {
    let geom = config.geometry()?;
    let problem = build_problem(config)?;
    let eval = problem.evaluate(geom)?;
    let summary = format!(
        "j,node_count,step_count\n{},{},{}\n",
        format_f64(eval.objective),
        eval.mesh.num_vertices(),
        problem.grid.n_steps
    );
    std::fs::write(config.output_dir.join("summary.csv"), summary)?;
    if config.write_vtk {
        for (k, field) in eval.forward.fields.iter().enumerate() {
            write_field_step(&config.output_dir, &eval.mesh, "forward", k, field)?;
        }
    }
    if verbose {
        println!(
            "solve: J = {} on {} nodes, {} steps",
            format_f64(eval.objective),
            eval.mesh.num_vertices(),
            problem.grid.n_steps
        );
    }
    println!("J = {}", format_f64(eval.objective));
    Ok(0)
}

fn cmd_record_target(config: &RunConfig, target: &Path, verbose: bool) -> discopt::Result<i32> {
    let geom = config.geometry()?;
    let grid = config.grid()?;
    let (recorded, trajectory) = record_target(
        geom,
        &config.domain(),
        &config.mesh_params(),
        &config.physics,
        &grid,
    )?;
    recorded.save(target)?;
    if verbose {
        println!(
            "recorded {} steps on {} nodes at center ({}, {})",
            grid.n_steps,
            recorded.mesh.num_vertices(),
            geom.center.x,
            geom.center.y
        );
    }
    println!(
        "target written to {} ({} fields)",
        target.display(),
        trajectory.fields.len()
    );
    Ok(0)
}

fn history_csv(history: &[HistoryRow]) -> String {
    let mut out = String::from("iter,c_x,c_y,j,dj_dx,dj_dy,step_length,backtracks\n");
    for row in history {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.iter,
            format_f64(row.center.x),
            format_f64(row.center.y),
            format_f64(row.objective),
            format_f64(row.gradient.x),
            format_f64(row.gradient.y),
            format_f64(row.step_length),
            row.backtracks
        ));
    }
    out
}

fn cmd_optimize(config: &RunConfig, verbose: bool) -> discopt::Result<i32> {
    let problem = build_problem(config)?;
    // clamp the configured start into the feasible box; the paper's bottom
    // starts touch the margin otherwise
    let start = project_center(config.center, config.radius, config.margin)?;
    if verbose && (start - config.center).norm() > 0.0 {
        println!(
            "initial center projected to ({}, {})",
            start.x, start.y
        );
    }
    let geom = DiscGeometry::new(start, config.radius)?;
    let outcome = optimize(&problem, geom, &config.optimizer)?;
    std::fs::write(
        config.output_dir.join("history.csv"),
        history_csv(&outcome.history),
    )?;
    if config.write_vtk {
        let eval = problem.evaluate(outcome.final_geometry)?;
        let mut file = std::io::BufWriter::new(std::fs::File::create(
            config.output_dir.join("final_mesh.vtk"),
        )?);
        write_vtk(
            &mut file,
            &eval.mesh,
            Some(("temperature", eval.forward.fields.last().unwrap())),
        )?;
    }
    if verbose {
        for row in &outcome.history {
            println!(
                "iter {:3}  center ({:.6}, {:.6})  J {:.9e}  backtracks {}",
                row.iter, row.center.x, row.center.y, row.objective, row.backtracks
            );
        }
    }
    println!(
        "final center ({}, {})  J = {}  [{:?} after {} iterations]",
        format_f64(outcome.final_geometry.center.x),
        format_f64(outcome.final_geometry.center.y),
        format_f64(outcome.final_objective),
        outcome.stop,
        outcome.history.len()
    );
    Ok(0)
}

fn cmd_fd_check(
    config: &RunConfig,
    delta: f64,
    flip_density_sign: bool,
    verbose: bool,
) -> discopt::Result<i32> {
    let geom = config.geometry()?;
    let problem = build_problem(config)?;
    let eval = problem.evaluate(geom)?;
    let mut sg = problem.shape_gradient(&eval)?;
    if flip_density_sign {
        for v in sg.density.iter_mut() {
            *v = -*v;
        }
        sg.gradient = -sg.gradient;
    }
    let quad = eval.mesh.interface_quadrature();
    let mut density_file = std::io::BufWriter::new(std::fs::File::create(
        config.output_dir.join("density.csv"),
    )?);
    write_density_csv(&mut density_file, &quad, &sg)?;

    let fd = fd_gradient_oracle(&problem, geom, delta)?;
    let norm = fd.norm();
    let mut worst: f64 = 0.0;
    for (adjoint, oracle) in [(sg.gradient.x, fd.x), (sg.gradient.y, fd.y)] {
        if oracle.abs() > 1e-3 * norm {
            worst = worst.max(((adjoint - oracle) / oracle).abs());
        }
    }
    println!(
        "adjoint gradient = ({}, {})",
        format_f64(sg.gradient.x),
        format_f64(sg.gradient.y)
    );
    println!("fd gradient      = ({}, {})", format_f64(fd.x), format_f64(fd.y));
    println!("relative error   = {}", format_f64(worst));
    if verbose {
        println!("delta = {delta}, significant threshold = {}", 1e-3 * norm);
    }
    if worst > 0.05 {
        println!("FAIL: adjoint gradient deviates from the finite-difference oracle");
        Ok(4)
    } else {
        println!("PASS: adjoint gradient matches the finite-difference oracle");
        Ok(0)
    }
}

fn cmd_mesh_dump(config: &RunConfig) -> discopt::Result<i32> {
    let geom = config.geometry()?;
    let mesh = generate_mesh(geom, &config.domain(), &config.mesh_params())?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(
        config.output_dir.join("mesh.vtk"),
    )?);
    write_vtk(&mut file, &mesh, None)?;
    println!(
        "mesh: {} vertices, {} triangles, {} interface segments",
        mesh.num_vertices(),
        mesh.triangles.len(),
        mesh.interface_edges.len()
    );
    Ok(0)
}
