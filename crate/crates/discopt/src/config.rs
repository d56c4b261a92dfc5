//! Flat INI-style run configuration: `[section]` headers and `key = value`
//! pairs, `#`/`;` comments. Unknown sections or keys are rejected with the
//! offending line number, and the effective configuration serializes back
//! to a canonical form that reparses to the same values.

use std::path::{Path, PathBuf};

use crate::assembly::PhysicalParams;
use crate::error::{Error, Result};
use crate::geometry::{DiscGeometry, DomainSpec, Vec2};
use crate::mesh::MeshParams;
use crate::optimizer::OptimizerConfig;
use crate::solver::TimeGrid;

/// Which tracking target the run uses; a recorded target is loaded from
/// `target_path` by the command layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionalVariant {
    Constant,
    Recorded { target_path: PathBuf },
    Zero,
}

/// Parsed and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub center: Vec2,
    pub radius: f64,
    pub margin: f64,
    pub physics: PhysicalParams,
    pub h: f64,
    pub interface_segments: usize,
    pub time_steps: usize,
    pub deterministic: bool,
    pub jitter: f64,
    pub jitter_seed: u64,
    pub functional: FunctionalVariant,
    pub optimizer: OptimizerConfig,
    pub output_dir: PathBuf,
    pub write_vtk: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            center: Vec2::new(0.5, 0.5),
            radius: 0.2,
            margin: 0.02,
            physics: PhysicalParams {
                kappa: 100.0,
                resistance: 0.01,
                boundary_temperature: 500.0,
                horizon: 0.5,
            },
            h: 0.02,
            interface_segments: 64,
            time_steps: 50,
            deterministic: true,
            jitter: 0.0,
            jitter_seed: 0,
            functional: FunctionalVariant::Constant,
            optimizer: OptimizerConfig::default(),
            output_dir: PathBuf::from("out"),
            write_vtk: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::Config(format!("line {line}: cannot parse value '{value}' for key '{key}'"))
    })
}

fn parse_bool(value: &str, line: usize, key: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "line {line}: key '{key}' expects true or false, got '{value}'"
        ))),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        let mut section = String::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut functional_variant: Option<String> = None;
        let mut target_path: Option<PathBuf> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let without_comment = match raw.find(['#', ';']) {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = without_comment.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    Error::Config(format!("line {line_no}: malformed section header '{raw}'"))
                })?;
                section = name.trim().to_string();
                match section.as_str() {
                    "geometry" | "physics" | "discretization" | "functional" | "optimizer"
                    | "output" => {}
                    other => {
                        return Err(Error::Config(format!(
                            "line {line_no}: unknown section '[{other}]'"
                        )));
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {line_no}: expected 'key = value', got '{raw}'"))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert((section.clone(), key.to_string())) {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate key '{key}' in section '[{section}]'"
                )));
            }
            match (section.as_str(), key) {
                ("geometry", "center_x") => config.center.x = parse_num(value, line_no, key)?,
                ("geometry", "center_y") => config.center.y = parse_num(value, line_no, key)?,
                ("geometry", "radius") => config.radius = parse_num(value, line_no, key)?,
                ("geometry", "margin") => config.margin = parse_num(value, line_no, key)?,
                ("physics", "kappa") => config.physics.kappa = parse_num(value, line_no, key)?,
                ("physics", "resistance") => {
                    config.physics.resistance = parse_num(value, line_no, key)?
                }
                ("physics", "boundary_temperature") => {
                    config.physics.boundary_temperature = parse_num(value, line_no, key)?
                }
                ("physics", "horizon") => config.physics.horizon = parse_num(value, line_no, key)?,
                ("discretization", "h") => config.h = parse_num(value, line_no, key)?,
                ("discretization", "interface_segments") => {
                    config.interface_segments = parse_num(value, line_no, key)?
                }
                ("discretization", "time_steps") => {
                    config.time_steps = parse_num(value, line_no, key)?
                }
                ("discretization", "deterministic") => {
                    config.deterministic = parse_bool(value, line_no, key)?
                }
                ("discretization", "jitter") => config.jitter = parse_num(value, line_no, key)?,
                ("discretization", "jitter_seed") => {
                    config.jitter_seed = parse_num(value, line_no, key)?
                }
                ("functional", "variant") => functional_variant = Some(value.to_string()),
                ("functional", "target_path") => target_path = Some(PathBuf::from(value)),
                ("optimizer", "initial_step") => {
                    config.optimizer.initial_step = parse_num(value, line_no, key)?
                }
                ("optimizer", "normalize_gradient") => {
                    config.optimizer.normalize_gradient = parse_bool(value, line_no, key)?
                }
                ("optimizer", "max_iters") => {
                    config.optimizer.max_iters = parse_num(value, line_no, key)?
                }
                ("optimizer", "tol_center") => {
                    config.optimizer.tol_center = parse_num(value, line_no, key)?
                }
                ("optimizer", "tol_objective") => {
                    config.optimizer.tol_objective = parse_num(value, line_no, key)?
                }
                ("optimizer", "max_backtracks") => {
                    config.optimizer.max_backtracks = parse_num(value, line_no, key)?
                }
                ("output", "directory") => config.output_dir = PathBuf::from(value),
                ("output", "write_vtk") => config.write_vtk = parse_bool(value, line_no, key)?,
                _ => {
                    return Err(Error::Config(format!(
                        "line {line_no}: unknown key '{key}' in section '[{section}]'"
                    )));
                }
            }
        }

        config.functional = match functional_variant.as_deref() {
            None | Some("constant") => FunctionalVariant::Constant,
            Some("zero") => FunctionalVariant::Zero,
            Some("recorded") => FunctionalVariant::Recorded {
                target_path: target_path.clone().ok_or_else(|| {
                    Error::Config("functional variant 'recorded' needs target_path".into())
                })?,
            },
            Some(other) => {
                return Err(Error::Config(format!(
                    "unknown functional variant '{other}' (expected constant, recorded or zero)"
                )));
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        if !(self.margin > 0.0) {
            return Err(Error::Config(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        self.geometry()?;
        TimeGrid::new(self.physics.horizon, self.time_steps)?;
        if !self.deterministic && self.jitter == 0.0 {
            return Err(Error::Config(
                "deterministic = false requires a positive jitter amplitude".into(),
            ));
        }
        Ok(())
    }

    /// The disc described by the config; fails when it is not interior.
    pub fn geometry(&self) -> Result<DiscGeometry> {
        let geom = DiscGeometry::new(self.center, self.radius)?;
        geom.validate_interior(self.margin)?;
        Ok(geom)
    }

    pub fn domain(&self) -> DomainSpec {
        DomainSpec {
            margin: self.margin,
        }
    }

    pub fn mesh_params(&self) -> MeshParams {
        MeshParams {
            target_h: self.h,
            interface_segments: self.interface_segments,
            jitter: if self.deterministic { 0.0 } else { self.jitter },
            jitter_seed: self.jitter_seed,
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.physics.horizon, self.time_steps)
    }

    /// Canonical serialization; reparsing reproduces the same config.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let f = |v: f64| format!("{v:.16e}");
        s.push_str("[geometry]\n");
        s.push_str(&format!("center_x = {}\n", f(self.center.x)));
        s.push_str(&format!("center_y = {}\n", f(self.center.y)));
        s.push_str(&format!("radius = {}\n", f(self.radius)));
        s.push_str(&format!("margin = {}\n", f(self.margin)));
        s.push_str("\n[physics]\n");
        s.push_str(&format!("kappa = {}\n", f(self.physics.kappa)));
        s.push_str(&format!("resistance = {}\n", f(self.physics.resistance)));
        s.push_str(&format!(
            "boundary_temperature = {}\n",
            f(self.physics.boundary_temperature)
        ));
        s.push_str(&format!("horizon = {}\n", f(self.physics.horizon)));
        s.push_str("\n[discretization]\n");
        s.push_str(&format!("h = {}\n", f(self.h)));
        s.push_str(&format!("interface_segments = {}\n", self.interface_segments));
        s.push_str(&format!("time_steps = {}\n", self.time_steps));
        s.push_str(&format!("deterministic = {}\n", self.deterministic));
        s.push_str(&format!("jitter = {}\n", f(self.jitter)));
        s.push_str(&format!("jitter_seed = {}\n", self.jitter_seed));
        s.push_str("\n[functional]\n");
        match &self.functional {
            FunctionalVariant::Constant => s.push_str("variant = constant\n"),
            FunctionalVariant::Zero => s.push_str("variant = zero\n"),
            FunctionalVariant::Recorded { target_path } => {
                s.push_str("variant = recorded\n");
                s.push_str(&format!("target_path = {}\n", target_path.display()));
            }
        }
        s.push_str("\n[optimizer]\n");
        s.push_str(&format!("initial_step = {}\n", f(self.optimizer.initial_step)));
        s.push_str(&format!(
            "normalize_gradient = {}\n",
            self.optimizer.normalize_gradient
        ));
        s.push_str(&format!("max_iters = {}\n", self.optimizer.max_iters));
        s.push_str(&format!("tol_center = {}\n", f(self.optimizer.tol_center)));
        s.push_str(&format!(
            "tol_objective = {}\n",
            f(self.optimizer.tol_objective)
        ));
        s.push_str(&format!("max_backtracks = {}\n", self.optimizer.max_backtracks));
        s.push_str("\n[output]\n");
        s.push_str(&format!("directory = {}\n", self.output_dir.display()));
        s.push_str(&format!("write_vtk = {}\n", self.write_vtk));
        s
    }
}
