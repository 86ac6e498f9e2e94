//! Run configuration: a TOML file with named blocks, parsed strictly
//! (unknown keys are rejected so a typo cannot silently change a run).
//!
//! Input paths (mesh, regions, curve, reference) resolve relative to the
//! config file's directory; the output directory resolves relative to the
//! working directory. Command-line flags override config entries, which
//! override built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshBlock,
    pub material: MaterialBlock,
    pub schedule: ScheduleBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    pub output: OutputBlock,
    #[serde(default)]
    pub metrics: Option<MetricsBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshBlock {
    /// Native `.mesh` file, or Wavefront `.obj` plus a region sidecar.
    pub path: PathBuf,
    /// Sidecar listing bilayer triangle indices (required for `.obj`
    /// input unless the pattern covers nothing).
    #[serde(default)]
    pub regions: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialBlock {
    /// Young's modulus of the responsive substrate (MPa).
    pub substrate_modulus: f64,
    /// Thickness of the responsive substrate (mm).
    pub substrate_thickness: f64,
    /// Young's modulus of the patterned stiff layer (MPa).
    pub pattern_modulus: f64,
    /// Thickness of the patterned stiff layer (mm).
    pub pattern_thickness: f64,
    /// Multiplier on the stretching stiffnesses (default 10).
    #[serde(default = "default_stretch_scale")]
    pub stretch_scale: f64,
    /// Mismatch coupling (1/mm); defaults to 1 / mean edge length.
    #[serde(default)]
    pub coupling: Option<f64>,
}

fn default_stretch_scale() -> f64 {
    morphshell_core::material::DEFAULT_STRETCH_SCALE
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    /// Final peak thermal strain (<= 0). Exclusive with `temperature_ratio`.
    #[serde(default)]
    pub target_strain: Option<f64>,
    /// Normalized temperature T/Tg, converted through the shrink curve.
    #[serde(default)]
    pub temperature_ratio: Option<f64>,
    /// Two-column shrink curve file (T/Tg, L/L0); comments allowed.
    #[serde(default)]
    pub curve: Option<PathBuf>,
    /// Glass transition temperature in Kelvin (bookkeeping for the curve).
    #[serde(default = "default_tg")]
    pub tg_kelvin: f64,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
    #[serde(default = "default_min_step")]
    pub min_step: f64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    /// Transverse symmetry-breaking force per node (N); defaults to
    /// 1e-4 * ks_single / l0.
    #[serde(default)]
    pub perturbation_force: Option<f64>,
    #[serde(default)]
    pub perturbation_decay: DecayKind,
}

fn default_tg() -> f64 {
    366.5
}
fn default_initial_step() -> f64 {
    0.05
}
fn default_min_step() -> f64 {
    1e-4
}
fn default_max_step() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    #[default]
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_newton")]
    pub max_newton_iterations: usize,
    #[serde(default)]
    pub mode: ModeKind,
    /// Time step (s), dynamic mode only.
    #[serde(default)]
    pub time_step: Option<f64>,
    /// Mass density (tonne/mm^3), dynamic mode only.
    #[serde(default)]
    pub density: Option<f64>,
    /// "auto" picks the 3-2-1 scheme; explicit node indices pin all three
    /// coordinates of each listed node.
    #[serde(default)]
    pub pinned_nodes: Option<Vec<usize>>,
    /// Max per-node residual force at the final state (N).
    #[serde(default)]
    pub force_tolerance: Option<f64>,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            max_newton_iterations: default_max_newton(),
            mode: ModeKind::Static,
            time_step: None,
            density: None,
            pinned_nodes: None,
            force_tolerance: None,
        }
    }
}

fn default_tolerance() -> f64 {
    1e-5
}
fn default_max_newton() -> usize {
    60
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    #[default]
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: PathBuf,
    /// Write a snapshot every n-th accepted step (0 = final state only).
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

fn default_snapshot_every() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsBlock {
    /// Reference surface to compare the final state against.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    /// Voxel grid resolution per axis.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    10
}

/// Flag overrides collected from the command line (flag > config).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub target_strain: Option<f64>,
    pub output_directory: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub snapshot_every: Option<usize>,
    pub stretch_scale: Option<f64>,
    pub coupling: Option<f64>,
    pub grid: Option<usize>,
    pub reference: Option<PathBuf>,
}

impl RunConfig {
    /// Parse a config file strictly and resolve its input paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.mesh.path = resolve(base, &config.mesh.path);
        if let Some(r) = &config.mesh.regions {
            config.mesh.regions = Some(resolve(base, r));
        }
        if let Some(c) = &config.schedule.curve {
            config.schedule.curve = Some(resolve(base, c));
        }
        if let Some(m) = &mut config.metrics {
            if let Some(r) = &m.reference {
                m.reference = Some(resolve(base, r));
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn apply_overrides(&mut self, ov: &Overrides) -> Result<(), CliError> {
        if let Some(t) = ov.target_strain {
            self.schedule.target_strain = Some(t);
            self.schedule.temperature_ratio = None;
        }
        if let Some(dir) = &ov.output_directory {
            self.output.directory = dir.clone();
        }
        if let Some(tol) = ov.tolerance {
            self.solver.tolerance = tol;
        }
        if let Some(n) = ov.snapshot_every {
            self.output.snapshot_every = n;
        }
        if let Some(s) = ov.stretch_scale {
            self.material.stretch_scale = s;
        }
        if let Some(c) = ov.coupling {
            self.material.coupling = Some(c);
        }
        if let Some(g) = ov.grid {
            match &mut self.metrics {
                Some(m) => m.grid = g,
                None => {
                    self.metrics = Some(MetricsBlock {
                        reference: None,
                        grid: g,
                    })
                }
            }
        }
        if let Some(r) = &ov.reference {
            match &mut self.metrics {
                Some(m) => m.reference = Some(r.clone()),
                None => {
                    self.metrics = Some(MetricsBlock {
                        reference: Some(r.clone()),
                        grid: default_grid(),
                    })
                }
            }
        }
        self.validate()
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("material.substrate_modulus", self.material.substrate_modulus),
            ("material.substrate_thickness", self.material.substrate_thickness),
            ("material.pattern_modulus", self.material.pattern_modulus),
            ("material.pattern_thickness", self.material.pattern_thickness),
            ("material.stretch_scale", self.material.stretch_scale),
            ("schedule.initial_step", self.schedule.initial_step),
            ("schedule.min_step", self.schedule.min_step),
            ("schedule.max_step", self.schedule.max_step),
            ("solver.tolerance", self.solver.tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::input(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        match (self.schedule.target_strain, self.schedule.temperature_ratio) {
            (Some(t), None) => {
                if !(t <= 0.0) {
                    return Err(CliError::input(format!(
                        "schedule.target_strain must be <= 0 (contraction), got {t}"
                    )));
                }
            }
            (None, Some(_)) => {
                if self.schedule.curve.is_none() {
                    return Err(CliError::input(
                        "schedule.temperature_ratio needs schedule.curve".into(),
                    ));
                }
            }
            (Some(_), Some(_)) => {
                return Err(CliError::input(
                    "schedule: give either target_strain or temperature_ratio, not both".into(),
                ));
            }
            (None, None) => {
                return Err(CliError::input(
                    "schedule: one of target_strain or temperature_ratio is required".into(),
                ));
            }
        }
        if self.solver.mode == ModeKind::Dynamic
            && (self.solver.time_step.is_none() || self.solver.density.is_none())
        {
            return Err(CliError::input(
                "solver: dynamic mode requires time_step and density".into(),
            ));
        }
        if let Some(m) = &self.metrics {
            if m.grid < 2 {
                return Err(CliError::input(format!(
                    "metrics.grid must be at least 2, got {}",
                    m.grid
                )));
            }
        }
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
