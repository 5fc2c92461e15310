use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unwrap_dd::decomp::DecompConfig;
use unwrap_dd::graph::ArcLevel;
use unwrap_dd::mcf::McfSolver;
use unwrap_dd::phase::{CostScheme, Surface};

use crate::CliError;

/// How a field is unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    /// Dual decomposition with cost-scaling subproblems.
    CostScaling,
    /// Dual decomposition with network-simplex subproblems.
    Simplex,
    /// Dense LP over the full cycle constraints (small grids only).
    Oracle,
    /// A single min-cost flow on the planar grid, ignoring redundant arcs.
    McfOnly,
}

impl SolverChoice {
    pub fn name(self) -> &'static str {
        match self {
            SolverChoice::CostScaling => "cost-scaling",
            SolverChoice::Simplex => "simplex",
            SolverChoice::Oracle => "oracle",
            SolverChoice::McfOnly => "mcf-only",
        }
    }
}

impl FromStr for SolverChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Self as clap::ValueEnum>::from_str(s, true)
            .map_err(|_| CliError::Usage(format!("unknown solver {s:?}")))
    }
}

/// Everything a sweep needs. Loadable from TOML or JSON; command-line flags
/// override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Surface specs such as `bump` or `ramp:0.3,0.5`.
    pub shapes: Vec<String>,
    pub sizes: Vec<usize>,
    pub noise_levels: Vec<f64>,
    pub instances: usize,
    pub arc_levels: Vec<u8>,
    pub solvers: Vec<SolverChoice>,
    pub seed: u64,
    pub alpha0: f64,
    pub max_iterations: usize,
    pub window: usize,
    pub epsilon_factor: u32,
    pub cost_scheme: CostScheme,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let dd = DecompConfig::default();
        ExperimentConfig {
            shapes: Surface::defaults().iter().map(|s| s.name().to_string()).collect(),
            sizes: vec![64],
            noise_levels: vec![0.4, 0.6, 0.8, 1.0],
            instances: 10,
            arc_levels: vec![1, 2],
            solvers: vec![SolverChoice::CostScaling, SolverChoice::Simplex],
            seed: 0,
            alpha0: dd.alpha0,
            max_iterations: dd.max_iterations,
            window: dd.window,
            epsilon_factor: 8,
            cost_scheme: CostScheme::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Reads TOML (`.toml`) or JSON (anything else).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(crate::field_file::io_error(path, e)))?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|message| {
            CliError::Input(unwrap_dd::Error::Parse {
                location: path.display().to_string(),
                message,
            })
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let empty = [
            ("shapes", self.shapes.is_empty()),
            ("sizes", self.sizes.is_empty()),
            ("noise_levels", self.noise_levels.is_empty()),
            ("arc_levels", self.arc_levels.is_empty()),
            ("solvers", self.solvers.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(CliError::Usage(format!("{name} must not be empty")));
        }
        if self.instances == 0 {
            return Err(CliError::Usage("instances must be positive".into()));
        }
        if let Some(v) = self.noise_levels.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(CliError::Usage(format!("noise level {v} must be a nonnegative number")));
        }
        if let Some(s) = self.sizes.iter().find(|&&s| s < 2) {
            return Err(CliError::Usage(format!("size {s} is below 2")));
        }
        self.surfaces()?;
        for &r in &self.arc_levels {
            ArcLevel::from_index(r).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if self.epsilon_factor < 2 {
            return Err(CliError::Usage("epsilon_factor must be at least 2".into()));
        }
        if !(self.alpha0 > 0.0) || self.max_iterations == 0 || self.window == 0 {
            return Err(CliError::Usage(
                "alpha0, max_iterations and window must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn surfaces(&self) -> Result<Vec<Surface>, CliError> {
        self.shapes
            .iter()
            .map(|s| s.parse::<Surface>().map_err(|e| CliError::Usage(e.to_string())))
            .collect()
    }

    pub fn decomp_config(&self, solver: McfSolver) -> DecompConfig {
        DecompConfig {
            alpha0: self.alpha0,
            max_iterations: self.max_iterations,
            window: self.window,
            solver,
            cost_scheme: self.cost_scheme,
            ..DecompConfig::default()
        }
    }
}
