//! Run configuration: one JSON document, validated up front so that every
//! error names the field it came from.

use std::fmt;
use std::path::{Path, PathBuf};

use heisenlab::context::ProbeSpec;
use heisenlab::orbit::OrbitSettings;
use heisenlab::suite::{default_suite, FamilySpec};
use heisenlab::verdict::Thresholds;
use heisenlab::window::WindowSpec;
use heisenlab::{LengthRule, SchattenIndex};
use serde::{Deserialize, Serialize};

/// Smallest N a run accepts; coarser grids leave the phase-space window
/// nearly empty.
pub const MIN_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    RefineStudy,
    Counterexamples,
    Garding,
    WeylAudit,
    FullAudit,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::RefineStudy => "refine-study",
            Command::Counterexamples => "counterexamples",
            Command::Garding => "garding",
            Command::WeylAudit => "weyl-audit",
            Command::FullAudit => "full-audit",
        }
    }

    pub fn needs_smoothness(self) -> bool {
        matches!(self, Command::Classify | Command::Counterexamples | Command::FullAudit)
    }

    pub fn needs_study(self) -> bool {
        matches!(self, Command::RefineStudy | Command::Counterexamples | Command::FullAudit)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Spatial dimension for families that do not set their own `n`.
    pub n: usize,
    pub points: Vec<usize>,
    /// Overrides every family's own length rule when set.
    pub length: Option<LengthRule>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 1, points: vec![128, 256, 512], length: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub points: usize,
    pub samples: usize,
    pub deltas: Vec<f64>,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig { points: 64, samples: 100, deltas: vec![0.1, 0.01] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GardingConfig {
    /// Mollifier widths, strictly decreasing.
    pub widths: Vec<f64>,
    pub q: SchattenIndex,
}

impl Default for GardingConfig {
    fn default() -> Self {
        GardingConfig { widths: vec![0.5, 0.25, 0.1], q: SchattenIndex::Infinity }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeylConfig {
    pub families: Vec<FamilySpec>,
    pub p: SchattenIndex,
    /// Grid and sample count for the identity / round-trip / Plancherel checks.
    pub check_points: usize,
    pub check_samples: usize,
}

impl Default for WeylConfig {
    fn default() -> Self {
        WeylConfig {
            families: vec![
                FamilySpec::constant(1.0),
                FamilySpec::separable_trig(std::f64::consts::PI / 4.0),
                FamilySpec::chirp(1.0 / 16.0),
            ],
            p: SchattenIndex::Infinity,
            check_points: 64,
            check_samples: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must agree with the command given on the command line.
    pub command: Option<Command>,
    pub grid: GridConfig,
    /// Operator families to audit; defaults depend on the command.
    pub families: Option<Vec<FamilySpec>>,
    pub q: Vec<SchattenIndex>,
    pub k_max: usize,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub window: WindowSpec,
    pub probes: ProbeSpec,
    pub orbit: OrbitSettings,
    pub reduction: ReductionConfig,
    pub garding: GardingConfig,
    pub weyl: WeylConfig,
    // run environment: kept out of report echoes so reports stay comparable
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub cache: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            grid: GridConfig::default(),
            families: None,
            q: vec![SchattenIndex::Infinity, SchattenIndex::Finite(2.0)],
            k_max: 3,
            thresholds: Thresholds::default(),
            seed: 2024,
            window: WindowSpec::default(),
            probes: ProbeSpec::default(),
            orbit: OrbitSettings::default(),
            reduction: ReductionConfig::default(),
            garding: GardingConfig::default(),
            weyl: WeylConfig::default(),
            output_dir: None,
            cache: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.into() }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    /// Families for `command`: the configured list, or the command's default.
    pub fn families_for(&self, command: Command) -> Vec<FamilySpec> {
        if let Some(f) = &self.families {
            return f.clone();
        }
        match command {
            Command::Counterexamples => {
                let p = 2.0 * std::f64::consts::PI;
                vec![FamilySpec::triangle_wave(p, 1.0), FamilySpec::holder_half(p)]
            }
            _ => default_suite(),
        }
    }

    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(field("command", format!("config says '{c}' but '{command}' was requested")));
            }
        }
        let pts = &self.grid.points;
        if pts.len() < 3 {
            return Err(field("grid.points", "growth fits need at least three grid sizes"));
        }
        for &n in pts {
            if n % 2 != 0 {
                return Err(field("grid.points", format!("{n} is odd; every N must be even")));
            }
            if n < MIN_POINTS {
                return Err(field("grid.points", format!("{n} is below the minimum {MIN_POINTS}")));
            }
        }
        if pts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field("grid.points", "must be strictly increasing"));
        }
        if self.grid.n == 0 {
            return Err(field("grid.n", "must be >= 1"));
        }
        if let Some(LengthRule::Fixed { length }) = self.grid.length {
            if !(length.is_finite() && length > 0.0) {
                return Err(field("grid.length", "fixed length must be positive"));
            }
        }
        if self.k_max > 3 {
            return Err(field("k_max", format!("must be <= 3, got {}", self.k_max)));
        }
        if self.q.is_empty() {
            return Err(field("q", "need at least one Schatten index"));
        }
        self.thresholds.validate().map_err(|e| field("thresholds", e.to_string()))?;
        if !(self.window.radius.is_finite() && self.window.radius > 0.0) {
            return Err(field("window.radius", "must be positive"));
        }
        if !(self.probes.width_fraction.is_finite() && self.probes.width_fraction > 0.0) {
            return Err(field("probes.width_fraction", "must be positive"));
        }
        if !(self.orbit.first_step.is_finite() && self.orbit.first_step > 0.0) {
            return Err(field("orbit.first_step", "must be positive"));
        }
        if self.orbit.step_count < 2 {
            return Err(field("orbit.step_count", "need at least two steps"));
        }
        if let Some(fams) = &self.families {
            if fams.is_empty() {
                return Err(field("families", "must not be empty"));
            }
            for (i, f) in fams.iter().enumerate() {
                f.validate().map_err(|e| field(format!("families[{i}]"), e.to_string()))?;
            }
        }
        let r = &self.reduction;
        if r.samples == 0 {
            return Err(field("reduction.samples", "must be >= 1"));
        }
        if !r.points.is_multiple_of(2) || r.points < MIN_POINTS {
            return Err(field("reduction.points", format!("must be even and >= {MIN_POINTS}")));
        }
        if r.deltas.is_empty() || r.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(field("reduction.deltas", "need positive finite step bounds"));
        }
        let g = &self.garding;
        if g.widths.is_empty() || g.widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(field("garding.widths", "need positive finite widths"));
        }
        if g.widths.windows(2).any(|w| w[1] >= w[0]) {
            return Err(field("garding.widths", "must be strictly decreasing"));
        }
        let w = &self.weyl;
        for (i, f) in w.families.iter().enumerate() {
            f.validate().map_err(|e| field(format!("weyl.families[{i}]"), e.to_string()))?;
            if !f.is_symbol() {
                return Err(field(format!("weyl.families[{i}]"), format!("'{}' is not a symbol family", f.name)));
            }
        }
        if !w.check_points.is_multiple_of(2) || w.check_points < MIN_POINTS {
            return Err(field("weyl.check_points", format!("must be even and >= {MIN_POINTS}")));
        }
        if w.check_samples == 0 {
            return Err(field("weyl.check_samples", "must be >= 1"));
        }
        Ok(())
    }
}
