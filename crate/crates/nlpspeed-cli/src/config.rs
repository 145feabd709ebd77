//! Scenario configuration: built-in presets, TOML loading with schema
//! validation, and command-line overrides.

use std::path::{Path, PathBuf};

use nlpspeed::hj_speed::DEFAULT_GRID_N;
use nlpspeed::model::{validate_hierarchy, DecayRate, ModelParams};
use nlpspeed::pde_sim::{InitialData, InitialProfile, SpeciesMask};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Names of the built-in scenarios.
pub const PRESET_NAMES: [&str; 7] = ["fig1a", "fig1b", "fig2a", "fig2b", "fig2c", "fig2d", "kpp"];

/// Right end of the initial plateau `[0, x0]`.
pub const DEFAULT_PLATEAU_END: f64 = 10.0;

/// Everything a pipeline run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub params: ModelParams,
    /// Decay rate of the initial datum of `u3` (`"inf"` for compact support).
    #[serde(default = "default_lambda")]
    pub lambda: DecayRate,
    pub initial: InitialData,
    /// Species integrated by the simulator.
    #[serde(default = "default_active")]
    pub active: SpeciesMask,
    pub grid: GridSpec,
    #[serde(default)]
    pub hj: HjSpec,
    #[serde(default)]
    pub pipeline: PipelineFlags,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Simulation grid and snapshot schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Domain length `L`.
    pub length: f64,
    /// Number of grid points.
    pub n: usize,
    /// Final time `T`.
    pub t_final: f64,
    /// Time between snapshots used for front tracking.
    #[serde(default = "default_snapshot_interval")]
    pub snapshot_interval: f64,
}

/// Speed-space solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjSpec {
    /// Number of grid intervals of the speed-space solver.
    #[serde(default = "default_hj_n")]
    pub n: usize,
}

impl Default for HjSpec {
    fn default() -> Self {
        Self { n: DEFAULT_GRID_N }
    }
}

/// Which engines `compare` and `sweep` run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineFlags {
    #[serde(default = "default_true")]
    pub hj: bool,
    #[serde(default = "default_true")]
    pub pde: bool,
}

impl Default for PipelineFlags {
    fn default() -> Self {
        Self { hj: true, pde: true }
    }
}

/// Output directory and thinning of `snapshots.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Keep every `x_stride`-th grid point.
    #[serde(default = "default_x_stride")]
    pub x_stride: usize,
    /// Keep every `t_stride`-th snapshot.
    #[serde(default = "default_t_stride")]
    pub t_stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            x_stride: default_x_stride(),
            t_stride: default_t_stride(),
        }
    }
}

fn default_lambda() -> DecayRate {
    DecayRate::Infinite
}

fn default_active() -> SpeciesMask {
    [true; 3]
}

fn default_snapshot_interval() -> f64 {
    1.0
}

fn default_hj_n() -> usize {
    DEFAULT_GRID_N
}

fn default_true() -> bool {
    true
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_x_stride() -> usize {
    10
}

fn default_t_stride() -> usize {
    10
}

/// Desk-scale grid: `L = 1500`, `n = 15000`, `T = 400`.
pub fn desk_grid() -> GridSpec {
    GridSpec {
        length: 1500.0,
        n: 15000,
        t_final: 400.0,
        snapshot_interval: default_snapshot_interval(),
    }
}

/// A built-in scenario, or `None` for an unknown name.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let params = match name {
        "fig1a" => ModelParams::published(0.01, 1.1, 1.1),
        "fig1b" => ModelParams::published(0.5, 1.1, 1.1),
        "fig2a" => ModelParams::published(0.3, 1.1, 0.9),
        "fig2b" => ModelParams::published(0.3, 0.9, 1.1),
        "fig2c" => ModelParams::published(0.3, 0.5, 0.7),
        "fig2d" => ModelParams::published(0.3, 1.1, 1.1),
        "kpp" => ModelParams {
            a31: 0.0,
            a32: 0.0,
            ..ModelParams::published(0.3, 1.1, 1.1)
        },
        _ => return None,
    };
    let (initial, active) = if name == "kpp" {
        let initial = InitialData {
            u1: InitialProfile::Zero,
            u2: InitialProfile::Zero,
            u3: InitialProfile::Indicator {
                lo: 0.0,
                hi: DEFAULT_PLATEAU_END,
            },
        };
        (initial, [false, false, true])
    } else {
        (InitialData::indicator_all(0.0, DEFAULT_PLATEAU_END), [true; 3])
    };
    Some(ScenarioConfig {
        name: name.to_string(),
        params,
        lambda: DecayRate::Infinite,
        initial,
        active,
        grid: desk_grid(),
        hj: HjSpec::default(),
        pipeline: PipelineFlags::default(),
        output: OutputSpec::default(),
    })
}

/// Resolves a preset by name, listing the valid names on failure.
pub fn preset_or_err(name: &str) -> Result<ScenarioConfig> {
    preset(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown scenario `{name}`; expected one of {}",
            PRESET_NAMES.join(", ")
        ))
    })
}

/// Parses a TOML configuration.
pub fn from_toml(text: &str) -> Result<ScenarioConfig> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Renders a configuration as TOML.
pub fn to_toml(config: &ScenarioConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| CliError::Config(e.to_string()))
}

/// Reads and parses a TOML configuration file.
pub fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_toml(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Command-line adjustments applied on top of a preset or file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid_n: Option<usize>,
    pub t_final: Option<f64>,
    pub hj_n: Option<usize>,
    pub lambda: Option<DecayRate>,
    /// `(name, value)` pairs for model coefficients.
    pub set: Vec<(String, f64)>,
}

impl ScenarioConfig {
    /// Applies overrides and validates the result.
    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if let Some(n) = o.grid_n {
            self.grid.n = n;
        }
        if let Some(t) = o.t_final {
            self.grid.t_final = t;
        }
        if let Some(n) = o.hj_n {
            self.hj.n = n;
        }
        for (name, value) in &o.set {
            self.set_axis(name, *value)?;
        }
        if let Some(lambda) = o.lambda {
            self.set_lambda(lambda);
        }
        self.validate()?;
        Ok(self)
    }

    /// Sets a model coefficient or, for `"lambda"`, the decay rate.
    pub fn set_axis(&mut self, name: &str, value: f64) -> Result<()> {
        if name == "lambda" {
            let lambda = DecayRate::finite(value).map_err(|e| CliError::Config(e.to_string()))?;
            self.set_lambda(lambda);
            Ok(())
        } else if self.params.set(name, value) {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "unknown parameter `{name}`; expected lambda, d1, d3, r1, r3, a12, a13, a21, a23, a31 or a32"
            )))
        }
    }

    /// Sets the decay rate and the matching initial datum of `u3`: the
    /// plateau on `[0, x0]` followed by `exp(-lambda (x - x0))`, or the
    /// indicator of the plateau for compact support.
    pub fn set_lambda(&mut self, lambda: DecayRate) {
        self.lambda = lambda;
        if self.initial.u3 == InitialProfile::Zero {
            return;
        }
        self.initial.u3 = match lambda {
            DecayRate::Finite(l) => InitialProfile::ExpDecay {
                lambda: l,
                plateau_end: DEFAULT_PLATEAU_END,
            },
            DecayRate::Infinite => InitialProfile::Indicator {
                lo: 0.0,
                hi: DEFAULT_PLATEAU_END,
            },
        };
    }

    /// Checks coefficient ranges, the competitive hierarchy, grid and output
    /// settings, and that the initial datum of `u3` decays at rate `lambda`.
    pub fn validate(&self) -> Result<()> {
        self.params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let hierarchy = validate_hierarchy(&self.params);
        if !hierarchy.passed() {
            let failed: Vec<String> = hierarchy
                .failures()
                .map(|c| format!("{} ({})", c.label, c.detail))
                .collect();
            return Err(CliError::Config(format!(
                "competitive hierarchy violated: {}",
                failed.join("; ")
            )));
        }
        let g = &self.grid;
        if !(g.length.is_finite() && g.length > 0.0) {
            return Err(CliError::Config(format!("grid.length must be positive, got {}", g.length)));
        }
        if g.n < 3 {
            return Err(CliError::Config(format!("grid.n must be at least 3, got {}", g.n)));
        }
        if !(g.t_final.is_finite() && g.t_final > 0.0) {
            return Err(CliError::Config(format!("grid.t_final must be positive, got {}", g.t_final)));
        }
        if !(g.snapshot_interval.is_finite() && g.snapshot_interval > 0.0) {
            return Err(CliError::Config(format!(
                "grid.snapshot_interval must be positive, got {}",
                g.snapshot_interval
            )));
        }
        if self.hj.n < 512 {
            return Err(CliError::Config(format!("hj.n must be at least 512, got {}", self.hj.n)));
        }
        if self.output.x_stride == 0 || self.output.t_stride == 0 {
            return Err(CliError::Config("output strides must be at least 1".into()));
        }
        if !self.active.iter().any(|a| *a) {
            return Err(CliError::Config("at least one species must be active".into()));
        }
        self.initial
            .validate(g.length)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let consistent = match (self.initial.u3, self.lambda) {
            (InitialProfile::Zero, _) => true,
            (InitialProfile::Indicator { .. }, DecayRate::Infinite) => true,
            (InitialProfile::ExpDecay { lambda, .. }, DecayRate::Finite(l)) => lambda == l,
            _ => false,
        };
        if !consistent {
            return Err(CliError::Config(format!(
                "initial datum of u3 does not decay at rate lambda = {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// One-line summary of the resolved parameters for file headers.
    pub fn summary(&self) -> String {
        let p = &self.params;
        format!(
            "scenario={} d1={} d3={} r1={} r3={} a12={} a13={} a21={} a23={} a31={} a32={} lambda={} L={} n={} T={}",
            self.name,
            p.d1,
            p.d3,
            p.r1,
            p.r3,
            p.a12,
            p.a13,
            p.a21,
            p.a23,
            p.a31,
            p.a32,
            self.lambda,
            self.grid.length,
            self.grid.n,
            self.grid.t_final
        )
    }
}
