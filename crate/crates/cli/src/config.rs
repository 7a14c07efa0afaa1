//! JSON run configuration.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "model": { "r": 0.1211, "alpha": 0.0743, "delta": 0.0049, "sigma": 0.0121, "K": 4.694e7 },
//!   "noise": { "omega1": 0.1, "omega2": 0.1 },
//!   "seed": 42,
//!   "output": { "dir": "out", "format": "csv" },
//!   "ensemble": { "replicates": 1000 }
//! }
//! ```
//!
//! At most one command block (`analyze`, `simulate`, `ensemble`, `sweep`) may
//! be present and it must match the invoked command. `analyze` needs no block.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ssrna_core::model::{ModelParams, RawParams, State};
use ssrna_core::stability::NoiseSpec;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub omega1: f64,
    pub omega2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorChoice {
    /// `E+` when it exists, else the origin.
    #[default]
    Auto,
    Positive,
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    Rk4,
    EulerMaruyama,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeBlock {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Defaults to the anchor displaced by `displacement`.
    #[serde(default)]
    pub initial: Option<State>,
    #[serde(default)]
    pub displacement: Option<f64>,
    #[serde(default)]
    pub record_stride: Option<usize>,
    /// Defaults to RK4 without noise, Euler–Maruyama otherwise.
    #[serde(default)]
    pub scheme: Option<SchemeChoice>,
    #[serde(default)]
    pub anchor: AnchorChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    pub replicates: usize,
    /// Defaults to `horizon_multiple / |Tr(A)|` at the anchor.
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub horizon_multiple: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub initial: Option<State>,
    #[serde(default)]
    pub displacement: Option<f64>,
    /// Absolute exceedance radius; overrides `epsilon_fraction`.
    #[serde(default)]
    pub epsilon1: Option<f64>,
    #[serde(default)]
    pub epsilon_fraction: Option<f64>,
    #[serde(default)]
    pub record_stride: Option<usize>,
    #[serde(default)]
    pub anchor: AnchorChoice,
}

/// Per-field value lists; a missing field takes the `model` value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsGrid {
    #[serde(default)]
    pub r: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub delta: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, rename = "K")]
    pub k: Option<Vec<f64>>,
}

/// Noise values given either as intensities or as `gamma = omega^2 / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum NoiseGrid {
    Omega { omega1: Vec<f64>, omega2: Vec<f64> },
    Gamma { gamma1: Vec<f64>, gamma2: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default)]
    pub params_grid: ParamsGrid,
    pub noise_grid: NoiseGrid,
    pub replicates: usize,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub horizon_multiple: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub displacement: Option<f64>,
    #[serde(default)]
    pub epsilon_fraction: Option<f64>,
    #[serde(default)]
    pub record_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub model: RawParams,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub analyze: Option<AnalyzeBlock>,
    #[serde(default)]
    pub simulate: Option<SimulateBlock>,
    #[serde(default)]
    pub ensemble: Option<EnsembleBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Simulate,
    Ensemble,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Simulate => "simulate",
            Command::Ensemble => "ensemble",
            Command::Sweep => "sweep",
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("malformed config: {e}")))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(CliError::Invalid(format!("unsupported schema {} (expected {SCHEMA_VERSION})", cfg.schema)));
        }
        Ok(cfg)
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::try_from(self.model).map_err(|e| CliError::Invalid(format!("model.{}: {e}", e.field())))
    }

    pub fn noise(&self) -> Result<NoiseSpec, CliError> {
        match self.noise {
            None => Ok(NoiseSpec::zero()),
            Some(n) => NoiseSpec::new(n.omega1, n.omega2).map_err(|e| CliError::Invalid(format!("noise: {e}"))),
        }
    }

    fn present_blocks(&self) -> Vec<Command> {
        let mut v = Vec::new();
        if self.analyze.is_some() {
            v.push(Command::Analyze);
        }
        if self.simulate.is_some() {
            v.push(Command::Simulate);
        }
        if self.ensemble.is_some() {
            v.push(Command::Ensemble);
        }
        if self.sweep.is_some() {
            v.push(Command::Sweep);
        }
        v
    }

    /// Checks that the command blocks are consistent with `cmd`.
    pub fn check_blocks(&self, cmd: Command) -> Result<(), CliError> {
        let blocks = self.present_blocks();
        match blocks.as_slice() {
            [] if cmd == Command::Analyze => Ok(()),
            [] => Err(CliError::Invalid(format!("config has no `{}` block", cmd.name()))),
            [only] if *only == cmd => Ok(()),
            [only] => Err(CliError::Invalid(format!(
                "config holds a `{}` block but `{}` was invoked",
                only.name(),
                cmd.name()
            ))),
            many => Err(CliError::Invalid(format!(
                "config must hold exactly one command block, found {}",
                many.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
            ))),
        }
    }
}

impl ParamsGrid {
    /// Cartesian product in field order `r, alpha, delta, sigma, K`.
    pub fn expand(&self, base: RawParams) -> Vec<RawParams> {
        let pick = |v: &Option<Vec<f64>>, d: f64| v.clone().unwrap_or_else(|| vec![d]);
        let mut out = Vec::new();
        for &r in &pick(&self.r, base.r) {
            for &alpha in &pick(&self.alpha, base.alpha) {
                for &delta in &pick(&self.delta, base.delta) {
                    for &sigma in &pick(&self.sigma, base.sigma) {
                        for &k in &pick(&self.k, base.k) {
                            out.push(RawParams { r, alpha, delta, sigma, k });
                        }
                    }
                }
            }
        }
        out
    }
}

impl NoiseGrid {
    /// Cartesian product (first component major).
    pub fn expand(&self) -> Result<Vec<NoiseSpec>, CliError> {
        let err = |e: ssrna_core::StabilityError| CliError::Invalid(format!("sweep.noise_grid: {e}"));
        let (a, b, from_gamma) = match self {
            NoiseGrid::Omega { omega1, omega2 } => (omega1, omega2, false),
            NoiseGrid::Gamma { gamma1, gamma2 } => (gamma1, gamma2, true),
        };
        let mut out = Vec::new();
        for &x in a {
            for &y in b {
                let spec = if from_gamma { NoiseSpec::from_gammas(x, y) } else { NoiseSpec::new(x, y) };
                out.push(spec.map_err(err)?);
            }
        }
        Ok(out)
    }
}
