//! Command runners. Each returns the text for stdout and any warnings; files
//! are written into the output directory.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use ssrna_core::model::{Equilibrium, EquilibriumKind, ModelParams, State};
use ssrna_core::montecarlo::{
    anchor_scale, default_anchor, displaced_initial, estimate_stability_in_probability, write_sweep_csv, EnsembleError,
    SweepSettings,
};
use ssrna_core::simulator::{fmt_f64, SimError};
use ssrna_core::stability::{NoiseSpec, StabilityVerdict};
use ssrna_core::*;

use crate::config::{AnchorChoice, Command, Format, RunConfig, SchemeChoice};
use crate::report::{AnalysisReport, EnsembleReport, TrajectoryReport};
use crate::CliError;

const DEFAULT_DISPLACEMENT: f64 = 0.01;
const DEFAULT_HORIZON_MULTIPLE: f64 = 50.0;
const DEFAULT_EPSILON_FRACTION: f64 = 0.1;

/// Fully resolved invocation: config plus command-line overrides.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub format: Format,
    pub seed: u64,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Invocation {
    pub fn new(
        command: Command,
        config: RunConfig,
        out: Option<PathBuf>,
        format: Option<Format>,
        seed: Option<u64>,
    ) -> Self {
        let output = config.output.clone().unwrap_or(crate::config::OutputConfig { dir: None, format: None });
        Self {
            command,
            out_dir: out.or(output.dir).unwrap_or_else(|| PathBuf::from(".")),
            format: format.or(output.format).unwrap_or(Format::Csv),
            seed: seed.or(config.seed).unwrap_or(0),
            config,
        }
    }

    pub fn run(&self) -> Result<Outcome, CliError> {
        self.config.check_blocks(self.command)?;
        let params = self.config.params()?;
        let noise = self.config.noise()?;
        prepare_out_dir(&self.out_dir)?;
        match self.command {
            Command::Analyze => self.analyze(&params, &noise),
            Command::Simulate => self.simulate(&params, &noise),
            Command::Ensemble => self.ensemble(&params, &noise),
            Command::Sweep => self.sweep(&params),
        }
    }

    fn analyze(&self, params: &ModelParams, noise: &NoiseSpec) -> Result<Outcome, CliError> {
        let report = analysis_report(params, noise);
        let mut out = Outcome { stdout: report.to_text(), ..Default::default() };
        out.files.push(write_json(&self.out_dir.join("analysis.json"), &report)?);
        Ok(out)
    }

    fn simulate(&self, params: &ModelParams, noise: &NoiseSpec) -> Result<Outcome, CliError> {
        let block = self.config.simulate.as_ref().expect("checked by check_blocks");
        let mut out = Outcome::default();
        let anchor = resolve_anchor(params, block.anchor)?;
        let dt = block.dt.unwrap_or_else(|| default_dt(params));
        let initial = resolve_initial(params, &anchor, block.initial, block.displacement, &mut out)?;
        let scheme =
            block.scheme.unwrap_or(if noise.is_zero() { SchemeChoice::Rk4 } else { SchemeChoice::EulerMaruyama });
        let cfg =
            SimConfig::new(dt, block.t_end, initial).with_seed(self.seed).with_stride(block.record_stride.unwrap_or(1));
        cfg.validate().map_err(|e| CliError::Invalid(format!("simulate: {e}")))?;

        let traj = match scheme {
            SchemeChoice::Rk4 => {
                if !noise.is_zero() {
                    out.warnings.push("noise is ignored by the rk4 scheme".into());
                }
                integrate_ode(params, &cfg)
            }
            SchemeChoice::EulerMaruyama => integrate_sde(params, noise, &anchor, &cfg),
        }
        .map_err(sim_failure)?;

        let path = match self.format {
            Format::Csv => write_with(&self.out_dir.join("trajectory.csv"), |w| traj.write_csv(w))?,
            Format::Json => write_json(
                &self.out_dir.join("trajectory.json"),
                &TrajectoryReport {
                    model: params.raw(),
                    noise: noise.into(),
                    seed: self.seed,
                    dt,
                    trajectory: traj.clone(),
                },
            )?,
        };
        out.files.push(path);

        let end = traj.final_state();
        let s = &mut out.stdout;
        s.push_str(&format!("scheme: {:?}, dt = {dt:e}, steps = {}\n", traj.scheme, cfg.steps()));
        s.push_str(&format!("final state at t = {}: p = {:.6e}, m = {:.6e}\n", traj.final_time(), end.p, end.m));
        s.push_str(&match traj.exited_omega {
            Some(t) => format!("left the biological region at t = {t}\n"),
            None => "stayed in the biological region\n".into(),
        });
        s.push_str(&match traj.went_negative {
            Some(t) => format!("first negative component at t = {t}\n"),
            None => "no negative components\n".into(),
        });
        Ok(out)
    }

    fn ensemble(&self, params: &ModelParams, noise: &NoiseSpec) -> Result<Outcome, CliError> {
        let block = self.config.ensemble.as_ref().expect("checked by check_blocks");
        let mut out = Outcome::default();
        let anchor = resolve_anchor(params, block.anchor)?;
        let dt = block.dt.unwrap_or_else(|| default_dt(params));
        let lin = linearize(params, &anchor);
        let t_end =
            block.t_end.unwrap_or_else(|| block.horizon_multiple.unwrap_or(DEFAULT_HORIZON_MULTIPLE) / lin.trace.abs());
        let initial = resolve_initial(params, &anchor, block.initial, block.displacement, &mut out)?;
        let epsilon1 = block.epsilon1.unwrap_or_else(|| {
            block.epsilon_fraction.unwrap_or(DEFAULT_EPSILON_FRACTION) * anchor_scale(params, &anchor)
        });
        let cfg = EnsembleConfig {
            replicates: block.replicates,
            sim: SimConfig::new(dt, t_end, initial).with_stride(block.record_stride.unwrap_or(1)),
            noise: *noise,
            anchor,
            epsilon1,
            master_seed: self.seed,
        };
        cfg.validate().map_err(|e| CliError::Invalid(format!("ensemble: {e}")))?;
        let stats = run_ensemble(&cfg, params).map_err(|e| match e {
            EnsembleError::InvalidConfig(m) => CliError::Invalid(format!("ensemble: {m}")),
            other => CliError::Numerical(other.to_string()),
        })?;
        let estimate = match estimate_stability_in_probability(&stats) {
            Ok(e) => Some(e),
            Err(e) => {
                out.warnings.push(e.to_string());
                None
            }
        };
        let analytic = anchor_verdict(params, noise, &anchor);

        let path = match self.format {
            Format::Csv => write_with(&self.out_dir.join("ensemble.csv"), |w| stats.write_csv(w))?,
            Format::Json => write_json(
                &self.out_dir.join("ensemble.json"),
                &EnsembleReport {
                    model: params.raw(),
                    noise: noise.into(),
                    seed: self.seed,
                    dt,
                    t_end,
                    anchor: (&anchor).into(),
                    analytic: analytic.clone(),
                    estimate,
                    stats: stats.clone(),
                },
            )?,
        };
        out.files.push(path);

        let s = &mut out.stdout;
        s.push_str(&format!(
            "anchor: {:?} ({:.6e}, {:.6e}); {} replicates, dt = {dt:e}, t_end = {t_end:.6}\n",
            anchor.kind, anchor.p_star, anchor.m_star, stats.replicates
        ));
        s.push_str(&format!(
            "analytic: {}\n",
            if analytic.conditions_met { "sufficient conditions met" } else { "sufficient conditions not met" }
        ));
        s.push_str(&format!(
            "mean squared deviation: {:.6e} at t = 0, {:.6e} at t = {}\n",
            stats.initial_msd(),
            stats.final_msd(),
            stats.times.last().copied().unwrap_or(0.0)
        ));
        s.push_str(&format!(
            "exceedance of epsilon1 = {:.6e}: {} of {} finite paths ({:.4})",
            stats.epsilon1, stats.n_exceeded, stats.n_finite, stats.exceed_fraction
        ));
        match &estimate {
            Some(e) => s.push_str(&format!(", 95% Wilson interval [{:.4}, {:.4}]\n", e.lower, e.upper)),
            None => s.push('\n'),
        }
        s.push_str(&format!(
            "paths with negative components: {}, non-finite: {}\n",
            stats.n_negative, stats.n_nonfinite
        ));
        Ok(out)
    }

    fn sweep(&self, params: &ModelParams) -> Result<Outcome, CliError> {
        let block = self.config.sweep.as_ref().expect("checked by check_blocks");
        let grid = block.params_grid.expand(params.raw());
        let noise = block.noise_grid.expand()?;
        if grid.is_empty() || noise.is_empty() {
            return Err(CliError::Invalid("sweep: empty grid".into()));
        }
        let defaults = SweepSettings::default();
        let settings = SweepSettings {
            replicates: block.replicates,
            dt: block.dt,
            t_end: block.t_end,
            horizon_multiple: block.horizon_multiple.unwrap_or(defaults.horizon_multiple),
            displacement: block.displacement.unwrap_or(defaults.displacement),
            epsilon_fraction: block.epsilon_fraction.unwrap_or(defaults.epsilon_fraction),
            record_stride: block.record_stride.unwrap_or(defaults.record_stride),
            master_seed: self.seed,
        };
        if settings.replicates == 0 {
            return Err(CliError::Invalid("sweep: replicates must be at least 1".into()));
        }
        let rows = sweep(&grid, &noise, &settings);
        let mut out = Outcome::default();
        let path = match self.format {
            Format::Csv => write_with(&self.out_dir.join("sweep.csv"), |w| write_sweep_csv(&rows, w))?,
            Format::Json => write_json(&self.out_dir.join("sweep.json"), &rows)?,
        };
        out.files.push(path);
        let met = rows.iter().filter(|r| r.verdict == Some(true)).count();
        let failed = rows.iter().filter(|r| r.error.is_some()).count();
        out.stdout = format!(
            "{} cells ({} parameter sets x {} noise levels): {} with sufficient conditions met, {} with errors\n",
            rows.len(),
            grid.len(),
            noise.len(),
            met,
            failed
        );
        for r in rows.iter().filter(|r| r.error.is_some()) {
            out.warnings.push(format!(
                "cell r={} alpha={} delta={} sigma={} K={} omega=({}, {}): {}",
                r.params.r,
                r.params.alpha,
                r.params.delta,
                r.params.sigma,
                r.params.k,
                r.omega1,
                r.omega2,
                r.error.as_deref().unwrap_or("")
            ));
        }
        Ok(out)
    }
}

pub fn analysis_report(params: &ModelParams, noise: &NoiseSpec) -> AnalysisReport {
    let stability = classify_equilibria_stability(params, noise);
    let origin_lin = linearize(params, &origin());
    let pos = positive_equilibrium(params);
    let pos_lin = pos.exists.then(|| linearize(params, &pos));
    AnalysisReport::new(
        params.raw(),
        params.b(),
        noise,
        &stability,
        &origin_lin,
        pos_lin.as_ref(),
        &mixed_sign_equilibrium(params),
    )
}

fn anchor_verdict(params: &ModelParams, noise: &NoiseSpec, anchor: &Equilibrium) -> StabilityVerdict {
    let c = classify_equilibria_stability(params, noise);
    match (anchor.kind, c.positive) {
        (EquilibriumKind::Positive, Some(v)) => v,
        _ => c.origin,
    }
}

fn resolve_anchor(params: &ModelParams, choice: AnchorChoice) -> Result<Equilibrium, CliError> {
    match choice {
        AnchorChoice::Auto => Ok(default_anchor(params)),
        AnchorChoice::Origin => Ok(origin()),
        AnchorChoice::Positive => {
            let eq = positive_equilibrium(params);
            if eq.exists {
                Ok(eq)
            } else {
                Err(CliError::Invalid("anchor `positive` requested but R0 <= 1".into()))
            }
        }
    }
}

fn resolve_initial(
    params: &ModelParams,
    anchor: &Equilibrium,
    initial: Option<State>,
    displacement: Option<f64>,
    out: &mut Outcome,
) -> Result<State, CliError> {
    if initial.is_some() && displacement.is_some() {
        return Err(CliError::Invalid("give either `initial` or `displacement`, not both".into()));
    }
    let x0 = initial.unwrap_or_else(|| displaced_initial(params, anchor, displacement.unwrap_or(DEFAULT_DISPLACEMENT)));
    if !x0.is_finite() {
        return Err(CliError::Invalid("initial state must be finite".into()));
    }
    if !x0.in_omega(params.k()) {
        out.warnings.push(format!(
            "initial state ({}, {}) lies outside the biological region {{p, m >= 0, p + m <= K}}",
            fmt_f64(x0.p),
            fmt_f64(x0.m)
        ));
    }
    Ok(x0)
}

fn sim_failure(e: SimError) -> CliError {
    match e {
        SimError::InvalidConfig(m) => CliError::Invalid(m),
        other => CliError::Numerical(other.to_string()),
    }
}

/// Creates the directory and checks that a file can be written into it.
fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    let fail =
        |e: std::io::Error| CliError::Invalid(format!("output directory {} is not writable: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".ssrna-write-probe");
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)?;
    Ok(())
}

fn write_with<F>(path: &Path, f: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    let fail = |e: std::io::Error| CliError::Invalid(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(fs::File::create(path).map_err(fail)?);
    f(&mut w).map_err(fail)?;
    w.flush().map_err(fail)?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}
