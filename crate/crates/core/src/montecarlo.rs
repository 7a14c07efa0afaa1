//! Monte Carlo estimators for mean-square stability and stability in
//! probability.
//!
//! Both notions are asymptotic; here they are estimated over the finite
//! horizon of the simulation:
//!
//! * `mean_sq_dev(t)` is the sample mean of `|x_k(t)|^2` over replicates,
//!   where `x = state - anchor`;
//! * `exceed_fraction` is the fraction of replicates whose deviation norm
//!   exceeded `epsilon1` at any step of the horizon.
//!
//! Replicates run in parallel on the ambient rayon pool. Each one draws its
//! Brownian increments from its own `(master_seed, replicate)` stream and the
//! reduction runs in replicate order, so results are bitwise independent of
//! the thread count.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{origin, positive_equilibrium, Equilibrium, EquilibriumKind, ModelParams, RawParams, State};
use crate::simulator::{default_dt, fmt_f64, sde_path, trace_horizon, SimConfig, SimError};
use crate::stability::{classify_equilibria_stability, NoiseSpec};

/// Two-sided 95% normal quantile used by the Wilson interval.
pub const WILSON_Z: f64 = 1.96;

/// Fewest replicates for which an interval estimate is reported.
pub const MIN_REPLICATES_FOR_INTERVAL: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("all {replicates} replicates became non-finite")]
    AllAborted { replicates: usize },
    #[error("interval estimate needs at least {MIN_REPLICATES_FOR_INTERVAL} finite replicates, got {0}")]
    TooFewReplicates(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub replicates: usize,
    /// Step, horizon, initial state and recording stride. Its `seed` is
    /// ignored in favour of `master_seed`.
    pub sim: SimConfig,
    pub noise: NoiseSpec,
    pub anchor: Equilibrium,
    pub epsilon1: f64,
    pub master_seed: u64,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        if self.replicates == 0 {
            return Err(EnsembleError::InvalidConfig("replicates must be >= 1".into()));
        }
        if !(self.epsilon1.is_finite() && self.epsilon1 > 0.0) {
            return Err(EnsembleError::InvalidConfig(format!("epsilon1 must be > 0, got {}", self.epsilon1)));
        }
        self.sim.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    /// Sample mean of `|state - anchor|^2` at each recorded time.
    pub mean_sq_dev: Vec<f64>,
    /// Fraction of replicates whose deviation exceeded `epsilon1` at or
    /// before each recorded time.
    pub exceed_fraction_cum: Vec<f64>,
    /// Fraction exceeding `epsilon1` anywhere on the horizon.
    pub exceed_fraction: f64,
    pub epsilon1: f64,
    pub replicates: usize,
    /// Replicates that contributed to the statistics.
    pub n_finite: usize,
    pub n_exceeded: usize,
    pub n_negative: usize,
    pub n_nonfinite: usize,
}

impl EnsembleStats {
    pub fn initial_msd(&self) -> f64 {
        self.mean_sq_dev[0]
    }

    pub fn final_msd(&self) -> f64 {
        *self.mean_sq_dev.last().expect("at least one sample")
    }

    /// `t,mean_sq_dev,exceed_fraction_cum` CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,mean_sq_dev,exceed_fraction_cum")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(self.times[i]),
                fmt_f64(self.mean_sq_dev[i]),
                fmt_f64(self.exceed_fraction_cum[i])
            )?;
        }
        Ok(())
    }
}

struct ReplicateOutcome {
    sq_dev: Vec<f64>,
    first_exceed_step: Option<usize>,
    negative: bool,
    nonfinite: bool,
}

fn run_replicate(params: &ModelParams, cfg: &EnsembleConfig, replicate: u64) -> ReplicateOutcome {
    let sim = SimConfig { seed: cfg.master_seed, ..cfg.sim };
    let eps_sq = cfg.epsilon1 * cfg.epsilon1;
    let mut sq_dev = Vec::new();
    let mut first_exceed_step = None;
    let result = sde_path(params, &cfg.noise, &cfg.anchor, &sim, replicate, |k, x: State| {
        let d = x.norm_sq();
        if first_exceed_step.is_none() && d > eps_sq {
            first_exceed_step = Some(k);
        }
        if sim.is_recorded(k) {
            sq_dev.push(d);
        }
    });
    match result {
        Ok(summary) => {
            ReplicateOutcome { sq_dev, first_exceed_step, negative: summary.went_negative.is_some(), nonfinite: false }
        }
        Err(_) => ReplicateOutcome { sq_dev, first_exceed_step, negative: false, nonfinite: true },
    }
}

/// Simulates `cfg.replicates` independent stochastic paths and reduces them.
///
/// Replicates that become non-finite are excluded and counted in
/// `n_nonfinite`; if none survives the run is an error.
pub fn run_ensemble(cfg: &EnsembleConfig, params: &ModelParams) -> Result<EnsembleStats, EnsembleError> {
    cfg.validate()?;
    if !cfg.anchor.state().is_finite() {
        return Err(EnsembleError::InvalidConfig("anchor equilibrium has non-finite coordinates".into()));
    }
    let outcomes: Vec<ReplicateOutcome> =
        (0..cfg.replicates as u64).into_par_iter().map(|k| run_replicate(params, cfg, k)).collect();

    let sim = &cfg.sim;
    let steps = sim.steps();
    let recorded: Vec<usize> = (0..=steps).filter(|&k| sim.is_recorded(k)).collect();
    let times: Vec<f64> = recorded.iter().map(|&k| k as f64 * sim.dt).collect();

    let mut sum = vec![0.0; recorded.len()];
    let mut exceed_counts = vec![0usize; recorded.len()];
    let (mut n_finite, mut n_exceeded, mut n_negative, mut n_nonfinite) = (0, 0, 0, 0);
    for o in &outcomes {
        if o.nonfinite {
            n_nonfinite += 1;
            continue;
        }
        n_finite += 1;
        if o.negative {
            n_negative += 1;
        }
        for (acc, d) in sum.iter_mut().zip(&o.sq_dev) {
            *acc += d;
        }
        if let Some(first) = o.first_exceed_step {
            n_exceeded += 1;
            for (count, &k) in exceed_counts.iter_mut().zip(&recorded) {
                if first <= k {
                    *count += 1;
                }
            }
        }
    }
    if n_finite == 0 {
        return Err(EnsembleError::AllAborted { replicates: cfg.replicates });
    }
    let n = n_finite as f64;
    Ok(EnsembleStats {
        times,
        mean_sq_dev: sum.into_iter().map(|s| s / n).collect(),
        exceed_fraction_cum: exceed_counts.into_iter().map(|c| c as f64 / n).collect(),
        exceed_fraction: n_exceeded as f64 / n,
        epsilon1: cfg.epsilon1,
        replicates: cfg.replicates,
        n_finite,
        n_exceeded,
        n_negative,
        n_nonfinite,
    })
}

/// Binomial estimate of `P{sup |x| > epsilon1}` with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceEstimate {
    pub exceed_fraction: f64,
    pub lower: f64,
    pub upper: f64,
    pub exceedances: usize,
    pub trials: usize,
}

pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Point estimate and 95% Wilson interval for the exceedance probability.
pub fn estimate_stability_in_probability(stats: &EnsembleStats) -> Result<ExceedanceEstimate, EnsembleError> {
    if stats.n_finite < MIN_REPLICATES_FOR_INTERVAL {
        return Err(EnsembleError::TooFewReplicates(stats.n_finite));
    }
    let (lower, upper) = wilson_interval(stats.n_exceeded, stats.n_finite, WILSON_Z);
    Ok(ExceedanceEstimate {
        exceed_fraction: stats.exceed_fraction,
        lower,
        upper,
        exceedances: stats.n_exceeded,
        trials: stats.n_finite,
    })
}

/// Settings shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub replicates: usize,
    /// Defaults to [`default_dt`] of each cell.
    pub dt: Option<f64>,
    /// Defaults to `horizon_multiple / |Tr(A)|` of each cell.
    pub t_end: Option<f64>,
    pub horizon_multiple: f64,
    /// Relative initial displacement from the anchor (see [`displaced_initial`]).
    pub displacement: f64,
    /// `epsilon1` as a fraction of the anchor's scale (see [`anchor_scale`]).
    pub epsilon_fraction: f64,
    pub record_stride: usize,
    pub master_seed: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            replicates: 200,
            dt: None,
            t_end: None,
            horizon_multiple: 50.0,
            displacement: 0.01,
            epsilon_fraction: 0.1,
            record_stride: 1,
            master_seed: 0,
        }
    }
}

/// Equilibrium around which noise acts: `E+` when it exists, else `E0`.
pub fn default_anchor(params: &ModelParams) -> Equilibrium {
    let eq = positive_equilibrium(params);
    if eq.exists {
        eq
    } else {
        origin()
    }
}

/// Natural length scale of deviations around `anchor`: `|E+|`, or `K` at
/// the origin.
pub fn anchor_scale(params: &ModelParams, anchor: &Equilibrium) -> f64 {
    match anchor.kind {
        EquilibriumKind::Origin => params.k(),
        _ => anchor.state().norm(),
    }
}

/// `anchor * (1 + fraction)` for `E+`; `(fraction K / sqrt 2) * (1, 1)` at
/// the origin. Either way `|x0| = fraction * anchor_scale`.
pub fn displaced_initial(params: &ModelParams, anchor: &Equilibrium, fraction: f64) -> State {
    match anchor.kind {
        EquilibriumKind::Origin => {
            let c = fraction * params.k() / std::f64::consts::SQRT_2;
            State::new(c, c)
        }
        _ => anchor.state() * (1.0 + fraction),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub params: RawParams,
    pub noise: NoiseSpec,
}

/// One sweep cell: analytic verdict next to empirical summaries. Fields are
/// `None` when the cell failed before producing them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: RawParams,
    pub omega1: f64,
    pub omega2: f64,
    pub r0: Option<f64>,
    pub verdict: Option<bool>,
    pub exceed_fraction: Option<f64>,
    pub final_msd: Option<f64>,
    pub n_negative: Option<usize>,
    pub n_nonfinite: Option<usize>,
    pub error: Option<String>,
}

pub const SWEEP_CSV_HEADER: &str =
    "r,alpha,delta,sigma,K,omega1,omega2,R0,verdict,exceed_fraction,final_msd,n_negative,n_nonfinite";

fn opt_f64(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), fmt_f64)
}

fn opt_usize(v: Option<usize>) -> String {
    v.map_or_else(String::new, |n| n.to_string())
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let p = &self.params;
        let verdict = match (self.verdict, &self.error) {
            (Some(v), _) => v.to_string(),
            (None, _) => "error".to_string(),
        };
        [
            fmt_f64(p.r),
            fmt_f64(p.alpha),
            fmt_f64(p.delta),
            fmt_f64(p.sigma),
            fmt_f64(p.k),
            fmt_f64(self.omega1),
            fmt_f64(self.omega2),
            opt_f64(self.r0),
            verdict,
            opt_f64(self.exceed_fraction),
            opt_f64(self.final_msd),
            opt_usize(self.n_negative),
            opt_usize(self.n_nonfinite),
        ]
        .join(",")
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", row.csv_line())?;
    }
    Ok(())
}

fn run_cell(cell: &SweepCell, settings: &SweepSettings) -> SweepRow {
    let mut row = SweepRow {
        params: cell.params,
        omega1: cell.noise.omega1(),
        omega2: cell.noise.omega2(),
        r0: None,
        verdict: None,
        exceed_fraction: None,
        final_msd: None,
        n_negative: None,
        n_nonfinite: None,
        error: None,
    };
    let params = match ModelParams::try_from(cell.params) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let analysis = classify_equilibria_stability(&params, &cell.noise);
    row.r0 = Some(analysis.r0);
    let anchor = default_anchor(&params);
    let verdict = analysis.positive.as_ref().unwrap_or(&analysis.origin);
    row.verdict = Some(verdict.conditions_met);

    let dt = settings.dt.unwrap_or_else(|| default_dt(&params));
    let t_end = settings.t_end.unwrap_or_else(|| trace_horizon(&params, settings.horizon_multiple));
    let cfg = EnsembleConfig {
        replicates: settings.replicates,
        sim: SimConfig::new(dt, t_end, displaced_initial(&params, &anchor, settings.displacement))
            .with_stride(settings.record_stride),
        noise: cell.noise,
        anchor,
        epsilon1: settings.epsilon_fraction * anchor_scale(&params, &anchor),
        master_seed: settings.master_seed,
    };
    match run_ensemble(&cfg, &params) {
        Ok(stats) => {
            row.exceed_fraction = Some(stats.exceed_fraction);
            row.final_msd = Some(stats.final_msd());
            row.n_negative = Some(stats.n_negative);
            row.n_nonfinite = Some(stats.n_nonfinite);
        }
        Err(e) => {
            if let EnsembleError::AllAborted { replicates } = e {
                row.n_nonfinite = Some(replicates);
                row.n_negative = Some(0);
            }
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Cartesian product of `params_grid x noise_grid` (params-major), one row
/// per cell. All cells share `master_seed`, hence the same Brownian paths.
pub fn sweep(params_grid: &[RawParams], noise_grid: &[NoiseSpec], settings: &SweepSettings) -> Vec<SweepRow> {
    params_grid
        .iter()
        .flat_map(|&params| noise_grid.iter().map(move |&noise| SweepCell { params, noise }))
        .map(|cell| run_cell(&cell, settings))
        .collect()
}
