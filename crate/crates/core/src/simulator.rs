//! Fixed-step integrators for the deterministic and the stochastically
//! perturbed model.
//!
//! The stochastic system is integrated in deviation coordinates
//! `x = (p - p*, m - m*)` around its anchor equilibrium, using the
//! centralized drift. The anchor is then an exact fixed point of the scheme
//! regardless of rounding in `(p*, m*)`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linearization::linearize;
use crate::model::{
    basic_reproduction_number, origin, positive_equilibrium, vector_field, Equilibrium, ModelParams, State,
};
use crate::rng::BrownianStreams;
use crate::stability::NoiseSpec;

/// Tolerance, relative to `K`, for leaving the triangle `Omega`.
pub const OMEGA_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("deterministic trajectory left Omega at t = {t} (violation {violation}); reduce dt")]
    LeftOmega { t: f64, violation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub initial: State,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub record_stride: usize,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, initial: State) -> Self {
        Self { dt, t_end, initial, seed: 0, record_stride: 1 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(SimError::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(SimError::InvalidConfig(format!("t_end must be >= dt, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(SimError::InvalidConfig("record_stride must be >= 1".into()));
        }
        if !self.initial.is_finite() {
            return Err(SimError::InvalidConfig("initial state must be finite".into()));
        }
        Ok(())
    }

    /// Number of fixed steps; the last sample lands at `steps * dt >= t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn is_recorded(&self, k: usize) -> bool {
        k.is_multiple_of(self.record_stride) || k == self.steps()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
    Euler,
    EulerMaruyama,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// First step time at which the state was outside `Omega` by more than
    /// `OMEGA_RTOL * K`.
    pub exited_omega: Option<f64>,
    /// First step time at which either population was negative.
    pub went_negative: Option<f64>,
    pub scheme: Scheme,
}

impl Trajectory {
    pub fn final_state(&self) -> State {
        *self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    /// `t,p,m` CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,p,m")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            writeln!(w, "{},{},{}", fmt_f64(*t), fmt_f64(s.p), fmt_f64(s.m))?;
        }
        Ok(())
    }
}

/// Formats with 17 significant digits (`d.dddddddddddddddde±x`).
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Step size satisfying `dt * rate <= 0.01` for the fastest linear rate at
/// either equilibrium: `|a11|`, `|a22|`, `delta + sigma`, and the growth rate
/// `r sqrt(alpha)` away from the origin.
pub fn default_dt(params: &ModelParams) -> f64 {
    let mut rate = params.delta() + params.sigma();
    rate = rate.max(params.r() * params.alpha().sqrt());
    let eq_plus = positive_equilibrium(params);
    for eq in [origin(), eq_plus] {
        if eq.state().is_finite() {
            let rep = linearize(params, &eq);
            rate = rate.max(rep.a11.abs()).max(rep.a22.abs());
        }
    }
    0.01 / rate
}

/// Drift of the system centralized at an equilibrium `(p*, m*)`:
///
/// ```text
/// dx1 = a11 x1 + a12 x2 - b r (x1 + x2) x2
/// dx2 = a21 x1 + a22 x2 - alpha b r (x1 + x2) x1
/// ```
#[derive(Debug, Clone, Copy)]
pub struct CentralizedDrift {
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
    br: f64,
    alpha_br: f64,
}

impl CentralizedDrift {
    pub fn new(params: &ModelParams, eq: &Equilibrium) -> Self {
        let rep = linearize(params, eq);
        let br = params.b() * params.r();
        Self { a11: rep.a11, a12: rep.a12, a21: rep.a21, a22: rep.a22, br, alpha_br: params.alpha() * br }
    }

    pub fn eval(&self, x: State) -> State {
        let s = x.p + x.m;
        State::new(
            self.a11 * x.p + self.a12 * x.m - self.br * s * x.m,
            self.a21 * x.p + self.a22 * x.m - self.alpha_br * s * x.p,
        )
    }
}

/// Drift of the deviation `x` from `eq`. Equals `vector_field(eq + x)` when
/// `eq` is an equilibrium.
pub fn centralized_rhs(params: &ModelParams, eq: &Equilibrium, x: State) -> State {
    CentralizedDrift::new(params, eq).eval(x)
}

fn rk4_step<F: Fn(State) -> State>(f: &F, s: State, dt: f64) -> State {
    let k1 = f(s);
    let k2 = f(s + k1 * (0.5 * dt));
    let k3 = f(s + k2 * (0.5 * dt));
    let k4 = f(s + k3 * dt);
    s + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0)
}

#[derive(Debug, Default, Clone, Copy)]
struct ExcursionTracker {
    exited_omega: Option<f64>,
    went_negative: Option<f64>,
}

impl ExcursionTracker {
    fn observe(&mut self, t: f64, s: State, k: f64) -> f64 {
        let v = s.omega_violation(k);
        if self.exited_omega.is_none() && v > OMEGA_RTOL * k {
            self.exited_omega = Some(t);
        }
        if self.went_negative.is_none() && (s.p < 0.0 || s.m < 0.0) {
            self.went_negative = Some(t);
        }
        v
    }
}

/// Classical fourth-order Runge–Kutta on the deterministic model.
///
/// A trajectory that starts inside `Omega` and leaves it by more than
/// `OMEGA_RTOL * K` is reported as [`SimError::LeftOmega`] (the step is too
/// large). Starting outside `Omega` is allowed and recorded as an exit at
/// `t = 0`.
pub fn integrate_ode(params: &ModelParams, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let k_cap = params.k();
    let f = |s: State| vector_field(params, s);
    let started_inside = cfg.initial.omega_violation(k_cap) <= OMEGA_RTOL * k_cap;

    let mut tracker = ExcursionTracker::default();
    let mut traj = Vec::new();
    let mut times = Vec::new();
    let mut s = cfg.initial;
    for k in 0..=cfg.steps() {
        let t = k as f64 * cfg.dt;
        if k > 0 {
            s = rk4_step(&f, s, cfg.dt);
            if !s.is_finite() {
                return Err(SimError::NonFinite { t });
            }
        }
        let violation = tracker.observe(t, s, k_cap);
        if started_inside && violation > OMEGA_RTOL * k_cap {
            return Err(SimError::LeftOmega { t, violation });
        }
        if cfg.is_recorded(k) {
            times.push(t);
            traj.push(s);
        }
    }
    Ok(Trajectory {
        times,
        states: traj,
        exited_omega: tracker.exited_omega,
        went_negative: tracker.went_negative,
        scheme: Scheme::Rk4,
    })
}

/// One Euler–Maruyama step with diagonal multiplicative noise:
/// `x + drift dt + omega_i x_i dW_i`.
#[inline]
pub fn euler_maruyama_step(x: State, drift: State, omega: [f64; 2], dt: f64, dw: [f64; 2]) -> State {
    State::new(x.p + drift.p * dt + omega[0] * x.p * dw[0], x.m + drift.m * dt + omega[1] * x.m * dw[1])
}

/// Generic Euler–Maruyama driver for `dx = f(x) dt + diag(omega) x dW`.
///
/// `increments` supplies `(dW1, dW2)` for each step; `observe(k, x)` sees
/// every state including `k = 0`. Returns the final state.
pub fn euler_maruyama<F, W, O>(
    drift: F,
    omega: [f64; 2],
    x0: State,
    dt: f64,
    steps: usize,
    mut increments: W,
    mut observe: O,
) -> Result<State, SimError>
where
    F: Fn(State) -> State,
    W: FnMut() -> [f64; 2],
    O: FnMut(usize, State),
{
    let mut x = x0;
    observe(0, x);
    for k in 1..=steps {
        let dw = increments();
        x = euler_maruyama_step(x, drift(x), omega, dt, dw);
        if !x.is_finite() {
            return Err(SimError::NonFinite { t: k as f64 * dt });
        }
        observe(k, x);
    }
    Ok(x)
}

/// Excursion summary of one stochastic path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    pub exited_omega: Option<f64>,
    pub went_negative: Option<f64>,
}

/// Runs one stochastic replicate, handing each deviation `x_k` to `observe`.
pub fn sde_path<O: FnMut(usize, State)>(
    params: &ModelParams,
    noise: &NoiseSpec,
    anchor: &Equilibrium,
    cfg: &SimConfig,
    replicate: u64,
    mut observe: O,
) -> Result<PathSummary, SimError> {
    cfg.validate()?;
    if !anchor.state().is_finite() {
        return Err(SimError::InvalidConfig("anchor equilibrium has non-finite coordinates".into()));
    }
    let drift = CentralizedDrift::new(params, anchor);
    let a = anchor.state();
    let mut streams = BrownianStreams::new(cfg.seed, replicate);
    let mut tracker = ExcursionTracker::default();
    let dt = cfg.dt;
    euler_maruyama(
        |x| drift.eval(x),
        [noise.omega1(), noise.omega2()],
        cfg.initial - a,
        dt,
        cfg.steps(),
        || streams.next_increments(dt),
        |k, x| {
            tracker.observe(k as f64 * dt, a + x, params.k());
            observe(k, x);
        },
    )?;
    Ok(PathSummary { exited_omega: tracker.exited_omega, went_negative: tracker.went_negative })
}

/// Euler–Maruyama (Itô) integration of the perturbed model
///
/// ```text
/// dp = f_p dt + omega1 (p - p*) dW1
/// dm = f_m dt + omega2 (m - m*) dW2
/// ```
///
/// with Brownian increments from stream `cfg.seed`, replicate 0. Paths are
/// not clamped to `Omega`; exits and negative values are recorded.
pub fn integrate_sde(
    params: &ModelParams,
    noise: &NoiseSpec,
    anchor: &Equilibrium,
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    let a = anchor.state();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let summary = sde_path(params, noise, anchor, cfg, 0, |k, x| {
        if cfg.is_recorded(k) {
            times.push(k as f64 * cfg.dt);
            states.push(a + x);
        }
    })?;
    Ok(Trajectory {
        times,
        states,
        exited_omega: summary.exited_omega,
        went_negative: summary.went_negative,
        scheme: Scheme::EulerMaruyama,
    })
}

/// Explicit Euler on the deterministic model, written in deviation
/// coordinates around `anchor` (the drift-only counterpart of
/// [`integrate_sde`]).
pub fn integrate_euler(params: &ModelParams, anchor: &Equilibrium, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let drift = CentralizedDrift::new(params, anchor);
    let a = anchor.state();
    let mut tracker = ExcursionTracker::default();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut x = cfg.initial - a;
    for k in 0..=cfg.steps() {
        let t = k as f64 * cfg.dt;
        if k > 0 {
            let f = drift.eval(x);
            x = State::new(x.p + f.p * cfg.dt, x.m + f.m * cfg.dt);
            if !x.is_finite() {
                return Err(SimError::NonFinite { t });
            }
        }
        tracker.observe(t, a + x, params.k());
        if cfg.is_recorded(k) {
            times.push(t);
            states.push(a + x);
        }
    }
    Ok(Trajectory {
        times,
        states,
        exited_omega: tracker.exited_omega,
        went_negative: tracker.went_negative,
        scheme: Scheme::Euler,
    })
}

/// Horizon over which the linearization at the relevant equilibrium decays by
/// `exp(-multiple / 2)` along its trace: `multiple / |Tr(A)|`.
pub fn trace_horizon(params: &ModelParams, multiple: f64) -> f64 {
    let eq = if basic_reproduction_number(params) > 1.0 { positive_equilibrium(params) } else { origin() };
    multiple / linearize(params, &eq).trace.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::positive_equilibrium;

    fn unit() -> ModelParams {
        ModelParams::new(2.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 1.0, State::ZERO).validate().is_err());
        assert!(SimConfig::new(0.1, 0.05, State::ZERO).validate().is_err());
        assert!(SimConfig::new(0.1, 1.0, State::ZERO).with_stride(0).validate().is_err());
        assert!(SimConfig::new(0.1, 1.0, State::new(f64::NAN, 0.0)).validate().is_err());
        let c = SimConfig::new(0.1, 1.0, State::ZERO);
        assert_eq!(c.steps(), 10);
        assert_eq!(SimConfig::new(0.3, 1.0, State::ZERO).steps(), 4);
    }

    #[test]
    fn origin_is_constant() {
        let p = ModelParams::tumv();
        let t = integrate_ode(&p, &SimConfig::new(1.0, 50.0, State::ZERO)).unwrap();
        assert!(t.states.iter().all(|s| *s == State::ZERO));
        assert_eq!(t.times.len(), 51);
    }

    #[test]
    fn stride_records_endpoints() {
        let p = unit();
        let t = integrate_ode(&p, &SimConfig::new(0.1, 1.05, State::new(0.1, 0.1)).with_stride(4)).unwrap();
        let expected: Vec<f64> = [0, 4, 8, 11].iter().map(|&k| k as f64 * 0.1).collect();
        assert_eq!(t.times, expected);
    }

    #[test]
    fn times_strictly_increasing() {
        let p = unit();
        let t = integrate_ode(&p, &SimConfig::new(0.01, 3.0, State::new(0.3, 0.1)).with_stride(7)).unwrap();
        assert!(t.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(t.times.len(), t.states.len());
    }

    #[test]
    fn outside_start_is_recorded_not_fatal() {
        let p = unit();
        let t = integrate_ode(&p, &SimConfig::new(0.01, 1.0, State::new(1.5, 0.2))).unwrap();
        assert_eq!(t.exited_omega, Some(0.0));
    }

    #[test]
    fn huge_step_is_an_error() {
        let p = ModelParams::new(50.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let err = integrate_ode(&p, &SimConfig::new(5.0, 500.0, State::new(0.9, 0.05))).unwrap_err();
        assert!(matches!(err, SimError::LeftOmega { .. } | SimError::NonFinite { .. }), "{err:?}");
    }

    #[test]
    fn centralized_matches_vector_field() {
        let p = ModelParams::tumv();
        let eq = positive_equilibrium(&p);
        assert_eq!(centralized_rhs(&p, &eq, State::ZERO), State::ZERO);
        for x in [State::new(1e5, -3e4), State::new(-2e6, 7e6), State::new(3e6, 1e6)] {
            let a = centralized_rhs(&p, &eq, x);
            let b = vector_field(&p, eq.state() + x);
            let scale = b.norm().max(p.k() * 1e-6);
            assert!((a - b).norm() <= 1e-9 * scale, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn centralized_taylor_remainder() {
        let p = unit();
        let eq = positive_equilibrium(&p);
        let rep = linearize(&p, &eq);
        let dir = State::new(0.6, -0.8);
        let mut ratios = Vec::new();
        for h in [1e-1, 1e-2, 1e-3] {
            let x = dir * h;
            let lin = State::new(rep.a11 * x.p + rep.a12 * x.m, rep.a21 * x.p + rep.a22 * x.m);
            ratios.push((centralized_rhs(&p, &eq, x) - lin).norm() / (h * h));
        }
        // Quadratic remainder: ratio is constant.
        assert!((ratios[0] - ratios[2]).abs() <= 1e-6 * ratios[0].max(1.0));
    }

    #[test]
    fn sde_anchor_is_fixed_point() {
        let p = ModelParams::tumv();
        let eq = positive_equilibrium(&p);
        let noise = NoiseSpec::new(0.5, 0.5).unwrap();
        let t = integrate_sde(&p, &noise, &eq, &SimConfig::new(0.5, 200.0, eq.state()).with_seed(3)).unwrap();
        assert!(t.states.iter().all(|s| *s == eq.state()));
    }

    #[test]
    fn zero_noise_matches_euler() {
        let p = ModelParams::tumv();
        let eq = positive_equilibrium(&p);
        let cfg = SimConfig::new(0.5, 300.0, eq.state() * 1.05).with_seed(11);
        let sde = integrate_sde(&p, &NoiseSpec::zero(), &eq, &cfg).unwrap();
        let euler = integrate_euler(&p, &eq, &cfg).unwrap();
        assert_eq!(sde.states, euler.states);
        assert_eq!(sde.times, euler.times);
    }

    #[test]
    fn euler_matches_plain_euler() {
        // Deviation-coordinate Euler versus Euler written directly on the
        // vector field.
        let p = ModelParams::tumv();
        let eq = positive_equilibrium(&p);
        let cfg = SimConfig::new(0.5, 300.0, State::new(1e6, 2e5));
        let t = integrate_euler(&p, &eq, &cfg).unwrap();
        let mut s = cfg.initial;
        for _ in 0..cfg.steps() {
            let f = vector_field(&p, s);
            s = State::new(s.p + f.p * cfg.dt, s.m + f.m * cfg.dt);
        }
        assert!((t.final_state() - s).norm() <= 1e-6 * p.k(), "{:?} vs {s:?}", t.final_state());
    }

    #[test]
    fn sde_reproducible() {
        let p = ModelParams::tumv();
        let eq = positive_equilibrium(&p);
        let noise = NoiseSpec::new(0.1, 0.1).unwrap();
        let cfg = SimConfig::new(0.5, 100.0, eq.state() * 1.01).with_seed(42);
        let a = integrate_sde(&p, &noise, &eq, &cfg).unwrap();
        let b = integrate_sde(&p, &noise, &eq, &cfg).unwrap();
        assert_eq!(a, b);
        let c = integrate_sde(&p, &noise, &eq, &cfg.with_seed(43)).unwrap();
        assert_ne!(a.final_state(), c.final_state());
    }

    #[test]
    fn sde_blowup_is_reported() {
        let p = unit();
        let eq = positive_equilibrium(&p);
        let noise = NoiseSpec::new(1e3, 1e3).unwrap();
        let err = integrate_sde(&p, &noise, &eq, &SimConfig::new(0.5, 1e4, eq.state() * 2.0).with_seed(1)).unwrap_err();
        assert!(matches!(err, SimError::NonFinite { .. }));
    }

    #[test]
    fn csv_format() {
        let t = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![State::new(1.0, 2.0), State::new(30670385.30533919, -0.1)],
            exited_omega: None,
            went_negative: None,
            scheme: Scheme::Rk4,
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,p,m");
        assert_eq!(lines[1], "0.0000000000000000e0,1.0000000000000000e0,2.0000000000000000e0");
        let back: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(back, vec![0.5, 30670385.30533919, -0.1]);
    }

    #[test]
    fn default_dt_bound() {
        let p = ModelParams::tumv();
        let dt = default_dt(&p);
        let rep = linearize(&p, &positive_equilibrium(&p));
        assert!(dt * rep.a11.abs().max(rep.a22.abs()).max(p.delta() + p.sigma()) <= 0.01 + 1e-15);
    }
}
