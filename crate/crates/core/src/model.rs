//! Deterministic replication model
//!
//! ```text
//! dp/dt = r m (1 - (p+m)/K) - delta p
//! dm/dt = alpha r p (1 - (p+m)/K) - sigma m
//! ```
//!
//! `p` is the genomic strand, `m` the antigenomic strand. All quantities are
//! plain `f64` in whatever consistent units the caller uses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used to detect the degenerate points `R0 = 1`
/// (saddle-node, `E+` merges with the origin) and `R0 = r/delta` (the
/// mixed-sign equilibrium escapes to infinity).
pub const DEGENERACY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{field} must be a finite number, got {value}")]
    NotFinite { field: &'static str, value: f64 },
    #[error("{field} must be > 0, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
}

impl ParamError {
    pub fn field(&self) -> &'static str {
        match self {
            ParamError::NotFinite { field, .. } | ParamError::NotPositive { field, .. } => field,
            ParamError::AlphaOutOfRange(_) => "alpha",
        }
    }
}

/// Raw, unvalidated parameter record as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub r: f64,
    pub alpha: f64,
    pub delta: f64,
    pub sigma: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

/// Validated model constants. `b = 1/K` is derived and cannot be set directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    r: f64,
    alpha: f64,
    delta: f64,
    sigma: f64,
    k: f64,
    b: f64,
}

impl ModelParams {
    pub fn new(r: f64, alpha: f64, delta: f64, sigma: f64, k: f64) -> Result<Self, ParamError> {
        fn positive(field: &'static str, value: f64) -> Result<(), ParamError> {
            if !value.is_finite() {
                Err(ParamError::NotFinite { field, value })
            } else if value <= 0.0 {
                Err(ParamError::NotPositive { field, value })
            } else {
                Ok(())
            }
        }
        positive("r", r)?;
        if !alpha.is_finite() {
            return Err(ParamError::NotFinite { field: "alpha", value: alpha });
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ParamError::AlphaOutOfRange(alpha));
        }
        positive("delta", delta)?;
        positive("sigma", sigma)?;
        positive("K", k)?;
        Ok(Self { r, alpha, delta, sigma, k, b: 1.0 / k })
    }

    /// Turnip mosaic virus parameter set.
    pub fn tumv() -> Self {
        Self::new(0.1211, 0.0743, 0.0049, 0.0121, 4.694e7).expect("TuMV parameters are valid")
    }

    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    /// Carrying capacity.
    pub fn k(&self) -> f64 {
        self.k
    }
    /// `1/K`.
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn raw(&self) -> RawParams {
        RawParams { r: self.r, alpha: self.alpha, delta: self.delta, sigma: self.sigma, k: self.k }
    }
}

impl TryFrom<RawParams> for ModelParams {
    type Error = ParamError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        ModelParams::new(raw.r, raw.alpha, raw.delta, raw.sigma, raw.k)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        p.raw()
    }
}

/// Validates a raw parameter record.
pub fn validate_params(raw: RawParams) -> Result<ModelParams, ParamError> {
    ModelParams::try_from(raw)
}

/// Point in the `(p, m)` plane. Also used for derivatives and deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub p: f64,
    pub m: f64,
}

impl State {
    pub const ZERO: State = State { p: 0.0, m: 0.0 };

    pub const fn new(p: f64, m: f64) -> Self {
        Self { p, m }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.m.is_finite()
    }

    pub fn norm_sq(&self) -> f64 {
        self.p * self.p + self.m * self.m
    }

    pub fn norm(&self) -> f64 {
        self.p.hypot(self.m)
    }

    /// Distance outside the triangle `{p, m >= 0, p + m <= K}`; zero inside.
    pub fn omega_violation(&self, k: f64) -> f64 {
        (-self.p).max(-self.m).max(self.p + self.m - k).max(0.0)
    }

    pub fn in_omega(&self, k: f64) -> bool {
        self.omega_violation(k) == 0.0
    }
}

impl std::ops::Add for State {
    type Output = State;
    fn add(self, o: State) -> State {
        State::new(self.p + o.p, self.m + o.m)
    }
}

impl std::ops::Sub for State {
    type Output = State;
    fn sub(self, o: State) -> State {
        State::new(self.p - o.p, self.m - o.m)
    }
}

impl std::ops::Mul<f64> for State {
    type Output = State;
    fn mul(self, s: f64) -> State {
        State::new(self.p * s, self.m * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Origin,
    Positive,
    MixedSign,
}

/// Fixed point of the deterministic model.
///
/// Non-admissible points keep their formal coordinates with `exists = false`.
/// At the mixed-sign singularity both coordinates are infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub p_star: f64,
    pub m_star: f64,
    pub exists: bool,
}

impl Equilibrium {
    pub fn state(&self) -> State {
        State::new(self.p_star, self.m_star)
    }
}

/// `E0 = (0, 0)`, always an equilibrium.
pub fn origin() -> Equilibrium {
    Equilibrium { kind: EquilibriumKind::Origin, p_star: 0.0, m_star: 0.0, exists: true }
}

/// `R0 = r sqrt(alpha / (delta sigma))`.
pub fn basic_reproduction_number(params: &ModelParams) -> f64 {
    params.r * (params.alpha / (params.delta * params.sigma)).sqrt()
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERACY_RTOL * a.abs().max(b.abs())
}

/// Coexistence equilibrium `E+`. Admissible iff `R0 > 1`; at `R0 = 1` it
/// merges with the origin.
pub fn positive_equilibrium(params: &ModelParams) -> Equilibrium {
    let r0 = basic_reproduction_number(params);
    let kind = EquilibriumKind::Positive;
    if near(r0, 1.0) {
        return Equilibrium { kind, p_star: 0.0, m_star: 0.0, exists: false };
    }
    let ratio = params.delta / params.r;
    let denom = params.b * (1.0 + ratio * r0);
    Equilibrium { kind, p_star: (1.0 - 1.0 / r0) / denom, m_star: ratio * (r0 - 1.0) / denom, exists: r0 > 1.0 }
}

/// Equilibrium with coordinates of opposite signs. Never biologically
/// relevant; reported for the global phase portrait.
pub fn mixed_sign_equilibrium(params: &ModelParams) -> Equilibrium {
    let r0 = basic_reproduction_number(params);
    let kind = EquilibriumKind::MixedSign;
    let ratio = params.delta / params.r;
    if near(r0, params.r / params.delta) {
        return Equilibrium { kind, p_star: f64::INFINITY, m_star: f64::INFINITY, exists: false };
    }
    let denom = params.b * (1.0 - ratio * r0);
    Equilibrium { kind, p_star: (1.0 + 1.0 / r0) / denom, m_star: -ratio * (r0 + 1.0) / denom, exists: true }
}

/// Right-hand side of the deterministic model.
pub fn vector_field(params: &ModelParams, s: State) -> State {
    let free = 1.0 - (s.p + s.m) / params.k;
    State::new(params.r * s.m * free - params.delta * s.p, params.alpha * params.r * s.p * free - params.sigma * s.m)
}

/// `d(dp/dt)/dp + d(dm/dt)/dm`; negative on the closed positive quadrant.
pub fn divergence(params: &ModelParams, s: State) -> f64 {
    -(params.r / params.k) * (s.m + params.alpha * s.p) - params.delta - params.sigma
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelParams {
        ModelParams::new(2.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn tumv_validates() {
        let p = ModelParams::tumv();
        assert!((p.b() - 2.1304e-8).abs() < 1e-12);
        assert_eq!(p.b() * p.k(), 1.0);
    }

    #[test]
    fn rejects_bad_fields() {
        assert_eq!(ModelParams::new(1.0, 0.0, 1.0, 1.0, 1.0), Err(ParamError::AlphaOutOfRange(0.0)));
        assert!(matches!(ModelParams::new(1.0, 1.5, 1.0, 1.0, 1.0), Err(ParamError::AlphaOutOfRange(_))));
        assert_eq!(ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap_err().field(), "K");
        assert_eq!(ModelParams::new(-1.0, 1.0, 1.0, 1.0, 1.0).unwrap_err().field(), "r");
        assert_eq!(ModelParams::new(1.0, 1.0, f64::NAN, 1.0, 1.0).unwrap_err().field(), "delta");
        assert_eq!(ModelParams::new(1.0, 1.0, 1.0, 0.0, 1.0).unwrap_err().field(), "sigma");
        let p = ModelParams::new(2.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.b(), 1.0);
    }

    #[test]
    fn serde_validates() {
        let ok: ModelParams = serde_json::from_str(r#"{"r":2.0,"alpha":1.0,"delta":1.0,"sigma":1.0,"K":1.0}"#).unwrap();
        assert_eq!(ok, unit());
        let bad = serde_json::from_str::<ModelParams>(r#"{"r":2.0,"alpha":0.0,"delta":1.0,"sigma":1.0,"K":1.0}"#);
        assert!(bad.unwrap_err().to_string().contains("alpha"));
    }

    #[test]
    fn reproduction_number() {
        assert!((basic_reproduction_number(&ModelParams::tumv()) - 4.287).abs() < 1e-3);
        assert_eq!(basic_reproduction_number(&unit()), 2.0);
        let p = ModelParams::new(3.0, 0.25, 0.5, 0.5, 1.0).unwrap();
        assert!((basic_reproduction_number(&p) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn positive_equilibrium_values() {
        let e = positive_equilibrium(&ModelParams::tumv());
        assert!(e.exists);
        assert!((e.p_star - 30670385.0).abs() <= 1.0);
        assert!((e.m_star - 5320090.0).abs() <= 1.0);

        let e = positive_equilibrium(&unit());
        assert!((e.p_star - 0.25).abs() < 1e-15 && (e.m_star - 0.25).abs() < 1e-15);
        assert!(e.exists);
    }

    #[test]
    fn positive_equilibrium_merges_at_threshold() {
        for r in [0.3, 1.0, 7.0] {
            let p = ModelParams::new(r, 1.0, r, r, 10.0).unwrap();
            let e = positive_equilibrium(&p);
            assert!(!e.exists);
            assert_eq!((e.p_star, e.m_star), (0.0, 0.0));
        }
    }

    #[test]
    fn positive_equilibrium_negative_below_threshold() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 4.0, 1.0).unwrap();
        let e = positive_equilibrium(&p);
        assert!(!e.exists);
        assert!(e.p_star < 0.0 && e.m_star < 0.0);
    }

    #[test]
    fn mixed_sign_cases() {
        let e = mixed_sign_equilibrium(&unit());
        assert!(!e.exists);

        let p = ModelParams::new(2.0, 1.0, 1.0, 4.0, 1.0).unwrap();
        let e = mixed_sign_equilibrium(&p);
        assert!(e.exists && e.p_star > 0.0 && e.m_star < 0.0);

        let singular = ModelParams::new(1.0, 1.0, 0.25, 0.25, 1.0).unwrap();
        assert!(!mixed_sign_equilibrium(&singular).exists);
        let p = ModelParams::new(1.0, 1.0, 0.25, 0.16, 1.0).unwrap();
        let e = mixed_sign_equilibrium(&p);
        assert!(e.exists && e.p_star < 0.0 && e.m_star > 0.0);
    }

    #[test]
    fn mixed_sign_is_fixed_point() {
        let p = ModelParams::new(2.0, 1.0, 1.0, 4.0, 1.0).unwrap();
        let e = mixed_sign_equilibrium(&p);
        let f = vector_field(&p, e.state());
        assert!(f.norm() < 1e-12, "{f:?}");
    }

    #[test]
    fn vector_field_examples() {
        assert_eq!(vector_field(&unit(), State::ZERO), State::ZERO);
        assert_eq!(vector_field(&unit(), State::new(0.5, 0.0)), State::new(-0.5, 0.5));
        let p = ModelParams::tumv();
        let f = vector_field(&p, positive_equilibrium(&p).state());
        assert!(f.norm() < 1e-8 * p.k());
    }

    #[test]
    fn divergence_examples() {
        assert_eq!(divergence(&unit(), State::ZERO), -2.0);
        assert!((divergence(&ModelParams::tumv(), State::ZERO) + 0.0170).abs() < 1e-12);
        assert_eq!(divergence(&unit(), State::new(1.0, 1.0)), -6.0);
    }

    #[test]
    fn omega_membership() {
        assert!(State::new(0.2, 0.3).in_omega(1.0));
        assert!(!State::new(-0.1, 0.3).in_omega(1.0));
        assert!((State::new(0.7, 0.5).omega_violation(1.0) - 0.2).abs() < 1e-15);
    }
}
