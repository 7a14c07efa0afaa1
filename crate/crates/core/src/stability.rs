//! Sufficient conditions for asymptotic mean-square stability of the linear
//! part of the centralized system
//!
//! ```text
//! dy = A y dt + diag(omega1 y1, omega2 y2) dW
//! ```
//!
//! and therefore for stability in probability of the nonlinear system (whose
//! nonlinearity is of order two). The certificate is the quadratic form
//! `v(y) = y' P y` with `P A + A' P = -diag(q, 1)`; the generator then reads
//! `Lv = c1 y1^2 + c2 y2^2` with `c1 = -q + 2 p11 gamma1`,
//! `c2 = -1 + 2 p22 gamma2`, and the conditions ask for some `q > 0` making
//! both coefficients negative.
//!
//! The conditions are one-directional: when they fail the verdict is
//! [`Conclusion::SufficientConditionsNotMet`], never "unstable".

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linearization::{linearize, LinearizationReport};
use crate::model::{
    basic_reproduction_number, origin, positive_equilibrium, Equilibrium, EquilibriumKind, ModelParams,
};

/// Values within this relative distance of a bound are flagged marginal.
pub const MARGINAL_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("stability criteria require Tr(A) < 0 and det(A) > 0 (Tr = {trace}, det = {det})")]
    NotHurwitz { trace: f64, det: f64 },
    #[error("gamma1 = {gamma1} is not below its bound {bound}; the gamma2 bound is undefined")]
    Gamma1TooLarge { gamma1: f64, bound: f64 },
    #[error("q must be positive and finite, got {0}")]
    InvalidQ(f64),
    #[error("noise intensity {field} must be finite and >= 0, got {value}")]
    InvalidNoise { field: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RawNoise {
    omega1: f64,
    omega2: f64,
}

/// Noise intensities with derived `gamma_i = omega_i^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoise", into = "RawNoise")]
pub struct NoiseSpec {
    omega1: f64,
    omega2: f64,
    gamma1: f64,
    gamma2: f64,
}

impl NoiseSpec {
    pub fn new(omega1: f64, omega2: f64) -> Result<Self, StabilityError> {
        for (field, value) in [("omega1", omega1), ("omega2", omega2)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(StabilityError::InvalidNoise { field, value });
            }
        }
        Ok(Self { omega1, omega2, gamma1: omega1 * omega1 / 2.0, gamma2: omega2 * omega2 / 2.0 })
    }

    /// Noise-free specification.
    pub fn zero() -> Self {
        Self { omega1: 0.0, omega2: 0.0, gamma1: 0.0, gamma2: 0.0 }
    }

    /// Builds the spec from target `gamma` values; `omega_i = sqrt(2 gamma_i)`
    /// and the stored gammas are recomputed from the omegas.
    pub fn from_gammas(gamma1: f64, gamma2: f64) -> Result<Self, StabilityError> {
        for (field, value) in [("gamma1", gamma1), ("gamma2", gamma2)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(StabilityError::InvalidNoise { field, value });
            }
        }
        Self::new((2.0 * gamma1).sqrt(), (2.0 * gamma2).sqrt())
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }
    pub fn omega2(&self) -> f64 {
        self.omega2
    }
    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }
    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }
    pub fn is_zero(&self) -> bool {
        self.omega1 == 0.0 && self.omega2 == 0.0
    }
}

impl TryFrom<RawNoise> for NoiseSpec {
    type Error = StabilityError;
    fn try_from(raw: RawNoise) -> Result<Self, Self::Error> {
        NoiseSpec::new(raw.omega1, raw.omega2)
    }
}

impl From<NoiseSpec> for RawNoise {
    fn from(n: NoiseSpec) -> Self {
        RawNoise { omega1: n.omega1, omega2: n.omega2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaBounds {
    pub gamma1_max: f64,
    /// Bound on `gamma2`, evaluated at the supplied `gamma1`.
    pub gamma2_max: f64,
}

/// Open interval of admissible Lyapunov weights `q`. `hi = None` means
/// unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QInterval {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl QInterval {
    pub fn contains(&self, q: f64) -> bool {
        q > 0.0 && q > self.lo && self.hi.is_none_or(|hi| q < hi)
    }

    /// A weight well inside the interval: the geometric mean of the ends,
    /// `10 lo` when unbounded above. A zero lower end is replaced by
    /// `hi / 10` (or 1 when the interval is all of `q > 0`).
    pub fn representative(&self) -> f64 {
        match (self.lo > 0.0, self.hi) {
            (true, Some(hi)) => (self.lo * hi).sqrt(),
            (true, None) => 10.0 * self.lo,
            (false, Some(hi)) => hi / 10.0,
            (false, None) => 1.0,
        }
    }
}

/// Symmetric positive definite solution of `P A + A' P = -diag(q, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovMatrix {
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
    pub q: f64,
}

impl LyapunovMatrix {
    pub fn is_positive_definite(&self) -> bool {
        self.p11 > 0.0 && self.p11 * self.p22 - self.p12 * self.p12 > 0.0
    }

    /// `P A + A' P + diag(q, 1)`, which vanishes for an exact solution.
    pub fn residual(&self, rep: &LinearizationReport) -> [[f64; 2]; 2] {
        let (a11, a12, a21, a22) = (rep.a11, rep.a12, rep.a21, rep.a22);
        let (p11, p12, p22) = (self.p11, self.p12, self.p22);
        // PA is [[p11 a11 + p12 a21, p11 a12 + p12 a22], [p12 a11 + p22 a21, p12 a12 + p22 a22]]
        let pa11 = p11 * a11 + p12 * a21;
        let pa12 = p11 * a12 + p12 * a22;
        let pa21 = p12 * a11 + p22 * a21;
        let pa22 = p12 * a12 + p22 * a22;
        [[2.0 * pa11 + self.q, pa12 + pa21], [pa21 + pa12, 2.0 * pa22 + 1.0]]
    }

    pub fn max_abs_residual(&self, rep: &LinearizationReport) -> f64 {
        self.residual(rep).iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    StableInProbability,
    SufficientConditionsNotMet,
    /// The equilibrium is not admissible for these parameters.
    NotApplicable,
}

/// Full record of a stability check at one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub equilibrium_kind: Option<EquilibriumKind>,
    pub trace: f64,
    pub det: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub trace_ok: bool,
    pub det_ok: bool,
    /// `|Tr| det / A2`; reported when `trace_ok && det_ok`.
    pub gamma1_bound: Option<f64>,
    /// `(|Tr| det - A2 gamma1) / (A1 - |Tr| gamma1)`; reported only when
    /// `gamma1 < gamma1_bound`.
    pub gamma2_bound: Option<f64>,
    pub conditions_met: bool,
    /// Some `gamma` lies within [`MARGINAL_RTOL`] of its bound.
    pub marginal: bool,
    pub q_interval: Option<QInterval>,
    /// Weight used for `lyapunov` and `generator`.
    pub q: Option<f64>,
    pub lyapunov: Option<LyapunovMatrix>,
    /// `(c1, c2)` of the generator at `q`.
    pub generator: Option<(f64, f64)>,
    pub conclusion: Conclusion,
}

fn require_hurwitz(rep: &LinearizationReport) -> Result<f64, StabilityError> {
    if rep.trace < 0.0 && rep.det > 0.0 {
        Ok(rep.trace.abs() * rep.det)
    } else {
        Err(StabilityError::NotHurwitz { trace: rep.trace, det: rep.det })
    }
}

/// `|Tr| det / A2`.
pub fn gamma1_bound(rep: &LinearizationReport) -> Result<f64, StabilityError> {
    Ok(require_hurwitz(rep)? / rep.a2)
}

/// Noise bounds: `gamma1 < |Tr| det / A2` and, at the given `gamma1`,
/// `gamma2 < (|Tr| det - A2 gamma1) / (A1 - |Tr| gamma1)`.
pub fn gamma_bounds(rep: &LinearizationReport, gamma1: f64) -> Result<GammaBounds, StabilityError> {
    let td = require_hurwitz(rep)?;
    let gamma1_max = td / rep.a2;
    if gamma1 >= gamma1_max {
        return Err(StabilityError::Gamma1TooLarge { gamma1, bound: gamma1_max });
    }
    let gamma2_max = (td - rep.a2 * gamma1) / (rep.a1 - rep.trace.abs() * gamma1);
    Ok(GammaBounds { gamma1_max, gamma2_max })
}

/// Admissible `q` range from the two generator-coefficient inequalities:
///
/// ```text
/// a21^2 gamma1 / (|Tr| det - A2 gamma1) < q < (|Tr| det - A1 gamma2) / (a12^2 gamma2)
/// ```
///
/// Returns `Ok(None)` when no positive `q` works.
pub fn q_interval(rep: &LinearizationReport, noise: &NoiseSpec) -> Result<Option<QInterval>, StabilityError> {
    let td = require_hurwitz(rep)?;
    let (g1, g2) = (noise.gamma1, noise.gamma2);

    let lo_den = td - rep.a2 * g1;
    if lo_den <= 0.0 {
        return Ok(None);
    }
    let lo = rep.a21 * rep.a21 * g1 / lo_den;

    let hi_num = td - rep.a1 * g2;
    let hi_den = rep.a12 * rep.a12 * g2;
    if hi_num <= 0.0 {
        return Ok(None);
    }
    let hi = if hi_den > 0.0 { Some(hi_num / hi_den) } else { None };

    match hi {
        Some(hi) if lo >= hi => Ok(None),
        _ => Ok(Some(QInterval { lo, hi })),
    }
}

/// Entries of `P` for weight `q`:
///
/// ```text
/// p11 = (A2 q + a21^2) / (2 |Tr| det)
/// p22 = (A1 + a12^2 q) / (2 |Tr| det)
/// p12 = -(a12 a22 q + a21 a11) / (2 |Tr| det)
/// ```
///
/// The off-diagonal entry carries a minus sign; without it the (1,1) and
/// (2,2) equations of `P A + A' P = -diag(q, 1)` are not satisfied. The
/// generator coefficients only involve `p11` and `p22`.
pub fn lyapunov_matrix(rep: &LinearizationReport, q: f64) -> Result<LyapunovMatrix, StabilityError> {
    let td = require_hurwitz(rep)?;
    if !(q.is_finite() && q > 0.0) {
        return Err(StabilityError::InvalidQ(q));
    }
    let den = 2.0 * td;
    Ok(LyapunovMatrix {
        p11: (rep.a2 * q + rep.a21 * rep.a21) / den,
        p22: (rep.a1 + rep.a12 * rep.a12 * q) / den,
        p12: -(rep.a12 * rep.a22 * q + rep.a21 * rep.a11) / den,
        q,
    })
}

/// Coefficients `(c1, c2)` of `Lv = c1 y1^2 + c2 y2^2`.
pub fn generator_coefficients(
    rep: &LinearizationReport,
    noise: &NoiseSpec,
    q: f64,
) -> Result<(f64, f64), StabilityError> {
    let p = lyapunov_matrix(rep, q)?;
    Ok((-q + 2.0 * p.p11 * noise.gamma1, -1.0 + 2.0 * p.p22 * noise.gamma2))
}

fn is_marginal(value: f64, bound: f64) -> bool {
    (value - bound).abs() <= MARGINAL_RTOL * bound.abs()
}

fn build_verdict(
    rep: &LinearizationReport,
    noise: &NoiseSpec,
    trace: f64,
    det: f64,
    bounds: Option<(f64, Option<f64>)>,
) -> StabilityVerdict {
    let (g1, g2) = (noise.gamma1, noise.gamma2);
    let trace_ok = trace < 0.0;
    let det_ok = det > 0.0;
    let (gamma1_bound, gamma2_bound) = match bounds {
        Some((b1, b2)) if trace_ok && det_ok => (Some(b1), b2),
        _ => (None, None),
    };
    let mut marginal =
        gamma1_bound.is_some_and(|b| is_marginal(g1, b)) || gamma2_bound.is_some_and(|b| is_marginal(g2, b));
    let mut conditions_met =
        trace_ok && det_ok && gamma1_bound.is_some_and(|b| g1 < b) && gamma2_bound.is_some_and(|b| g2 < b);

    let q_int = if trace_ok && det_ok { q_interval(rep, noise).ok().flatten() } else { None };
    if conditions_met && q_int.is_none() {
        // Rounding placed the point on the wrong side of the q-interval test.
        conditions_met = false;
        marginal = true;
    }

    let q = if trace_ok && det_ok { Some(q_int.map_or(1.0, |i| i.representative())) } else { None };
    let lyapunov = q.and_then(|q| lyapunov_matrix(rep, q).ok());
    let generator = q.and_then(|q| generator_coefficients(rep, noise, q).ok());

    StabilityVerdict {
        equilibrium_kind: rep.equilibrium.map(|e| e.kind),
        trace,
        det,
        gamma1: g1,
        gamma2: g2,
        trace_ok,
        det_ok,
        gamma1_bound,
        gamma2_bound,
        conditions_met,
        marginal,
        q_interval: q_int,
        q,
        lyapunov,
        generator,
        conclusion: if conditions_met {
            Conclusion::StableInProbability
        } else {
            Conclusion::SufficientConditionsNotMet
        },
    }
}

/// Applies the mean-square stability conditions to a linearization.
pub fn check_mean_square_stability(rep: &LinearizationReport, noise: &NoiseSpec) -> StabilityVerdict {
    let bounds = gamma1_bound(rep).ok().map(|b1| {
        let b2 = gamma_bounds(rep, noise.gamma1).ok().map(|b| b.gamma2_max);
        (b1, b2)
    });
    build_verdict(rep, noise, rep.trace, rep.det, bounds)
}

/// Closed-form noise bounds at the origin, in terms of `R0`:
///
/// ```text
/// gamma1 < delta (delta + sigma) (1 - R0^2) / (sigma + delta (1 - R0^2))
/// gamma2 < sigma [delta (delta + sigma)(1 - R0^2) - (sigma + delta (1 - R0^2)) gamma1]
///          / [delta (delta + sigma (1 - R0^2)) - (delta + sigma) gamma1]
/// ```
///
/// Meaningful for `R0 < 1`. The `gamma2` bound is `None` unless `gamma1` is
/// below the `gamma1` bound.
pub fn origin_gamma_bounds(params: &ModelParams, gamma1: f64) -> (f64, Option<f64>) {
    let (d, s) = (params.delta(), params.sigma());
    let r0 = basic_reproduction_number(params);
    let w = 1.0 - r0 * r0;
    let b1 = d * (d + s) * w / (s + d * w);
    let b2 = (gamma1 < b1).then(|| s * (d * (d + s) * w - (s + d * w) * gamma1) / (d * (d + s * w) - (d + s) * gamma1));
    (b1, b2)
}

/// Verdicts for both equilibria of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriaStability {
    pub r0: f64,
    pub origin: StabilityVerdict,
    pub positive_equilibrium: Equilibrium,
    /// `None` unless `E+` exists (`R0 > 1`).
    pub positive: Option<StabilityVerdict>,
}

/// Stability in probability of `E0` and `E+` under the given noise.
///
/// `E0` uses `Tr = -(delta + sigma)`, `det = delta sigma (1 - R0^2)` and the
/// closed-form bounds of [`origin_gamma_bounds`]; `E+` uses the generic
/// conditions on its linearization.
pub fn classify_equilibria_stability(params: &ModelParams, noise: &NoiseSpec) -> EquilibriaStability {
    let r0 = basic_reproduction_number(params);
    let (d, s) = (params.delta(), params.sigma());
    let trace = -(d + s);
    let det = d * s * (1.0 - r0 * r0);
    let origin_rep = linearize(params, &origin());
    let bounds = (trace < 0.0 && det > 0.0).then(|| origin_gamma_bounds(params, noise.gamma1));
    let origin_verdict = build_verdict(&origin_rep, noise, trace, det, bounds);

    let eq = positive_equilibrium(params);
    let positive = eq.exists.then(|| check_mean_square_stability(&linearize(params, &eq), noise));

    EquilibriaStability { r0, origin: origin_verdict, positive_equilibrium: eq, positive }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tumv_rep() -> LinearizationReport {
        let p = ModelParams::tumv();
        linearize(&p, &positive_equilibrium(&p))
    }

    fn sym() -> LinearizationReport {
        LinearizationReport::from_matrix(-1.5, 0.5, 0.5, -1.5)
    }

    #[test]
    fn noise_spec_derivation() {
        let n = NoiseSpec::new(0.3, 0.0).unwrap();
        assert_eq!(n.gamma1(), 0.3 * 0.3 / 2.0);
        assert_eq!(n.gamma2(), 0.0);
        assert!(NoiseSpec::new(-0.1, 0.0).is_err());
        assert!(NoiseSpec::new(0.1, f64::NAN).is_err());
    }

    #[test]
    fn tumv_bounds() {
        let rep = tumv_rep();
        let b = gamma_bounds(&rep, 0.0).unwrap();
        assert!((b.gamma1_max - 0.02000961).abs() <= 1e-8);
        // gamma2_max(g1) = (A2/|Tr|) (gamma1_max - g1) / (A1/|Tr| - g1)
        assert!((rep.a2 / rep.trace.abs() - 0.01947893).abs() <= 1e-8);
        assert!((rep.a1 / rep.trace.abs() - 0.02012510).abs() <= 1e-8);
        for g1 in [0.0, 0.005, 0.01, 0.015] {
            let b = gamma_bounds(&rep, g1).unwrap();
            let printed = 0.01947893 * (0.02000961 - g1) / (0.02012510 - g1);
            assert!((b.gamma2_max - printed).abs() <= 1e-6 * printed, "{} vs {printed}", b.gamma2_max);
        }
        assert!(matches!(gamma_bounds(&rep, 0.03), Err(StabilityError::Gamma1TooLarge { .. })));
    }

    #[test]
    fn gamma_bounds_zero_gamma1() {
        let rep = sym();
        let b = gamma_bounds(&rep, 0.0).unwrap();
        assert_eq!(b.gamma2_max, rep.trace.abs() * rep.det / rep.a1);
        assert!((b.gamma1_max - 6.0 / 4.25).abs() < 1e-15);
    }

    #[test]
    fn gamma_bounds_rejects_unstable_matrix() {
        let rep = LinearizationReport::from_matrix(1.0, 0.0, 0.0, -2.0);
        assert!(matches!(gamma_bounds(&rep, 0.0), Err(StabilityError::NotHurwitz { .. })));
        let rep = LinearizationReport::from_matrix(-1.0, 2.0, 2.0, -1.0);
        assert!(matches!(lyapunov_matrix(&rep, 1.0), Err(StabilityError::NotHurwitz { .. })));
    }

    #[test]
    fn tumv_verdicts() {
        let rep = tumv_rep();
        assert!(check_mean_square_stability(&rep, &NoiseSpec::zero()).conditions_met);
        let v = check_mean_square_stability(&rep, &NoiseSpec::from_gammas(0.03, 0.0).unwrap());
        assert!(!v.conditions_met);
        assert!(v.gamma2_bound.is_none());
        assert_eq!(v.conclusion, Conclusion::SufficientConditionsNotMet);
        let v = check_mean_square_stability(&rep, &NoiseSpec::from_gammas(0.01, 0.01).unwrap());
        assert!(v.conditions_met);
        let (c1, c2) = v.generator.unwrap();
        assert!(c1 < 0.0 && c2 < 0.0);
    }

    #[test]
    fn q_interval_example() {
        let i = q_interval(&sym(), &NoiseSpec::from_gammas(0.5, 0.5).unwrap()).unwrap().unwrap();
        assert!((i.lo - 0.125 / 3.875).abs() < 1e-12);
        assert!((i.hi.unwrap() - 31.0).abs() < 1e-12);
    }

    #[test]
    fn q_interval_edge_cases() {
        let rep = sym();
        let i = q_interval(&rep, &NoiseSpec::from_gammas(0.0, 0.1).unwrap()).unwrap().unwrap();
        assert_eq!(i.lo, 0.0);
        let g2 = NoiseSpec::from_gammas(0.0, 0.1).unwrap().gamma2();
        assert!((i.hi.unwrap() - (6.0 - 4.25 * g2) / (0.25 * g2)).abs() < 1e-12);

        let i = q_interval(&rep, &NoiseSpec::from_gammas(0.3, 0.0).unwrap()).unwrap().unwrap();
        assert!(i.hi.is_none());
        assert_eq!(i.representative(), 10.0 * i.lo);

        let i = q_interval(&rep, &NoiseSpec::zero()).unwrap().unwrap();
        assert_eq!((i.lo, i.hi), (0.0, None));
        assert_eq!(i.representative(), 1.0);

        assert_eq!(q_interval(&rep, &NoiseSpec::from_gammas(2.0, 0.1).unwrap()).unwrap(), None);
    }

    #[test]
    fn lyapunov_examples() {
        let p = lyapunov_matrix(&sym(), 1.0).unwrap();
        assert!((p.p11 - 0.375).abs() < 1e-15);
        assert!((p.p22 - 0.375).abs() < 1e-15);
        assert!((p.p12 - 0.125).abs() < 1e-15);
        assert!(p.max_abs_residual(&sym()) < 1e-15);

        let diag = LinearizationReport::from_matrix(-2.0, 0.0, 0.0, -5.0);
        let p = lyapunov_matrix(&diag, 1.0).unwrap();
        assert!((p.p11 - 0.25).abs() < 1e-15 && (p.p22 - 0.1).abs() < 1e-15 && p.p12 == 0.0);

        let rep = tumv_rep();
        let p = lyapunov_matrix(&rep, 1.0).unwrap();
        assert!(p.is_positive_definite());
        assert!(p.max_abs_residual(&rep) <= 1e-10);

        assert!(matches!(lyapunov_matrix(&sym(), 0.0), Err(StabilityError::InvalidQ(_))));
    }

    #[test]
    fn generator_examples() {
        assert_eq!(generator_coefficients(&sym(), &NoiseSpec::zero(), 3.0).unwrap(), (-3.0, -1.0));
        let (c1, c2) = generator_coefficients(&sym(), &NoiseSpec::from_gammas(0.5, 0.5).unwrap(), 1.0).unwrap();
        assert!((c1 + 0.625).abs() < 1e-12 && (c2 + 0.625).abs() < 1e-12);

        let noise = NoiseSpec::from_gammas(0.5, 0.5).unwrap();
        let i = q_interval(&sym(), &noise).unwrap().unwrap();
        let (c1, _) = generator_coefficients(&sym(), &noise, i.lo * (1.0 - 1e-6)).unwrap();
        assert!(c1 >= 0.0);
        let (_, c2) = generator_coefficients(&sym(), &noise, i.hi.unwrap() * (1.0 + 1e-6)).unwrap();
        assert!(c2 >= 0.0);
    }

    #[test]
    fn classify_tumv() {
        let c = classify_equilibria_stability(&ModelParams::tumv(), &NoiseSpec::from_gammas(0.01, 0.01).unwrap());
        let pos = c.positive.unwrap();
        assert_eq!(pos.conclusion, Conclusion::StableInProbability);
        assert!(!c.origin.det_ok);
        assert!(c.origin.gamma1_bound.is_none());
        assert_eq!(c.origin.conclusion, Conclusion::SufficientConditionsNotMet);
    }

    #[test]
    fn classify_subthreshold() {
        let p = ModelParams::new(0.05, 0.5, 0.2, 0.3, 100.0).unwrap();
        let c = classify_equilibria_stability(&p, &NoiseSpec::zero());
        assert!(c.r0 < 1.0);
        assert!(c.positive.is_none());
        assert!(!c.positive_equilibrium.exists);
        assert_eq!(c.origin.conclusion, Conclusion::StableInProbability);
    }

    #[test]
    fn origin_bounds_match_generic_formula() {
        let p = ModelParams::new(0.05, 0.5, 0.2, 0.3, 100.0).unwrap();
        let rep = linearize(&p, &origin());
        let (b1, _) = origin_gamma_bounds(&p, 0.0);
        let g = gamma1_bound(&rep).unwrap();
        assert!((b1 - g).abs() <= 1e-12 * g);
        let g1 = 0.3 * b1;
        let (_, b2) = origin_gamma_bounds(&p, g1);
        let generic = gamma_bounds(&rep, g1).unwrap().gamma2_max;
        assert!((b2.unwrap() - generic).abs() <= 1e-12 * generic);
    }

    #[test]
    fn marginal_flag() {
        let rep = sym();
        let b1 = gamma1_bound(&rep).unwrap();
        let noise = NoiseSpec::new((2.0 * b1).sqrt(), 0.0).unwrap();
        let v = check_mean_square_stability(&rep, &noise);
        assert!(v.marginal);
        assert!(!v.conditions_met || v.q_interval.is_some());
    }

    #[test]
    fn representative_is_inside() {
        for i in [
            QInterval { lo: 0.5, hi: Some(8.0) },
            QInterval { lo: 0.5, hi: None },
            QInterval { lo: 0.0, hi: Some(3.0) },
            QInterval { lo: 0.0, hi: None },
        ] {
            assert!(i.contains(i.representative()), "{i:?}");
        }
    }
}
