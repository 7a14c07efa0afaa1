//! Serializable reports written by the commands.
//!
//! JSON cannot carry `NaN` or infinities, so any coordinate that may be
//! non-finite is an `Option<f64>` and written as `null`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use ssrna_core::linearization::LinearizationReport;
use ssrna_core::model::{Equilibrium, EquilibriumKind, RawParams};
use ssrna_core::montecarlo::{EnsembleStats, ExceedanceEstimate};
use ssrna_core::simulator::Trajectory;
use ssrna_core::stability::{Conclusion, EquilibriaStability, NoiseSpec, StabilityVerdict};

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub omega1: f64,
    pub omega2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl From<&NoiseSpec> for NoiseReport {
    fn from(n: &NoiseSpec) -> Self {
        Self { omega1: n.omega1(), omega2: n.omega2(), gamma1: n.gamma1(), gamma2: n.gamma2() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub exists: bool,
    pub p: Option<f64>,
    pub m: Option<f64>,
}

impl From<&Equilibrium> for EquilibriumReport {
    fn from(e: &Equilibrium) -> Self {
        Self { kind: e.kind, exists: e.exists, p: finite(e.p_star), m: finite(e.m_star) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub trace: f64,
    pub det: f64,
    #[serde(rename = "A1")]
    pub a1: f64,
    #[serde(rename = "A2")]
    pub a2: f64,
}

impl From<&LinearizationReport> for MatrixReport {
    fn from(r: &LinearizationReport) -> Self {
        Self { a11: r.a11, a12: r.a12, a21: r.a21, a22: r.a22, trace: r.trace, det: r.det, a1: r.a1, a2: r.a2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumAnalysis {
    pub equilibrium: EquilibriumReport,
    pub linearization: MatrixReport,
    pub verdict: StabilityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub model: RawParams,
    pub b: f64,
    pub noise: NoiseReport,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub mixed_sign_equilibrium: EquilibriumReport,
    pub origin: EquilibriumAnalysis,
    /// `None` when `R0 <= 1`.
    pub positive: Option<EquilibriumAnalysis>,
}

impl AnalysisReport {
    pub fn new(
        model: RawParams,
        b: f64,
        noise: &NoiseSpec,
        stability: &EquilibriaStability,
        origin_lin: &LinearizationReport,
        positive_lin: Option<&LinearizationReport>,
        mixed: &Equilibrium,
    ) -> Self {
        let origin = EquilibriumAnalysis {
            equilibrium: EquilibriumReport::from(&ssrna_core::origin()),
            linearization: origin_lin.into(),
            verdict: stability.origin.clone(),
        };
        let positive = match (&stability.positive, positive_lin) {
            (Some(v), Some(lin)) => Some(EquilibriumAnalysis {
                equilibrium: (&stability.positive_equilibrium).into(),
                linearization: lin.into(),
                verdict: v.clone(),
            }),
            _ => None,
        };
        Self { model, b, noise: noise.into(), r0: stability.r0, mixed_sign_equilibrium: mixed.into(), origin, positive }
    }

    /// Human-readable summary mirroring the JSON report.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let _ = writeln!(
            s,
            "model: r={} alpha={} delta={} sigma={} K={} (b={:e})",
            m.r, m.alpha, m.delta, m.sigma, m.k, self.b
        );
        let _ = writeln!(
            s,
            "noise: omega1={} omega2={} (gamma1={:.6e} gamma2={:.6e})",
            self.noise.omega1, self.noise.omega2, self.noise.gamma1, self.noise.gamma2
        );
        let _ = writeln!(s, "R0 = {:.6}", self.r0);
        let mx = &self.mixed_sign_equilibrium;
        match (mx.p, mx.m) {
            (Some(p), Some(m)) => {
                let _ = writeln!(s, "mixed-sign equilibrium: ({p:.6e}, {m:.6e}), outside the biological region");
            }
            _ => {
                let _ = writeln!(s, "mixed-sign equilibrium: none (singular parameters)");
            }
        }
        write_analysis(&mut s, "E0 (origin)", &self.origin);
        match &self.positive {
            Some(a) => write_analysis(&mut s, "E+ (positive)", a),
            None => {
                let _ = writeln!(s, "\nE+ (positive): does not exist (R0 <= 1)");
            }
        }
        s
    }
}

fn conclusion_text(v: &StabilityVerdict) -> &'static str {
    match v.conclusion {
        Conclusion::StableInProbability => "stable in probability (sufficient conditions met)",
        Conclusion::SufficientConditionsNotMet => "sufficient conditions not met (no conclusion)",
        Conclusion::NotApplicable => "not applicable",
    }
}

fn write_analysis(s: &mut String, title: &str, a: &EquilibriumAnalysis) {
    let e = &a.equilibrium;
    let l = &a.linearization;
    let v = &a.verdict;
    let _ = writeln!(s);
    match (e.p, e.m) {
        (Some(p), Some(m)) => {
            let _ = writeln!(s, "{title}: ({p:.6}, {m:.6})");
        }
        _ => {
            let _ = writeln!(s, "{title}");
        }
    }
    let _ = writeln!(s, "  A = [[{:.10}, {:.10}], [{:.10}, {:.10}]]", l.a11, l.a12, l.a21, l.a22);
    let _ = writeln!(s, "  Tr = {:.10}  det = {:.10e}  A1 = {:.10e}  A2 = {:.10e}", l.trace, l.det, l.a1, l.a2);
    if !(v.trace_ok && v.det_ok) {
        let _ = writeln!(s, "  linearization is not Hurwitz (Tr < 0 and det > 0 required)");
    }
    if let Some(b1) = v.gamma1_bound {
        let _ = writeln!(s, "  gamma1 = {:.6e} vs bound {:.10}", v.gamma1, b1);
    }
    if let Some(b2) = v.gamma2_bound {
        let _ = writeln!(s, "  gamma2 = {:.6e} vs bound {:.10}", v.gamma2, b2);
    }
    if let Some(i) = v.q_interval {
        match i.hi {
            Some(hi) => {
                let _ = writeln!(s, "  q in ({:.6e}, {:.6e})", i.lo, hi);
            }
            None => {
                let _ = writeln!(s, "  q in ({:.6e}, inf)", i.lo);
            }
        }
    }
    if let (Some(q), Some((c1, c2))) = (v.q, v.generator) {
        let _ = writeln!(s, "  at q = {q:.6e}: c1 = {c1:.6e}, c2 = {c2:.6e}");
    }
    if v.marginal {
        let _ = writeln!(s, "  noise lies on a bound (marginal)");
    }
    let _ = writeln!(s, "  verdict: {}", conclusion_text(v));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub model: RawParams,
    pub noise: NoiseReport,
    pub seed: u64,
    pub dt: f64,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub model: RawParams,
    pub noise: NoiseReport,
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    pub anchor: EquilibriumReport,
    pub analytic: StabilityVerdict,
    pub estimate: Option<ExceedanceEstimate>,
    pub stats: EnsembleStats,
}
