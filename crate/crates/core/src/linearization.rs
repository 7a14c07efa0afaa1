//! Drift matrix of the system centralized at an equilibrium.

use serde::{Deserialize, Serialize};

use crate::model::{basic_reproduction_number, Equilibrium, ModelParams};

/// Linear part `A = (a_ij)` of the centralized drift and its scalar
/// invariants. `a1 = det + a11^2`, `a2 = det + a22^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub trace: f64,
    pub det: f64,
    pub a1: f64,
    pub a2: f64,
    /// `None` when the matrix was supplied directly rather than derived from
    /// the model.
    pub equilibrium: Option<Equilibrium>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixInvariants {
    pub trace: f64,
    pub det: f64,
    pub a1: f64,
    pub a2: f64,
}

impl LinearizationReport {
    /// Builds a report from raw matrix entries (row-major).
    pub fn from_matrix(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self::with_equilibrium(a11, a12, a21, a22, None)
    }

    fn with_equilibrium(a11: f64, a12: f64, a21: f64, a22: f64, equilibrium: Option<Equilibrium>) -> Self {
        let inv = invariants_of(a11, a12, a21, a22);
        Self { a11, a12, a21, a22, trace: inv.trace, det: inv.det, a1: inv.a1, a2: inv.a2, equilibrium }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a21, self.a22]]
    }

    pub fn is_finite(&self) -> bool {
        [self.a11, self.a12, self.a21, self.a22].iter().all(|v| v.is_finite())
    }
}

fn invariants_of(a11: f64, a12: f64, a21: f64, a22: f64) -> MatrixInvariants {
    let det = a11 * a22 - a12 * a21;
    MatrixInvariants { trace: a11 + a22, det, a1: det + a11 * a11, a2: det + a22 * a22 }
}

/// Linearizes the model at `eq`:
///
/// ```text
/// a11 = -(b r m* + delta)        a12 = r (1 - b (p* + 2 m*))
/// a21 = alpha r (1 - b (2 p* + m*))   a22 = -(alpha b r p* + sigma)
/// ```
pub fn linearize(params: &ModelParams, eq: &Equilibrium) -> LinearizationReport {
    let (r, alpha, b) = (params.r(), params.alpha(), params.b());
    let (p, m) = (eq.p_star, eq.m_star);
    LinearizationReport::with_equilibrium(
        -(b * r * m + params.delta()),
        r * (1.0 - b * (p + 2.0 * m)),
        alpha * r * (1.0 - b * (2.0 * p + m)),
        -(alpha * b * r * p + params.sigma()),
        Some(*eq),
    )
}

/// Recomputes trace, determinant, `A1` and `A2` from the entries.
pub fn matrix_invariants(rep: &LinearizationReport) -> MatrixInvariants {
    invariants_of(rep.a11, rep.a12, rep.a21, rep.a22)
}

/// Determinant of `A` at `E+` in closed form: `2 delta sigma (R0 - 1)`.
pub fn det_closed_form(params: &ModelParams) -> f64 {
    2.0 * params.delta() * params.sigma() * (basic_reproduction_number(params) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{origin, positive_equilibrium, vector_field, State};

    fn unit() -> ModelParams {
        ModelParams::new(2.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn tumv_entries() {
        let p = ModelParams::tumv();
        let rep = linearize(&p, &positive_equilibrium(&p));
        let expected = [-0.01862524, 0.01452332, -0.00378021, -0.01797908];
        for (got, want) in [rep.a11, rep.a12, rep.a21, rep.a22].iter().zip(expected) {
            assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
        }
        assert!((rep.trace + 0.03660432).abs() <= 1e-8);
        assert!((rep.det - 0.00038977).abs() <= 1e-8);
        assert!((det_closed_form(&p) - rep.det).abs() <= 1e-10 * rep.det);
    }

    #[test]
    fn origin_entries() {
        let p = ModelParams::new(0.7, 0.3, 0.2, 0.9, 5.0).unwrap();
        let rep = linearize(&p, &origin());
        assert_eq!(rep.matrix(), [[-0.2, 0.7], [0.3 * 0.7, -0.9]]);
        assert_eq!(rep.trace, -(0.2 + 0.9));
        let r0 = basic_reproduction_number(&p);
        let want = 0.2 * 0.9 * (1.0 - r0 * r0);
        assert!((rep.det - want).abs() <= 1e-12 * want.abs());
    }

    #[test]
    fn unit_example() {
        let p = unit();
        let rep = linearize(&p, &positive_equilibrium(&p));
        assert_eq!(rep.matrix(), [[-1.5, 0.5], [0.5, -1.5]]);
        let inv = matrix_invariants(&rep);
        assert_eq!((inv.trace, inv.det, inv.a1, inv.a2), (-3.0, 2.0, 4.25, 4.25));
        assert_eq!(det_closed_form(&p), 2.0);
    }

    #[test]
    fn degenerate_determinant() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(det_closed_form(&p), 0.0);
    }

    #[test]
    fn matches_finite_difference_jacobian() {
        for p in [ModelParams::tumv(), unit(), ModelParams::new(0.9, 0.4, 0.05, 0.3, 200.0).unwrap()] {
            for eq in [origin(), positive_equilibrium(&p)] {
                let rep = linearize(&p, &eq);
                let h = 1e-6 * p.k().max(1.0);
                let s = eq.state();
                let dp =
                    (vector_field(&p, s + State::new(h, 0.0)) - vector_field(&p, s - State::new(h, 0.0))) * (0.5 / h);
                let dm =
                    (vector_field(&p, s + State::new(0.0, h)) - vector_field(&p, s - State::new(0.0, h))) * (0.5 / h);
                let scale = rep.matrix().iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
                for (got, want) in [(rep.a11, dp.p), (rep.a21, dp.m), (rep.a12, dm.p), (rep.a22, dm.m)] {
                    assert!((got - want).abs() <= 1e-6 * scale, "{got} vs {want}");
                }
            }
        }
    }
}
