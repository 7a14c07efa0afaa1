//! Within-cell ssRNA virus replication model with multiplicative stochastic
//! perturbations.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: parameters, the planar vector field, equilibria and `R0`.
//! * [`linearization`]: drift matrix of the centralized system at an equilibrium.
//! * [`stability`]: noise bounds, Lyapunov matrix and generator coefficients for
//!   asymptotic mean-square stability of the linear part (hence stability in
//!   probability of the nonlinear system).
//! * [`simulator`]: fixed-step RK4 / Euler and Euler–Maruyama integrators.
//! * [`montecarlo`]: reproducible ensembles, exceedance estimators and sweeps.

pub mod linearization;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod simulator;
pub mod stability;

pub use linearization::{det_closed_form, linearize, matrix_invariants, LinearizationReport, MatrixInvariants};
pub use model::{
    basic_reproduction_number, divergence, mixed_sign_equilibrium, origin, positive_equilibrium, validate_params,
    vector_field, Equilibrium, EquilibriumKind, ModelParams, ParamError, State,
};
pub use montecarlo::{
    estimate_stability_in_probability, run_ensemble, sweep, EnsembleConfig, EnsembleError, EnsembleStats,
    ExceedanceEstimate, SweepCell, SweepRow,
};
pub use simulator::{
    centralized_rhs, default_dt, integrate_euler, integrate_ode, integrate_sde, Scheme, SimConfig, SimError, Trajectory,
};
pub use stability::{
    check_mean_square_stability, classify_equilibria_stability, gamma_bounds, generator_coefficients, lyapunov_matrix,
    q_interval, EquilibriaStability, GammaBounds, LyapunovMatrix, NoiseSpec, QInterval, StabilityError,
    StabilityVerdict,
};
