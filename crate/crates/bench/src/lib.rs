//! Benchmark fixtures shared by the criterion targets in `benches/`.

use ssrna_core::montecarlo::displaced_initial;
use ssrna_core::{positive_equilibrium, EnsembleConfig, ModelParams, NoiseSpec, SimConfig, State};

/// TuMV ensemble around `E+`, 1% displacement, `epsilon1 = 10% |E+|`.
pub fn tumv_ensemble(replicates: usize, t_end: f64) -> (ModelParams, EnsembleConfig) {
    let params = ModelParams::tumv();
    let anchor = positive_equilibrium(&params);
    let cfg = EnsembleConfig {
        replicates,
        sim: SimConfig::new(0.3, t_end, displaced_initial(&params, &anchor, 0.01)).with_stride(100),
        noise: NoiseSpec::new(0.1, 0.1).expect("valid noise"),
        anchor,
        epsilon1: 0.1 * anchor.state().norm(),
        master_seed: 1,
    };
    (params, cfg)
}

pub fn tumv_ode(t_end: f64) -> (ModelParams, SimConfig) {
    (ModelParams::tumv(), SimConfig::new(0.3, t_end, State::new(1.0, 0.0)).with_stride(1000))
}
